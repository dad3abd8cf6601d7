#pragma once

#include "aivshop/madqn.hpp"
#include "aivshop/sim.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace aivshop {

struct RunResult {
    std::string policy;
    int jobs = 0;
    std::uint64_t seed = 0;
    int rep = 0;
    double total_tardiness = 0;
    int n_tardy = 0;
    double total_energy = 0;
    double wall_ms = 0; // diagnostics only; excluded from deterministic outputs
    bool ok = true;
};

struct MetricStats {
    double mean = 0, min = 0, q1 = 0, median = 0, q3 = 0, max = 0, stddev = 0;
};

struct AggregateStats {
    std::string policy;
    int jobs = 0;
    int n = 0;
    MetricStats tardiness;
    MetricStats tardy;
    MetricStats energy;
};

// Builds a fresh policy per replication; MADQN evaluators share a read-only
// brain snapshot, heuristics are stateless.
using PolicyFactory = std::function<std::unique_ptr<DecisionPolicy>(const Scenario&)>;

PolicyFactory heuristic_factory(const std::string& name);
PolicyFactory madqn_factory(const MadqnBrain& brain);

struct ReplicationPlan {
    ScenarioConfig base_config; // seed = base seed; layout held fixed across reps
    int n_reps = 1;
    int workers = 1;
};

// Replication r regenerates arrivals, processing times and breakdowns with
// seed base+r while keeping the layout of the base seed, so every policy
// sees bit-identical inputs for a given r (common random numbers).
ScenarioConfig replication_config(const ScenarioConfig& base, int rep);
std::vector<RunResult> run_replications(const std::string& policy_name, const PolicyFactory& factory,
                                        const ReplicationPlan& plan, int* failures = nullptr);

MetricStats summarize_metric(std::vector<double> values);
AggregateStats summarize(const std::vector<RunResult>& results);

// Quantiles by linear interpolation between closest ranks; stddev is the
// sample standard deviation (n-1).
double quantile_sorted(const std::vector<double>& sorted, double p);

// One-sided paired Wilcoxon signed-rank test of H1: "a tends to exceed b",
// normal approximation with tie correction. Returns the p-value.
double wilcoxon_signed_rank_one_sided(const std::vector<double>& a, const std::vector<double>& b);

void export_table_csv(const std::string& path_stem, const std::vector<AggregateStats>& stats,
                      const std::vector<std::string>& policy_order, const std::vector<int>& job_counts);
void export_boxplot_csv(const std::string& path, const std::vector<RunResult>& results);

} // namespace aivshop
