#pragma once

#include "aivshop/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace aivshop {

// One processing step of a product: the set of workstations able to run it
// and the processing time on each. Keys are workstation ids, ascending.
struct OperationSpec {
    std::vector<int> eligible;
    std::vector<double> proc_time; // aligned with eligible

    double time_on(int ws) const;
    bool can_run_on(int ws) const;
    double mean_time() const; // arithmetic mean over eligible workstations
    bool operator==(const OperationSpec&) const = default;
};

struct ProductSpec {
    std::vector<OperationSpec> ops;
    bool operator==(const ProductSpec&) const = default;
};

struct JobSpec {
    int product = 0;
    double arrival = 0;
    double t_draw = 0; // due-date tightness coefficient, persisted per job
    double due = 0;
    bool operator==(const JobSpec&) const = default;
};

struct BreakdownWindow {
    double start = 0;
    double duration = 0;
    bool operator==(const BreakdownWindow&) const = default;
};

// Node indexing: 0 = storage, 1..m = workstations, m+1..m+c = charging stations.
struct Layout {
    int n_nodes = 0;
    std::vector<double> transfer; // n_nodes x n_nodes, symmetric, zero diagonal

    double at(int a, int b) const { return transfer[static_cast<std::size_t>(a) * n_nodes + b]; }
    double& at(int a, int b) { return transfer[static_cast<std::size_t>(a) * n_nodes + b]; }
    bool operator==(const Layout&) const = default;
};

struct ScenarioConfig {
    int n_jobs = 20;
    int n_products = 4;
    int n_workstations = 5;
    int n_charging = 2;
    int aiv_count = 2;
    int aiv_capacity = 2;
    double charge_threshold = 40.0; // pct; trip triggered strictly below
    double recharge_duration = 30.0;
    double arrival_mean = 5.0;    // mean inter-arrival time
    double due_t_mu = 0.0;        // 0 -> auto n_jobs / 4
    double due_t_sigma = 4.0;
    double tbi_mean = 200.0;      // mean time between unavailabilities
    double trf_mean = 50.0;       // mean time to repair
    double layout_min = 10.0;
    double layout_max = 50.0;
    double pt_min = 5.0;          // processing times, integer draws
    double pt_max = 50.0;
    double breakdown_horizon = 0; // 0 -> auto
    std::uint64_t seed = 1;
    std::uint64_t layout_seed = 0; // 0 -> same as seed

    double effective_due_mu() const { return due_t_mu > 0 ? due_t_mu : n_jobs / 4.0; }
    std::uint64_t effective_layout_seed() const { return layout_seed ? layout_seed : seed; }
    bool operator==(const ScenarioConfig&) const = default;
};

struct Scenario {
    ScenarioConfig config;
    std::vector<ProductSpec> products;
    std::vector<JobSpec> jobs;
    Layout layout;
    std::vector<std::vector<BreakdownWindow>> breakdowns; // per workstation

    int n_workstations() const { return config.n_workstations; }
    int n_jobs() const { return static_cast<int>(jobs.size()); }
    int storage_node() const { return 0; }
    int workstation_node(int ws) const { return 1 + ws; }
    int charging_node(int cs) const { return 1 + config.n_workstations + cs; }
    int n_nodes() const { return 1 + config.n_workstations + config.n_charging; }

    const OperationSpec& op(int product, int op_index) const { return products[product].ops[op_index]; }
    const OperationSpec& job_op(int job, int op_index) const { return op(jobs[job].product, op_index); }
    int n_ops(int job) const { return static_cast<int>(products[jobs[job].product].ops.size()); }

    // Sum of per-operation mean processing times for one job.
    double total_mean_processing(int job) const;

    bool operator==(const Scenario&) const = default;
};

// Table-driven default routing for the bundled four-product case study.
std::vector<std::vector<std::vector<int>>> default_routings();

Scenario generate_scenario(const ScenarioConfig& config);

double due_date(double arrival, double t_draw, double total_mean_processing);

void save_scenario(const Scenario& s, const std::string& path);
std::string scenario_to_string(const Scenario& s);
Scenario load_scenario(const std::string& path);
Scenario scenario_from_string(const std::string& text);

} // namespace aivshop
