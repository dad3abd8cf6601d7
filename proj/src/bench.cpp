#include "aivshop/bench.hpp"

#include "aivshop/heuristics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace aivshop {

PolicyFactory heuristic_factory(const std::string& name) {
    const HeuristicPolicy proto = make_heuristic(name);
    return [proto](const Scenario&) { return std::make_unique<HeuristicPolicy>(proto); };
}

PolicyFactory madqn_factory(const MadqnBrain& brain) {
    return [&brain](const Scenario&) { return std::make_unique<MadqnPolicy>(brain, 0.0); };
}

ScenarioConfig replication_config(const ScenarioConfig& base, int rep) {
    ScenarioConfig c = base;
    c.layout_seed = base.effective_layout_seed();
    c.seed = base.seed + static_cast<std::uint64_t>(rep);
    return c;
}

std::vector<RunResult> run_replications(const std::string& policy_name, const PolicyFactory& factory,
                                        const ReplicationPlan& plan, int* failures) {
    if (plan.n_reps < 1) throw std::invalid_argument("need at least one replication");
    std::vector<RunResult> results(plan.n_reps);

    auto worker = [&](int rep) {
        RunResult& r = results[rep];
        r.policy = policy_name;
        r.jobs = plan.base_config.n_jobs;
        r.rep = rep;
        const ScenarioConfig cfg = replication_config(plan.base_config, rep);
        r.seed = cfg.seed;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const Scenario scn = generate_scenario(cfg);
            auto policy = factory(scn);
            Simulation sim(scn, *policy);
            const RunMetrics m = sim.run();
            r.total_tardiness = m.total_tardiness;
            r.n_tardy = m.n_tardy;
            r.total_energy = m.total_energy_pct;
        } catch (const std::exception&) {
            r.ok = false;
        }
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    };

    const int workers = std::max(1, plan.workers);
    if (workers == 1) {
        for (int rep = 0; rep < plan.n_reps; ++rep) worker(rep);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                while (true) {
                    const int rep = next.fetch_add(1);
                    if (rep >= plan.n_reps) break;
                    worker(rep);
                }
            });
        for (auto& t : pool) t.join();
    }

    int failed = 0;
    std::vector<RunResult> out;
    out.reserve(results.size());
    for (auto& r : results) {
        if (r.ok) out.push_back(std::move(r));
        else ++failed;
    }
    if (failures) *failures = failed;
    return out;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double pos = p * (static_cast<double>(sorted.size()) - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

MetricStats summarize_metric(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("summarize of empty sample");
    MetricStats s;
    std::sort(values.begin(), values.end());
    double sum = 0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile_sorted(values, 0.25);
    s.median = quantile_sorted(values, 0.5);
    s.q3 = quantile_sorted(values, 0.75);
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    return s;
}

AggregateStats summarize(const std::vector<RunResult>& results) {
    if (results.empty()) throw std::invalid_argument("summarize of empty result set");
    AggregateStats a;
    a.policy = results.front().policy;
    a.jobs = results.front().jobs;
    a.n = static_cast<int>(results.size());
    std::vector<double> tard, tardy, energy;
    for (const auto& r : results) {
        tard.push_back(r.total_tardiness);
        tardy.push_back(static_cast<double>(r.n_tardy));
        energy.push_back(r.total_energy);
    }
    a.tardiness = summarize_metric(std::move(tard));
    a.tardy = summarize_metric(std::move(tardy));
    a.energy = summarize_metric(std::move(energy));
    return a;
}

double wilcoxon_signed_rank_one_sided(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("wilcoxon: unpaired samples");
    struct Diff {
        double abs;
        int sign;
    };
    std::vector<Diff> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d == 0) continue; // zero differences dropped
        diffs.push_back({std::abs(d), d > 0 ? 1 : -1});
    }
    const std::size_t n = diffs.size();
    if (n == 0) return 1.0; // no evidence either way
    std::sort(diffs.begin(), diffs.end(), [](const Diff& l, const Diff& r) { return l.abs < r.abs; });

    // Average ranks over ties; collect the tie correction term.
    std::vector<double> rank(n);
    double tie_term = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && diffs[j + 1].abs == diffs[i].abs) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[k] = avg;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    double w_plus = 0;
    for (std::size_t k = 0; k < n; ++k)
        if (diffs[k].sign > 0) w_plus += rank[k];

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0) return w_plus > mean ? 0.0 : 1.0;
    // Continuity-corrected upper tail: P(W+ >= w_plus).
    const double z = (w_plus - mean - 0.5) / std::sqrt(var);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

namespace {

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_table(const std::string& path, const std::vector<AggregateStats>& stats,
                 const std::vector<std::string>& policy_order, const std::vector<int>& job_counts,
                 double MetricStats::*field, MetricStats AggregateStats::*metric) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << "jobs";
    for (const auto& p : policy_order) f << "," << p;
    f << "\n";
    for (int jobs : job_counts) {
        f << jobs;
        for (const auto& p : policy_order) {
            const AggregateStats* found = nullptr;
            for (const auto& s : stats)
                if (s.policy == p && s.jobs == jobs) found = &s;
            f << ",";
            if (found) f << fmt9((*found).*metric.*field);
        }
        f << "\n";
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

} // namespace

void export_table_csv(const std::string& path_stem, const std::vector<AggregateStats>& stats,
                      const std::vector<std::string>& policy_order, const std::vector<int>& job_counts) {
    write_table(path_stem + "_total_tardiness.csv", stats, policy_order, job_counts,
                &MetricStats::mean, &AggregateStats::tardiness);
    write_table(path_stem + "_n_tardy.csv", stats, policy_order, job_counts, &MetricStats::mean,
                &AggregateStats::tardy);
    write_table(path_stem + "_energy.csv", stats, policy_order, job_counts, &MetricStats::mean,
                &AggregateStats::energy);
}

void export_boxplot_csv(const std::string& path, const std::vector<RunResult>& results) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << "policy,jobs,rep,seed,total_tardiness,n_tardy,total_energy\n";
    for (const auto& r : results)
        f << r.policy << "," << r.jobs << "," << r.rep << "," << r.seed << ","
          << fmt9(r.total_tardiness) << "," << r.n_tardy << "," << fmt9(r.total_energy) << "\n";
    if (!f) throw std::runtime_error("write failed: " + path);
}

} // namespace aivshop
