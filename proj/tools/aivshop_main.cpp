#include "aivshop/bench.hpp"
#include "aivshop/heuristics.hpp"
#include "aivshop/madqn.hpp"
#include "aivshop/scenario.hpp"
#include "aivshop/sim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

using namespace aivshop;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitDivergence = 3;

// Offset separating training variation seeds from benchmark replication
// seeds, so evaluation replications are never seen during training.
constexpr std::uint64_t kTrainSeedOffset = 1u << 20;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("AIVSHOP_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0') return v;
    }
    return 1;
}

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void echo_config(const std::string& cmd, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::cout << "# " << cmd << " config:";
    for (const auto& [k, v] : kv) std::cout << " " << k << "=" << v;
    std::cout << "\n";
}

std::vector<std::pair<std::string, std::string>> config_kv(const ScenarioConfig& c) {
    return {
        {"jobs", std::to_string(c.n_jobs)},
        {"products", std::to_string(c.n_products)},
        {"workstations", std::to_string(c.n_workstations)},
        {"charging", std::to_string(c.n_charging)},
        {"aivs", std::to_string(c.aiv_count)},
        {"capacity", std::to_string(c.aiv_capacity)},
        {"charge_threshold", fmt9(c.charge_threshold)},
        {"recharge", fmt9(c.recharge_duration)},
        {"arrival_mean", fmt9(c.arrival_mean)},
        {"due_mu", fmt9(c.effective_due_mu())},
        {"due_sigma", fmt9(c.due_t_sigma)},
        {"tbi", fmt9(c.tbi_mean)},
        {"trf", fmt9(c.trf_mean)},
        {"layout", fmt9(c.layout_min) + ".." + fmt9(c.layout_max)},
        {"pt", fmt9(c.pt_min) + ".." + fmt9(c.pt_max)},
        {"seed", std::to_string(c.seed)},
        {"layout_seed", std::to_string(c.effective_layout_seed())},
    };
}

void add_scenario_options(CLI::App* app, ScenarioConfig& cfg, bool with_jobs = true) {
    if (with_jobs) app->add_option("--jobs", cfg.n_jobs, "total job count");
    app->add_option("--products", cfg.n_products, "number of product types");
    app->add_option("--workstations", cfg.n_workstations, "number of workstations");
    app->add_option("--charging", cfg.n_charging, "number of charging stations");
    app->add_option("--aivs", cfg.aiv_count, "number of AIVs");
    app->add_option("--capacity", cfg.aiv_capacity, "AIV loading capacity");
    app->add_option("--charge-threshold", cfg.charge_threshold, "battery pct that triggers charging");
    app->add_option("--recharge", cfg.recharge_duration, "recharge duration");
    app->add_option("--arrival-mean", cfg.arrival_mean, "mean inter-arrival time");
    app->add_option("--due-mu", cfg.due_t_mu, "due-date T mean (0 = jobs/4)");
    app->add_option("--due-sigma", cfg.due_t_sigma, "due-date T sigma");
    app->add_option("--tbi", cfg.tbi_mean, "mean time between unavailabilities");
    app->add_option("--trf", cfg.trf_mean, "mean repair duration");
    app->add_option("--layout-min", cfg.layout_min, "minimum transfer time");
    app->add_option("--layout-max", cfg.layout_max, "maximum transfer time");
    app->add_option("--pt-min", cfg.pt_min, "minimum processing time");
    app->add_option("--pt-max", cfg.pt_max, "maximum processing time");
    app->add_option("--layout-seed", cfg.layout_seed, "separate layout seed (0 = master seed)");
}

void add_train_options(CLI::App* app, TrainConfig& tc) {
    app->add_option("--episodes", tc.episodes, "training episodes");
    app->add_option("--lr", tc.lr, "SGD learning rate");
    app->add_option("--gamma", tc.gamma, "discount factor");
    app->add_option("--epsilon-start", tc.eps_start, "initial exploration rate");
    app->add_option("--epsilon-end", tc.eps_end, "final exploration rate");
    app->add_option("--epsilon-decay-frac", tc.eps_decay_frac, "fraction of episodes spent decaying");
    app->add_option("--batch", tc.batch_size, "replay batch size");
    app->add_option("--target-sync", tc.target_sync, "SGD steps between target syncs");
    app->add_option("--replay", tc.replay_capacity, "replay capacity");
    app->add_option("--comm-slots", tc.comm_slots, "peer slots per hidden layer");
    app->add_option("--k", tc.k_tardiness, "transfer-time coefficient in the tardiness estimate");
    app->add_option("--reward-scale", tc.reward_scale, "TD reward scaling (0 = auto)");
    app->add_flag("--per-agent", tc.per_agent_params, "per-agent network parameters");
}

void print_metrics(const RunMetrics& m) {
    std::cout << "total_tardiness=" << fmt9(m.total_tardiness) << " n_tardy=" << m.n_tardy
              << " total_energy_pct=" << fmt9(m.total_energy_pct) << "\n";
}

int cmd_run(const std::string& scenario_path, const std::string& policy,
            const std::string& checkpoint, const std::string& trace_path) {
    const Scenario scn = load_scenario(scenario_path);
    echo_config("run", {{"scenario", scenario_path},
                        {"policy", policy},
                        {"checkpoint", checkpoint.empty() ? "-" : checkpoint},
                        {"seed", std::to_string(scn.config.seed)}});

    std::ofstream trace_file;
    std::unique_ptr<TraceWriter> tracer;
    if (!trace_path.empty()) {
        trace_file.open(trace_path, std::ios::binary);
        if (!trace_file) throw std::runtime_error("cannot open trace file " + trace_path);
        tracer = std::make_unique<TraceWriter>(trace_file);
    }

    RunMetrics metrics;
    if (policy == "MADQN") {
        if (checkpoint.empty())
            throw CLI::ValidationError("--checkpoint is required with --policy MADQN");
        const MadqnBrain brain = MadqnBrain::load(checkpoint);
        metrics = evaluate(brain, scn, tracer.get());
    } else if (is_heuristic_name(policy)) {
        HeuristicPolicy h = make_heuristic(policy);
        Simulation sim(scn, h, tracer.get());
        metrics = sim.run();
    } else {
        std::ostringstream msg;
        msg << "unknown policy '" << policy << "'; valid heuristics:";
        for (const auto& n : heuristic_names()) msg << " " << n;
        msg << " (or MADQN with --checkpoint)";
        throw CLI::ValidationError(msg.str());
    }
    print_metrics(metrics);
    return kExitOk;
}

int cmd_train(ScenarioConfig cfg, TrainConfig tc, const std::string& out,
              const std::string& log_path, const std::string& resume) {
    tc.seed = cfg.seed;
    std::unique_ptr<MadqnBrain> brain;
    if (!resume.empty()) {
        brain = std::make_unique<MadqnBrain>(MadqnBrain::load(resume));
    } else {
        const Scenario reference = generate_scenario(replication_config(cfg, 0));
        brain = std::make_unique<MadqnBrain>(reference, tc);
    }
    echo_config("train", {{"jobs", std::to_string(cfg.n_jobs)},
                          {"episodes", std::to_string(tc.episodes)},
                          {"seed", std::to_string(cfg.seed)},
                          {"resume", resume.empty() ? "-" : resume},
                          {"lr", fmt9(brain->config.lr)},
                          {"gamma", fmt9(brain->config.gamma)},
                          {"out", out}});

    // Per-episode scenario variations share the benchmark layout but use a
    // disjoint seed range.
    ScenarioProvider provider = [cfg](int episode) {
        ScenarioConfig c = cfg;
        c.layout_seed = cfg.effective_layout_seed();
        c.seed = cfg.seed + kTrainSeedOffset + static_cast<std::uint64_t>(episode);
        return generate_scenario(c);
    };
    std::vector<TrainLogRow> log;
    try {
        log = train(*brain, provider, tc.episodes);
    } catch (const TrainingDivergence& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        brain->save(out);
        if (!log_path.empty()) write_training_log(log_path, log);
        return kExitDivergence;
    }
    brain->save(out);
    if (!log_path.empty()) write_training_log(log_path, log);
    std::cout << "trained_episodes=" << brain->episodes_trained << " checkpoint=" << out << "\n";
    return kExitOk;
}

int cmd_bench(ScenarioConfig cfg, const std::vector<int>& job_counts, int reps, int workers,
              const std::string& checkpoint, bool heuristics_only, const std::string& out,
              const std::string& format) {
    std::unique_ptr<MadqnBrain> brain;
    if (!heuristics_only) {
        if (checkpoint.empty())
            throw CLI::ValidationError("bench needs --checkpoint or --heuristics-only");
        brain = std::make_unique<MadqnBrain>(MadqnBrain::load(checkpoint));
    }
    echo_config("bench", {{"jobs", [&] {
                               std::string s;
                               for (int j : job_counts) s += (s.empty() ? "" : ",") + std::to_string(j);
                               return s;
                           }()},
                          {"reps", std::to_string(reps)},
                          {"workers", std::to_string(workers)},
                          {"seed", std::to_string(cfg.seed)},
                          {"checkpoint", checkpoint.empty() ? "-" : checkpoint},
                          {"format", format}});

    std::vector<std::string> policy_order = heuristic_names();
    if (!heuristics_only) policy_order.push_back("MADQN");

    std::vector<AggregateStats> stats;
    std::vector<RunResult> all_results;
    int total_failures = 0;
    for (int jobs : job_counts) {
        ScenarioConfig base = cfg;
        base.n_jobs = jobs;
        for (const auto& name : policy_order) {
            ReplicationPlan plan{base, reps, workers};
            PolicyFactory factory =
                name == "MADQN" ? madqn_factory(*brain) : heuristic_factory(name);
            int failures = 0;
            auto results = run_replications(name, factory, plan, &failures);
            total_failures += failures;
            if (!results.empty()) {
                const AggregateStats agg = summarize(results);
                stats.push_back(agg);
                std::cout << name << " jobs=" << jobs << " n=" << agg.n
                          << " mean_tardiness=" << fmt9(agg.tardiness.mean)
                          << " mean_tardy=" << fmt9(agg.tardy.mean)
                          << " mean_energy=" << fmt9(agg.energy.mean) << "\n";
            }
            for (auto& r : results) all_results.push_back(std::move(r));
        }
    }
    if (total_failures > 0) std::cout << "failed_replications=" << total_failures << "\n";
    if (format == "table-csv" || format == "both") export_table_csv(out, stats, policy_order, job_counts);
    if (format == "boxplot-csv" || format == "both") export_boxplot_csv(out + "_reps.csv", all_results);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flexible job shop with AIV transport: simulator, MADQN scheduler and benchmarks"};
    app.require_subcommand(1);

    ScenarioConfig cfg;
    cfg.seed = default_seed();
    TrainConfig tc;

    auto* gen = app.add_subcommand("generate", "generate a scenario file");
    std::string gen_out;
    add_scenario_options(gen, cfg);
    gen->add_option("--seed", cfg.seed, "master seed");
    gen->add_option("-o,--out", gen_out, "output scenario path")->required();

    auto* run = app.add_subcommand("run", "simulate one scenario under one policy");
    std::string run_scenario, run_policy, run_checkpoint, run_trace;
    run->add_option("--scenario", run_scenario, "scenario file")->required();
    run->add_option("--policy", run_policy, "heuristic name or MADQN")->required();
    run->add_option("--checkpoint", run_checkpoint, "checkpoint for MADQN");
    run->add_option("--trace", run_trace, "write the event trace here");

    auto* train_cmd = app.add_subcommand("train", "train the MADQN scheduler");
    std::string train_out = "madqn.ckpt", train_log, train_resume;
    add_scenario_options(train_cmd, cfg);
    add_train_options(train_cmd, tc);
    train_cmd->add_option("--seed", cfg.seed, "master seed");
    train_cmd->add_option("-o,--out", train_out, "checkpoint output path");
    train_cmd->add_option("--log", train_log, "training log CSV path");
    train_cmd->add_option("--resume", train_resume, "resume from this checkpoint");

    auto* bench = app.add_subcommand("bench", "compare policies over replications");
    std::vector<int> bench_jobs{20};
    int bench_reps = 100;
    int bench_workers = static_cast<int>(std::thread::hardware_concurrency());
    std::string bench_checkpoint, bench_out = "bench", bench_format = "both";
    bool heuristics_only = false;
    add_scenario_options(bench, cfg, /*with_jobs=*/false);
    bench->add_option("--jobs", bench_jobs, "job counts (repeat or comma separated)")
        ->delimiter(',');
    bench->add_option("--reps", bench_reps, "replications per policy and job count");
    bench->add_option("--workers", bench_workers, "parallel workers");
    bench->add_option("--seed", cfg.seed, "base seed");
    bench->add_option("--checkpoint", bench_checkpoint, "MADQN checkpoint");
    bench->add_flag("--heuristics-only", heuristics_only, "skip the MADQN column");
    bench->add_option("-o,--out", bench_out, "output path stem");
    bench->add_option("--format", bench_format, "table-csv | boxplot-csv | both")
        ->check(CLI::IsMember({"table-csv", "boxplot-csv", "both"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) {
            const Scenario s = generate_scenario(cfg);
            save_scenario(s, gen_out);
            echo_config("generate", config_kv(s.config));
            std::cout << "scenario=" << gen_out << " jobs=" << s.n_jobs() << "\n";
            return kExitOk;
        }
        if (run->parsed()) return cmd_run(run_scenario, run_policy, run_checkpoint, run_trace);
        if (train_cmd->parsed()) return cmd_train(cfg, tc, train_out, train_log, train_resume);
        if (bench->parsed())
            return cmd_bench(cfg, bench_jobs, bench_reps, bench_workers, bench_checkpoint,
                             heuristics_only, bench_out, bench_format);
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const aivshop::TrainingDivergence& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
