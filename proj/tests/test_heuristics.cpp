#include "aivshop/heuristics.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <limits>

using namespace aivshop;
using namespace aivshop::testing;

TEST_SUITE_BEGIN("heuristics");

TEST_CASE("argmin and argmax break ties toward the lowest index") {
    const std::vector<double> flat{2.0, 2.0, 2.0};
    CHECK(argmin_lowest_index(flat) == 0);
    CHECK(argmax_lowest_index(flat) == 0);
    const std::vector<double> v{3.0, 1.0, 1.0, 4.0};
    CHECK(argmin_lowest_index(v) == 1);
    CHECK(argmax_lowest_index(v) == 3);
    CHECK_THROWS_AS(argmin_lowest_index(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("argmin/argmax are invariant under positive scaling") {
    Rng rng(4242);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(1, 8));
        std::vector<double> v(n);
        for (auto& x : v) x = rng.uniform(-10.0, 10.0);
        const double c = rng.uniform(0.001, 1000.0);
        std::vector<double> scaled(v);
        for (auto& x : scaled) x *= c;
        CHECK(argmin_lowest_index(v) == argmin_lowest_index(scaled));
        CHECK(argmax_lowest_index(v) == argmax_lowest_index(scaled));
    }
}

TEST_CASE("SPT picks the fastest eligible workstation") {
    ScenarioBuilder b(2, 1, 1, 1);
    b.all_transfer(10.0);
    const int p = b.add_product({{{0, 1}, {8.0, 4.0}}});
    b.add_job(p, 0.0, 100.0);
    HeuristicPolicy pol = make_heuristic("MC.SPT");
    const TracedRun r = run_traced(b.build(), pol);
    bool checked = false;
    for (const auto& tl : parse_trace(r.trace))
        if (tl.kind == "ws_select") {
            CHECK(tl.detail.find("ws=WS2") != std::string::npos);
            checked = true;
        }
    CHECK(checked);
}

TEST_CASE("rules agree with a direct recomputation on a paused mid-run state") {
    const ScenarioConfig cfg{.n_jobs = 40, .seed = 99};
    const Scenario s = generate_scenario(cfg);
    HeuristicPolicy driver = make_heuristic("STT.SQL");
    Simulation sim(s, driver);
    while (sim.now() < 150.0 && sim.step()) {
    }

    // Pick a job with operations left and recompute every rule by hand.
    const SimJob* job = nullptr;
    for (const auto& j : sim.jobs())
        if (j.status != JobStatus::Completed && j.status != JobStatus::Pending && j.location >= 0) {
            job = &j;
            break;
        }
    REQUIRE(job != nullptr);
    if (job->next_op >= sim.scenario().n_ops(job->id)) return;

    const auto& op = sim.scenario().job_op(job->id, job->next_op);
    {
        int best = op.eligible[0];
        for (std::size_t i = 1; i < op.eligible.size(); ++i)
            if (op.proc_time[i] < op.time_on(best)) best = op.eligible[i];
        CHECK(HeuristicPolicy::select_workstation(WsRule::SPT, sim, *job) == best);
    }
    {
        int best = op.eligible[0];
        for (int ws : op.eligible)
            if (sim.workstation(ws).queue.size() < sim.workstation(best).queue.size()) best = ws;
        CHECK(HeuristicPolicy::select_workstation(WsRule::SQL, sim, *job) == best);
    }
    {
        int best = op.eligible[0];
        for (int ws : op.eligible)
            if (sim.ws_busy_fraction(ws) < sim.ws_busy_fraction(best)) best = ws;
        CHECK(HeuristicPolicy::select_workstation(WsRule::SWL_W, sim, *job) == best);
    }
    {
        int best = 0;
        for (int a = 1; a < sim.n_aivs(); ++a)
            if (sim.battery_at_now(a) > sim.battery_at_now(best)) best = a;
        CHECK(HeuristicPolicy::select_aiv(AivRule::MC, sim, *job) == best);
    }
    {
        int best = 0;
        for (int a = 1; a < sim.n_aivs(); ++a)
            if (sim.transfer_time(sim.aiv_reference_node(a), job->location) <
                sim.transfer_time(sim.aiv_reference_node(best), job->location))
                best = a;
        CHECK(HeuristicPolicy::select_aiv(AivRule::STT, sim, *job) == best);
    }
    {
        int best = 0;
        for (int a = 1; a < sim.n_aivs(); ++a)
            if (sim.aiv_busy_fraction(a) < sim.aiv_busy_fraction(best)) best = a;
        CHECK(HeuristicPolicy::select_aiv(AivRule::SWL_A, sim, *job) == best);
    }
}

TEST_CASE("equal workloads at the start resolve to the lowest AIV id") {
    ScenarioBuilder b(1, 1, 3, 1);
    b.all_transfer(10.0);
    const int p = b.add_product({{{0}, {5.0}}});
    b.add_job(p, 0.0, 100.0);
    HeuristicPolicy pol = make_heuristic("SWL_A.SPT");
    const TracedRun r = run_traced(b.build(), pol);
    for (const auto& tl : parse_trace(r.trace))
        if (tl.kind == "aiv_select") CHECK(tl.detail == "aiv=A0");
}

TEST_CASE("all nine names build and run deterministically") {
    const ScenarioConfig cfg{.n_jobs = 20, .seed = 12};
    const Scenario s = generate_scenario(cfg);
    REQUIRE(heuristic_names().size() == 9);
    for (const auto& name : heuristic_names()) {
        HeuristicPolicy a = make_heuristic(name);
        HeuristicPolicy b2 = make_heuristic(name);
        Simulation s1(s, a), s2(s, b2);
        const RunMetrics m1 = s1.run();
        const RunMetrics m2 = s2.run();
        CHECK(m1.total_tardiness == m2.total_tardiness);
        CHECK(m1.n_tardy == m2.n_tardy);
        CHECK(m1.total_energy_pct == m2.total_energy_pct);
    }
    CHECK_THROWS_AS(make_heuristic("SPT.STT"), std::invalid_argument);
    CHECK_FALSE(is_heuristic_name("MADQN"));
}

TEST_SUITE_END();
