#include "aivshop/sim.hpp"

#include "micro_oracle.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace aivshop;
using namespace aivshop::testing;

TEST_SUITE_BEGIN("oracle");

TEST_CASE("engine matches the straight-line calculator on every decision sequence") {
    const Scenario s = micro_scenario();
    int combos = 0;
    for (int w00 = 0; w00 < 2; ++w00)
        for (int w01 = 0; w01 < 2; ++w01)
            for (int w10 = 0; w10 < 2; ++w10)
                for (int w11 = 0; w11 < 2; ++w11) {
                    const std::array<std::array<int, 2>, 2> choice{{{w00, w01}, {w10, w11}}};
                    const MicroResult expect = micro_oracle(s, choice);

                    ScriptedPolicy pol;
                    pol.ws(0, 0, w00).ws(0, 1, w01).ws(1, 0, w10).ws(1, 1, w11).default_aiv(0);
                    Simulation sim(s, pol);
                    const RunMetrics got = sim.run();

                    CAPTURE(w00);
                    CAPTURE(w01);
                    CAPTURE(w10);
                    CAPTURE(w11);
                    CHECK(std::abs(sim.job(0).completion - expect.completion[0]) < 1e-9);
                    CHECK(std::abs(sim.job(1).completion - expect.completion[1]) < 1e-9);
                    CHECK(std::abs(got.total_tardiness - expect.total_tardiness) < 1e-9);
                    CHECK(std::abs(got.total_energy_pct - expect.total_energy) < 1e-9);
                    CHECK(std::abs(got.makespan - expect.makespan) < 1e-9);
                    ++combos;
                }
    CHECK(combos == 16);
}

TEST_CASE("micro runs never dip near the charging threshold") {
    const Scenario s = micro_scenario();
    ScriptedPolicy pol;
    pol.ws(0, 0, 0).ws(0, 1, 1).ws(1, 0, 1).ws(1, 1, 0).default_aiv(0);
    Simulation sim(s, pol);
    sim.run();
    CHECK(sim.aiv(0).battery > 41.0);
    CHECK(sim.recharged_total(0) == 0.0);
}

TEST_SUITE_END();
