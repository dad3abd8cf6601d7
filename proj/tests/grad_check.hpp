#pragma once

// Central finite-difference oracle for the analytic backward pass. The probe
// loss is sum_i c_i * q_i with small coefficients so rounding noise in the
// difference quotient stays below the comparison tolerance even for tiny
// gradient coordinates.

#include "aivshop/neural.hpp"

#include <cmath>
#include <vector>

namespace aivshop::testing {

struct GradCheckResult {
    long long coords_checked = 0;
    long long coords_skipped = 0; // |analytic| <= 1e-8
    double max_rel_err = 0;
};

inline GradCheckResult finite_diff_check(const NetworkShape& shape, int n_configs,
                                         std::uint64_t seed) {
    constexpr double kStep = 1e-5;
    constexpr double kFloor = 1e-8;
    GradCheckResult out;
    Rng rng(seed);

    for (int cfg = 0; cfg < n_configs; ++cfg) {
        Network net = Network::init(shape, rng);
        std::vector<double> x(shape.input);
        for (auto& v : x) v = rng.uniform(0.0, 1.0);
        CommBundle comm = CommBundle::zeros(shape);
        for (auto& layer : comm.layers)
            for (auto& v : layer) v = rng.uniform(-1.0, 1.0);
        std::vector<double> c(shape.outputs);
        for (auto& v : c) {
            v = rng.uniform(0.005, 0.02);
            if (rng.uniform01() < 0.5) v = -v;
        }

        ForwardTrace trace;
        net.forward(x, comm, &trace);
        const Gradients analytic = net.backward(trace, c);

        auto loss = [&]() {
            const auto q = net.forward(x, comm);
            double L = 0;
            for (int i = 0; i < shape.outputs; ++i) L += c[i] * q[i];
            return L;
        };
        auto probe = [&](double& param, double analytic_g) {
            const double keep = param;
            param = keep + kStep;
            const double up = loss();
            param = keep - kStep;
            const double dn = loss();
            param = keep;
            const double fd = (up - dn) / (2.0 * kStep);
            if (std::abs(analytic_g) <= kFloor) {
                ++out.coords_skipped;
                return;
            }
            const double rel = std::abs(analytic_g - fd) / std::max(std::abs(analytic_g), std::abs(fd));
            out.max_rel_err = std::max(out.max_rel_err, rel);
            ++out.coords_checked;
        };

        for (std::size_t l = 0; l < net.W.size(); ++l) {
            for (std::size_t i = 0; i < net.W[l].v.size(); ++i)
                probe(net.W[l].v[i], analytic.dW[l].v[i]);
            for (std::size_t i = 0; i < net.b[l].size(); ++i) probe(net.b[l][i], analytic.db[l][i]);
        }
    }
    return out;
}

} // namespace aivshop::testing
