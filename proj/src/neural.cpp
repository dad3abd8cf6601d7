#include "aivshop/neural.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace aivshop {

CommBundle CommBundle::zeros(const NetworkShape& shape) {
    CommBundle c;
    c.layers.assign(shape.n_hidden, std::vector<double>(shape.comm_len(), 0.0));
    return c;
}

void Gradients::accumulate(const Gradients& other, double factor) {
    for (std::size_t l = 0; l < dW.size(); ++l) {
        for (std::size_t i = 0; i < dW[l].v.size(); ++i) dW[l].v[i] += factor * other.dW[l].v[i];
        for (std::size_t i = 0; i < db[l].size(); ++i) db[l][i] += factor * other.db[l][i];
    }
}

void Gradients::scale(double factor) {
    for (auto& m : dW)
        for (auto& x : m.v) x *= factor;
    for (auto& v : db)
        for (auto& x : v) x *= factor;
}

Network Network::init(const NetworkShape& shape, Rng& weight_stream) {
    Network net;
    net.shape_ = shape;
    const int L = shape.n_hidden + 1;
    net.W.resize(L);
    net.b.resize(L);
    for (int l = 0; l < L; ++l) {
        int in;
        int out;
        if (l < shape.n_hidden) {
            in = (l == 0 ? shape.input : shape.hidden_width) + shape.comm_len();
            out = shape.hidden_width;
        } else {
            in = shape.n_hidden > 0 ? shape.hidden_width : shape.input;
            out = shape.outputs;
        }
        net.W[l] = Matrix(out, in);
        net.b[l].assign(out, 0.0);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (auto& w : net.W[l].v) w = weight_stream.uniform(-bound, bound);
        for (auto& bias : net.b[l]) bias = weight_stream.uniform(-bound, bound);
    }
    return net;
}

std::vector<double> Network::forward(std::span<const double> x, const CommBundle& comm,
                                     ForwardTrace* trace) const {
    if (static_cast<int>(x.size()) != shape_.input)
        throw std::invalid_argument("forward: input width mismatch");
    if (static_cast<int>(comm.layers.size()) != shape_.n_hidden)
        throw std::invalid_argument("forward: comm bundle layer count mismatch");

    if (trace) {
        trace->inputs.assign(n_layers(), {});
        trace->acts.assign(shape_.n_hidden, {});
    }
    std::vector<double> cur(x.begin(), x.end());
    for (int l = 0; l < shape_.n_hidden; ++l) {
        if (static_cast<int>(comm.layers[l].size()) != shape_.comm_len())
            throw std::invalid_argument("forward: comm slot width mismatch");
        std::vector<double> in;
        in.reserve(cur.size() + comm.layers[l].size());
        in.insert(in.end(), cur.begin(), cur.end());
        in.insert(in.end(), comm.layers[l].begin(), comm.layers[l].end());
        const auto& Wl = W[l];
        std::vector<double> h(Wl.rows);
        for (int r = 0; r < Wl.rows; ++r) {
            double z = b[l][r];
            const double* row = &Wl.v[static_cast<std::size_t>(r) * Wl.cols];
            for (int c = 0; c < Wl.cols; ++c) z += row[c] * in[c];
            h[r] = std::tanh(z);
        }
        if (trace) {
            trace->inputs[l] = std::move(in);
            trace->acts[l] = h;
        }
        cur = std::move(h);
    }
    const auto& Wo = W.back();
    std::vector<double> q(Wo.rows);
    for (int r = 0; r < Wo.rows; ++r) {
        double z = b.back()[r];
        const double* row = &Wo.v[static_cast<std::size_t>(r) * Wo.cols];
        for (int c = 0; c < Wo.cols; ++c) z += row[c] * cur[c];
        q[r] = z;
    }
    if (trace) {
        trace->inputs.back() = std::move(cur);
        trace->q = q;
    }
    return q;
}

Gradients Network::zero_gradients() const {
    Gradients g;
    g.dW.reserve(W.size());
    g.db.reserve(b.size());
    for (const auto& m : W) g.dW.emplace_back(m.rows, m.cols);
    for (const auto& v : b) g.db.emplace_back(v.size(), 0.0);
    return g;
}

Gradients Network::backward(const ForwardTrace& trace, std::span<const double> dloss_dq) const {
    if (static_cast<int>(dloss_dq.size()) != shape_.outputs)
        throw std::invalid_argument("backward: output gradient width mismatch");
    Gradients g = zero_gradients();

    const int out_l = shape_.n_hidden;
    const auto& out_in = trace.inputs[out_l];
    for (int r = 0; r < W[out_l].rows; ++r) {
        const double d = dloss_dq[r];
        g.db[out_l][r] = d;
        double* grow = &g.dW[out_l].v[static_cast<std::size_t>(r) * W[out_l].cols];
        for (int c = 0; c < W[out_l].cols; ++c) grow[c] = d * out_in[c];
    }
    if (shape_.n_hidden == 0) return g;

    std::vector<double> dprev(shape_.hidden_width, 0.0);
    for (int c = 0; c < W[out_l].cols; ++c) {
        double s = 0;
        for (int r = 0; r < W[out_l].rows; ++r) s += W[out_l].at(r, c) * dloss_dq[r];
        dprev[c] = s;
    }

    for (int l = shape_.n_hidden - 1; l >= 0; --l) {
        const auto& in = trace.inputs[l];
        const auto& h = trace.acts[l];
        std::vector<double> dz(shape_.hidden_width);
        for (int r = 0; r < shape_.hidden_width; ++r) dz[r] = dprev[r] * (1.0 - h[r] * h[r]);
        for (int r = 0; r < W[l].rows; ++r) {
            g.db[l][r] = dz[r];
            double* grow = &g.dW[l].v[static_cast<std::size_t>(r) * W[l].cols];
            for (int c = 0; c < W[l].cols; ++c) grow[c] = dz[r] * in[c];
        }
        if (l > 0) {
            // Only the own-input block feeds back; comm columns are constants.
            const int own = shape_.hidden_width;
            dprev.assign(own, 0.0);
            for (int c = 0; c < own; ++c) {
                double s = 0;
                for (int r = 0; r < W[l].rows; ++r) s += W[l].at(r, c) * dz[r];
                dprev[c] = s;
            }
        }
    }
    return g;
}

void Network::apply_sgd(const Gradients& grads, double lr) {
    for (std::size_t l = 0; l < W.size(); ++l) {
        for (std::size_t i = 0; i < W[l].v.size(); ++i) {
            const double gi = grads.dW[l].v[i];
            if (!std::isfinite(gi)) throw TrainingDivergence("non-finite weight gradient");
            W[l].v[i] -= lr * gi;
        }
        for (std::size_t i = 0; i < b[l].size(); ++i) {
            const double gi = grads.db[l][i];
            if (!std::isfinite(gi)) throw TrainingDivergence("non-finite bias gradient");
            b[l][i] -= lr * gi;
        }
    }
}

double mse_loss(std::span<const double> predicted, std::span<const double> target) {
    if (predicted.size() != target.size()) throw std::invalid_argument("mse: length mismatch");
    if (predicted.empty()) return 0.0;
    double sum = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - target[i];
        sum += d * d;
    }
    return sum / static_cast<double>(predicted.size());
}

std::vector<double> mse_gradient(std::span<const double> predicted, std::span<const double> target) {
    if (predicted.size() != target.size()) throw std::invalid_argument("mse: length mismatch");
    std::vector<double> g(predicted.size());
    const double n = static_cast<double>(predicted.size());
    for (std::size_t i = 0; i < predicted.size(); ++i) g[i] = 2.0 * (predicted[i] - target[i]) / n;
    return g;
}

namespace {
std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
} // namespace

void Network::write(std::ostream& os) const {
    os << "network input " << shape_.input << " outputs " << shape_.outputs << " hidden_width "
       << shape_.hidden_width << " n_hidden " << shape_.n_hidden << " comm_slots " << shape_.comm_slots
       << " comm_width " << shape_.comm_width << "\n";
    for (std::size_t l = 0; l < W.size(); ++l) {
        os << "layer " << l << " " << W[l].rows << " " << W[l].cols << "\n";
        for (int r = 0; r < W[l].rows; ++r) {
            os << "w";
            for (int c = 0; c < W[l].cols; ++c) os << " " << fmt17(W[l].at(r, c));
            os << "\n";
        }
        os << "b";
        for (double v : b[l]) os << " " << fmt17(v);
        os << "\n";
    }
}

Network Network::read(std::istream& is) {
    Network net;
    std::string tag;
    auto want = [&](const char* expect) {
        if (!(is >> tag) || tag != expect)
            throw std::runtime_error(std::string("checkpoint parse error, expected '") + expect + "'");
    };
    want("network");
    want("input");
    is >> net.shape_.input;
    want("outputs");
    is >> net.shape_.outputs;
    want("hidden_width");
    is >> net.shape_.hidden_width;
    want("n_hidden");
    is >> net.shape_.n_hidden;
    want("comm_slots");
    is >> net.shape_.comm_slots;
    want("comm_width");
    is >> net.shape_.comm_width;
    if (!is) throw std::runtime_error("checkpoint parse error in network header");
    const int L = net.shape_.n_hidden + 1;
    net.W.resize(L);
    net.b.resize(L);
    for (int l = 0; l < L; ++l) {
        want("layer");
        int idx, rows, cols;
        is >> idx >> rows >> cols;
        if (!is || idx != l || rows <= 0 || cols <= 0)
            throw std::runtime_error("checkpoint parse error in layer header");
        net.W[l] = Matrix(rows, cols);
        for (int r = 0; r < rows; ++r) {
            want("w");
            for (int c = 0; c < cols; ++c) is >> net.W[l].at(r, c);
        }
        want("b");
        net.b[l].assign(rows, 0.0);
        for (int r = 0; r < rows; ++r) is >> net.b[l][r];
        if (!is) throw std::runtime_error("checkpoint parse error in layer values");
    }
    return net;
}

} // namespace aivshop
