#pragma once

#include "aivshop/rng.hpp"

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace aivshop {

struct TrainingDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    bool operator==(const Matrix&) const = default;
};

struct NetworkShape {
    int input = 0;
    int outputs = 0;
    int hidden_width = 10;
    int n_hidden = 5;
    int comm_slots = 8;
    int comm_width = 10;

    int comm_len() const { return n_hidden > 0 ? comm_slots * comm_width : 0; }
    bool operator==(const NetworkShape&) const = default;
};

// Peer activations mixed into every hidden layer: a fixed number of slots
// per layer, zero-padded when fewer peers exist, so weight shapes stay
// static while the set of co-active agents varies.
struct CommBundle {
    std::vector<std::vector<double>> layers; // [n_hidden] x (slots * width)

    static CommBundle zeros(const NetworkShape& shape);
};

// Everything the backward pass needs from one forward evaluation.
struct ForwardTrace {
    std::vector<std::vector<double>> inputs; // per layer: own input ++ comm block
    std::vector<std::vector<double>> acts;   // per hidden layer: tanh outputs
    std::vector<double> q;
};

struct Gradients {
    std::vector<Matrix> dW;
    std::vector<std::vector<double>> db;

    void accumulate(const Gradients& other, double factor = 1.0);
    void scale(double factor);
};

// Fully connected Tanh network. Each hidden layer consumes its own input
// concatenated with the communication block; the output layer is affine.
// Peer activations are constants during backprop: gradients never flow
// into the communication slots.
class Network {
public:
    Network() = default;
    static Network init(const NetworkShape& shape, Rng& weight_stream);

    const NetworkShape& shape() const { return shape_; }
    int n_layers() const { return shape_.n_hidden + 1; }

    std::vector<double> forward(std::span<const double> x, const CommBundle& comm,
                                ForwardTrace* trace = nullptr) const;
    Gradients backward(const ForwardTrace& trace, std::span<const double> dloss_dq) const;
    Gradients zero_gradients() const;
    void apply_sgd(const Gradients& grads, double lr);

    void write(std::ostream& os) const;
    static Network read(std::istream& is);

    bool operator==(const Network&) const = default;

    std::vector<Matrix> W;
    std::vector<std::vector<double>> b;

private:
    NetworkShape shape_;
};

double mse_loss(std::span<const double> predicted, std::span<const double> target);
std::vector<double> mse_gradient(std::span<const double> predicted, std::span<const double> target);

} // namespace aivshop
