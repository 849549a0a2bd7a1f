#pragma once

// Fully connected Q-network (ReLU hidden layers, linear output) with an
// exact backward pass for the half-squared TD loss and an Adam optimizer.
// The default topology is 108 -> 256 -> 256 -> 256 -> 15; smaller topologies
// are used for tests and for the miniature oracle problem.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "errors.hpp"
#include "random.hpp"

namespace auscultrl {

struct DenseLayer {
    Eigen::MatrixXd weights; // out x in
    Eigen::VectorXd bias;    // out

    int in() const { return static_cast<int>(weights.cols()); }
    int out() const { return static_cast<int>(weights.rows()); }

    friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
        return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
               a.weights == b.weights && a.bias == b.bias;
    }
};

inline std::vector<int> default_layer_sizes() { return {108, 256, 256, 256, 15}; }

// Also used as the gradient container: gradients have the parameters' shapes.
struct QNetwork {
    std::vector<DenseLayer> layers;

    static QNetwork zeros(const std::vector<int>& sizes) {
        if (sizes.size() < 2) throw ConfigError("network needs at least an input and an output size");
        QNetwork n;
        for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
            if (sizes[i] <= 0 || sizes[i + 1] <= 0) throw ConfigError("layer sizes must be positive");
            n.layers.push_back({Eigen::MatrixXd::Zero(sizes[i + 1], sizes[i]), Eigen::VectorXd::Zero(sizes[i + 1])});
        }
        return n;
    }

    std::vector<int> sizes() const {
        std::vector<int> s;
        if (layers.empty()) return s;
        s.push_back(layers.front().in());
        for (const auto& l : layers) s.push_back(l.out());
        return s;
    }

    int input_size() const { return layers.front().in(); }
    int output_size() const { return layers.back().out(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
        return n;
    }

    bool all_finite() const {
        for (const auto& l : layers)
            if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
        return true;
    }

    friend bool operator==(const QNetwork&, const QNetwork&) = default;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
inline QNetwork init_params(std::uint64_t seed, const std::vector<int>& sizes = default_layer_sizes()) {
    QNetwork n = QNetwork::zeros(sizes);
    Rng rng(seed);
    for (auto& l : n.layers) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
            for (Eigen::Index r = 0; r < l.weights.rows(); ++r) l.weights(r, c) = dist(rng);
    }
    return n;
}

// Column j of `inputs` is one sample; returns Q-values with one column per sample.
inline Eigen::MatrixXd forward_batch(const QNetwork& net, const Eigen::MatrixXd& inputs) {
    if (inputs.rows() != net.input_size())
        throw PreconditionError("forward: input has " + std::to_string(inputs.rows()) + " entries, network expects " +
                                std::to_string(net.input_size()));
    Eigen::MatrixXd a = inputs;
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const auto& l = net.layers[k];
        Eigen::MatrixXd z = l.weights * a;
        z.colwise() += l.bias;
        a = k + 1 < net.layers.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : std::move(z);
    }
    return a;
}

inline Eigen::VectorXd forward(const QNetwork& net, const Eigen::VectorXd& input) {
    if (!input.allFinite()) throw PreconditionError("forward: non-finite input");
    return forward_batch(net, input);
}

// Training batch for the TD regression: only the taken action's output is fit.
struct QBatch {
    Eigen::MatrixXd states; // input_size x B
    std::vector<int> actions;
    Eigen::VectorXd targets;

    Eigen::Index size() const { return states.cols(); }

    void validate(const QNetwork& net) const {
        if (states.cols() == 0) throw PreconditionError("q batch is empty");
        if (static_cast<Eigen::Index>(actions.size()) != states.cols() || targets.size() != states.cols())
            throw PreconditionError("q batch: states/actions/targets disagree in length");
        for (int a : actions)
            if (a < 0 || a >= net.output_size()) throw PreconditionError("q batch: action index out of range");
    }
};

// mean over the batch of 1/2 (target - Q(s, a))^2
inline double q_loss(const QNetwork& net, const QBatch& batch) {
    batch.validate(net);
    const Eigen::MatrixXd q = forward_batch(net, batch.states);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < batch.size(); ++j) {
        const double diff = batch.targets[j] - q(batch.actions[static_cast<std::size_t>(j)], j);
        sum += 0.5 * diff * diff;
    }
    return sum / static_cast<double>(batch.size());
}

// Scratch buffers reused across backward passes; keeps large activations and
// gradient matrices from being reallocated on every update.
struct BackpropWorkspace {
    std::vector<Eigen::MatrixXd> acts; // acts[0] = input, acts[k+1] = output of layer k
    Eigen::MatrixXd delta;
    Eigen::MatrixXd back;
    QNetwork grads;
};

// Backpropagation of q_loss into `ws.grads`; returns the loss. Throws
// NumericError naming the layer on NaN/Inf.
inline double loss_and_gradients(const QNetwork& net, const QBatch& batch, BackpropWorkspace& ws) {
    batch.validate(net);
    const std::size_t depth = net.layers.size();
    ws.acts.resize(depth + 1);
    ws.acts[0] = batch.states;
    for (std::size_t k = 0; k < depth; ++k) {
        const auto& l = net.layers[k];
        auto& z = ws.acts[k + 1];
        z.noalias() = l.weights * ws.acts[k];
        z.colwise() += l.bias;
        if (!z.allFinite()) throw NumericError("non-finite activation in layer " + std::to_string(k + 1));
        if (k + 1 < depth) z = z.cwiseMax(0.0);
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const Eigen::MatrixXd& q = ws.acts[depth];
    ws.delta.setZero(q.rows(), q.cols());
    double loss = 0.0;
    for (Eigen::Index j = 0; j < batch.size(); ++j) {
        const int a = batch.actions[static_cast<std::size_t>(j)];
        const double diff = q(a, j) - batch.targets[j];
        loss += 0.5 * diff * diff;
        ws.delta(a, j) = diff * inv_b;
    }
    loss *= inv_b;

    if (ws.grads.sizes() != net.sizes()) ws.grads = QNetwork::zeros(net.sizes());
    for (std::size_t k = depth; k-- > 0;) {
        auto& g = ws.grads.layers[k];
        g.weights.noalias() = ws.delta * ws.acts[k].transpose();
        g.bias = ws.delta.rowwise().sum();
        if (!g.weights.allFinite() || !g.bias.allFinite())
            throw NumericError("non-finite gradient in layer " + std::to_string(k + 1));
        if (k > 0) {
            ws.back.noalias() = net.layers[k].weights.transpose() * ws.delta;
            // ReLU derivative: pass where the activation was positive.
            ws.delta = ws.back.cwiseProduct((ws.acts[k].array() > 0.0).cast<double>().matrix());
        }
    }
    return loss;
}

inline double loss_and_gradients(const QNetwork& net, const QBatch& batch, QNetwork& grads) {
    BackpropWorkspace ws;
    const double loss = loss_and_gradients(net, batch, ws);
    grads = std::move(ws.grads);
    return loss;
}

inline QNetwork gradients(const QNetwork& net, const QBatch& batch) {
    QNetwork g;
    loss_and_gradients(net, batch, g);
    return g;
}

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    QNetwork m; // first moments
    QNetwork v; // second moments
    std::int64_t t = 0;

    static AdamState for_params(const QNetwork& net, AdamConfig config = {}) {
        AdamState s;
        s.config = config;
        s.m = QNetwork::zeros(net.sizes());
        s.v = QNetwork::zeros(net.sizes());
        return s;
    }
};

// One bias-corrected Adam update, in place.
inline void adam_step(QNetwork& net, AdamState& state, const QNetwork& grads) {
    if (state.m.sizes() != net.sizes() || grads.sizes() != net.sizes())
        throw StructureError("adam_step: parameter, moment and gradient shapes differ");
    const auto& c = state.config;
    ++state.t;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
    const double step = c.lr / bc1, inv_bc2 = 1.0 / bc2;
    // Single fused pass; the expression-template version walks memory four times.
    auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
        double* pp = p.data();
        double* mp = m.data();
        double* vp = v.data();
        const double* gp = g.data();
        const Eigen::Index n = p.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double gi = gp[i];
            mp[i] = c.beta1 * mp[i] + (1.0 - c.beta1) * gi;
            vp[i] = c.beta2 * vp[i] + (1.0 - c.beta2) * gi * gi;
            pp[i] -= step * mp[i] / (std::sqrt(vp[i] * inv_bc2) + c.eps);
        }
    };
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        update(net.layers[k].weights, state.m.layers[k].weights, state.v.layers[k].weights, grads.layers[k].weights);
        update(net.layers[k].bias, state.m.layers[k].bias, state.v.layers[k].bias, grads.layers[k].bias);
    }
}

} // namespace auscultrl
