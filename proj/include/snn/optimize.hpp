#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "snn/backprop.hpp"
#include "snn/error.hpp"
#include "snn/mask.hpp"
#include "snn/metrics.hpp"
#include "snn/network.hpp"
#include "snn/random.hpp"

namespace snn {

enum class Method { FullBatch, Sgd, Minibatch };

inline Method parse_method(const std::string& tag) {
    if (tag == "full-batch") return Method::FullBatch;
    if (tag == "sgd") return Method::Sgd;
    if (tag == "minibatch") return Method::Minibatch;
    throw ValueError("unknown method '" + tag + "' (full-batch, sgd, minibatch)");
}

struct OptimizerConfig {
    Method method = Method::Minibatch;
    double learning_rate = 0.5;
    Index batch_size = 32;          // minibatch only; sgd is batch size 1
    double momentum = 0.9;          // velocity coefficient in [0, 1)
    bool adaptive = false;          // per-parameter rate eta / (sqrt(sum g^2) + damping)
    double adaptive_damping = 1e-8;
    Index epochs = 50;              // 0 = leave the network untouched
    std::uint64_t seed = 1;
    bool threshold_during_training = true; // bypass activation cutoffs in training passes when false

    void validate() const {
        if (!(learning_rate > 0.0)) throw ValueError("learning rate must be positive");
        if (batch_size < 1) throw ValueError("batch size must be at least 1");
        if (momentum < 0.0 || momentum >= 1.0) throw ValueError("momentum must lie in [0, 1)");
        if (!(adaptive_damping > 0.0)) throw ValueError("adaptive damping must be positive");
        if (epochs < 0) throw ValueError("epochs must be nonnegative");
    }
};

/// Velocity and squared-gradient accumulators, zero-initialized.
struct OptimizerState {
    GradientSet velocity;
    GradientSet squared_accum;

    static OptimizerState zeros(const NetworkShape& shape) {
        return {GradientSet::zeros(shape), GradientSet::zeros(shape)};
    }
};

/// Seeded shuffle of 0..dataset_size-1 cut into consecutive chunks of
/// batch_size; the last chunk may be short. Every index appears exactly once.
inline std::vector<std::vector<Index>> minibatches(Index dataset_size, Index batch_size,
                                                   std::uint64_t seed) {
    if (dataset_size < 1) throw ValueError("dataset size must be at least 1");
    if (batch_size < 1) throw ValueError("batch size must be at least 1");
    std::vector<Index> order(static_cast<std::size_t>(dataset_size));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<std::vector<Index>> batches;
    for (Index at = 0; at < dataset_size; at += batch_size) {
        const Index len = std::min(batch_size, dataset_size - at);
        batches.emplace_back(order.begin() + at, order.begin() + at + len);
    }
    return batches;
}

/// One parameter update. Velocity accumulates as v <- momentum * v + g; with
/// the adaptive rate enabled each parameter keeps its own squared-gradient
/// sum and steps by learning_rate / (sqrt(sum) + damping). Frozen weights
/// contribute no gradient and stay exactly zero.
inline void step(Network& net, const GradientSet& grads, OptimizerState& state,
                 const OptimizerConfig& cfg, const PruneMask* mask = nullptr) {
    cfg.validate();
    if (grads.layer_count() != net.depth())
        throw ShapeError("step: gradient set has " + std::to_string(grads.layer_count()) +
                         " layers, network has " + std::to_string(net.depth()));
    for (Index l = 0; l < net.depth(); ++l) {
        const auto il = static_cast<std::size_t>(l);
        LayerParams& p = net.layer(l);
        if (p.weights.rows() != grads.weight_grads[il].rows() ||
            p.weights.cols() != grads.weight_grads[il].cols() ||
            p.biases.size() != grads.bias_grads[il].size())
            throw ShapeError("step: gradient layer " + std::to_string(l) +
                             " does not match parameter shapes");

        Matrix gw = grads.weight_grads[il];
        if (mask) gw = mask->layers[il].select(gw.array(), 0.0).matrix();
        const Vector& gb = grads.bias_grads[il];

        Matrix& vw = state.velocity.weight_grads[il];
        Vector& vb = state.velocity.bias_grads[il];
        vw = cfg.momentum * vw + gw;
        vb = cfg.momentum * vb + gb;

        if (cfg.adaptive) {
            Matrix& sw = state.squared_accum.weight_grads[il];
            Vector& sb = state.squared_accum.bias_grads[il];
            sw.array() += gw.array().square();
            sb.array() += gb.array().square();
            p.weights.array() -=
                cfg.learning_rate / (sw.array().sqrt() + cfg.adaptive_damping) * vw.array();
            p.biases.array() -=
                cfg.learning_rate / (sb.array().sqrt() + cfg.adaptive_damping) * vb.array();
        } else {
            p.weights -= cfg.learning_rate * vw;
            p.biases -= cfg.learning_rate * vb;
        }

        if (mask)
            p.weights = mask->layers[il].select(p.weights.array(), 0.0).matrix();
    }
}

/// Per-epoch snapshot of the training set, with the network as configured
/// (cutoffs active).
struct EpochStats {
    Index epoch = 0;
    double mean_cost = 0.0;
    double accuracy = 0.0;
    double weight_sparsity = 0.0;
    double activation_sparsity = 0.0;
};

using TrainingHistory = std::vector<EpochStats>;

/// Mini-batch training loop. Per batch the gradient is the mean of the
/// per-sample gradients, accumulated in ascending sample-index order so a
/// fixed seed reproduces the run bit for bit; one step is taken per batch.
inline TrainingHistory train(Network& net, const std::vector<LabeledSample>& data,
                             const OptimizerConfig& cfg, const PruneMask* mask = nullptr) {
    cfg.validate();
    if (data.empty()) throw ValueError("train: dataset is empty");
    for (const LabeledSample& s : data) {
        if (s.input.size() != net.shape().input_width() ||
            s.target.size() != net.shape().output_width())
            throw ShapeError("train: sample shapes do not match the network");
    }
    if (mask) mask->validate_against(net);

    Index batch_size = cfg.batch_size;
    switch (cfg.method) {
    case Method::FullBatch: batch_size = static_cast<Index>(data.size()); break;
    case Method::Sgd: batch_size = 1; break;
    case Method::Minibatch: break;
    }

    const Thresholds mode =
        cfg.threshold_during_training ? Thresholds::Active : Thresholds::Bypassed;
    OptimizerState state = OptimizerState::zeros(net.shape());
    TrainingHistory history;
    history.reserve(static_cast<std::size_t>(cfg.epochs));

    for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto batches = minibatches(static_cast<Index>(data.size()), batch_size,
                                         mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        for (const auto& batch : batches) {
            std::vector<Index> ordered(batch);
            std::sort(ordered.begin(), ordered.end());
            GradientSet sum = GradientSet::zeros(net.shape());
            for (Index i : ordered) {
                const LabeledSample& s = data[static_cast<std::size_t>(i)];
                const ForwardTrace trace = forward(net, s.input, mode);
                sum.add(backward(net, trace, s.target, mode));
            }
            sum.scale(1.0 / static_cast<double>(ordered.size()));
            step(net, sum, state, cfg, mask);
        }
        const Metrics m = evaluate(net, data);
        if (!std::isfinite(m.mean_cost))
            throw ValueError("train: cost diverged to a non-finite value at epoch " +
                             std::to_string(epoch + 1));
        history.push_back({epoch + 1, m.mean_cost, m.accuracy, m.weight_sparsity,
                           m.activation_sparsity});
    }
    return history;
}

} // namespace snn
