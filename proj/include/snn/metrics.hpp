#pragma once

#include <vector>

#include "snn/backprop.hpp"
#include "snn/network.hpp"

namespace snn {

struct Metrics {
    double mean_cost = 0.0;
    double accuracy = 0.0;
    double weight_sparsity = 0.0;     // fraction of exactly-zero weights
    double activation_sparsity = 0.0; // fraction of exactly-zero non-input activations
};

inline double weight_sparsity(const Network& net) {
    std::int64_t zeros = 0, total = 0;
    for (const auto& layer : net.layers()) {
        zeros += (layer.weights.array() == 0.0).count();
        total += layer.weights.size();
    }
    return total == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(total);
}

/// Full-dataset evaluation: mean per-example cost, argmax accuracy against
/// the one-hot targets, and exact-zero sparsity fractions.
inline Metrics evaluate(const Network& net, const std::vector<LabeledSample>& data,
                        Thresholds mode = Thresholds::Active) {
    if (data.empty()) throw ValueError("evaluate: dataset is empty");
    Metrics m;
    std::int64_t correct = 0, zero_acts = 0, total_acts = 0;
    for (const LabeledSample& sample : data) {
        const ForwardTrace trace = forward(net, sample.input, mode);
        m.mean_cost += cost(trace.output(), sample.target);
        if (argmax(trace.output()) == argmax(sample.target)) ++correct;
        for (std::size_t l = 1; l < trace.activations.size(); ++l) {
            zero_acts += (trace.activations[l].array() == 0.0).count();
            total_acts += trace.activations[l].size();
        }
    }
    const auto n = static_cast<double>(data.size());
    m.mean_cost /= n;
    m.accuracy = static_cast<double>(correct) / n;
    m.weight_sparsity = weight_sparsity(net);
    m.activation_sparsity = static_cast<double>(zero_acts) / static_cast<double>(total_acts);
    return m;
}

} // namespace snn
