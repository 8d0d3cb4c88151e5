#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "snn/backprop.hpp"
#include "snn/error.hpp"
#include "snn/mask.hpp"
#include "snn/metrics.hpp"
#include "snn/network.hpp"
#include "snn/optimize.hpp"

namespace snn {

/// Exact-zero fractions over weights and over non-input activations, with
/// per-layer breakdowns. Zeros are counted bit-exactly; thresholded
/// activations produce hard zeros so no tolerance is involved. As a
/// complexity proxy the report also counts the multiply-accumulates of the
/// evaluated forward passes that a sparse executor could skip, i.e. slots
/// whose weight or incoming activation is exactly zero.
struct SparsityReport {
    double weight_sparsity = 0.0;
    double activation_sparsity = 0.0;
    std::vector<double> weight_sparsity_per_layer;
    std::vector<double> activation_sparsity_per_layer;
    std::int64_t zero_weights = 0;
    std::int64_t total_weights = 0;
    std::int64_t zero_activations = 0;
    std::int64_t total_activations = 0;
    std::int64_t macs_skippable = 0;
    std::int64_t macs_total = 0;

    double mac_skip_fraction() const {
        return macs_total == 0 ? 0.0
                               : static_cast<double>(macs_skippable) /
                                     static_cast<double>(macs_total);
    }
};

struct PruneResult {
    Network network;
    PruneMask mask;
    double theta = 0.0;
};

/// Zeroes and freezes every weight with |w| <= theta; biases are untouched.
inline PruneResult prune_by_magnitude(const Network& net, double theta) {
    if (std::isnan(theta) || theta < 0.0) throw ValueError("prune threshold must be nonnegative");
    Network pruned = net;
    PruneMask mask = PruneMask::all_active(net.shape());
    for (Index l = 0; l < net.depth(); ++l) {
        Matrix& w = pruned.layer(l).weights;
        BoolMatrix& m = mask.layers[static_cast<std::size_t>(l)];
        for (Index j = 0; j < w.rows(); ++j) {
            for (Index u = 0; u < w.cols(); ++u) {
                if (std::abs(w(j, u)) <= theta) {
                    w(j, u) = 0.0;
                    m(j, u) = false;
                }
            }
        }
    }
    return {std::move(pruned), std::move(mask), theta};
}

/// Picks the smallest magnitude cutoff whose pruned fraction reaches the
/// target, then prunes with it. Candidates are 0 and the observed |w|
/// values, so the resulting sparsity is the least achievable fraction >= target.
inline PruneResult prune_to_target(const Network& net, double target_sparsity) {
    if (!(target_sparsity >= 0.0 && target_sparsity <= 1.0))
        throw ValueError("target sparsity must lie in [0, 1]");
    std::vector<double> magnitudes;
    for (Index l = 0; l < net.depth(); ++l) {
        const Matrix& w = net.layer(l).weights;
        for (Index j = 0; j < w.rows(); ++j)
            for (Index u = 0; u < w.cols(); ++u) magnitudes.push_back(std::abs(w(j, u)));
    }
    std::sort(magnitudes.begin(), magnitudes.end());
    const auto total = static_cast<double>(magnitudes.size());
    const double needed = target_sparsity * total;

    double theta = 0.0;
    auto pruned_count = [&](double t) {
        return static_cast<double>(
            std::upper_bound(magnitudes.begin(), magnitudes.end(), t) - magnitudes.begin());
    };
    if (pruned_count(0.0) < needed) {
        for (double m : magnitudes) {
            if (pruned_count(m) >= needed) {
                theta = m;
                break;
            }
        }
    }
    return prune_by_magnitude(net, theta);
}

namespace detail {

inline void apply_cutoff(Activation& act, const Vector& eps) {
    if ((eps.array() < 0.0).any()) throw ValueError("epsilon must be nonnegative");
    switch (act.kind()) {
    case ActKind::Sigmoid:
    case ActKind::ThresholdedSigmoid:
        act = eps.size() == 1 ? Activation(ActKind::ThresholdedSigmoid, eps[0])
                              : Activation(ActKind::ThresholdedSigmoid, eps);
        break;
    case ActKind::Relu:
    case ActKind::ModifiedRelu:
        act = eps.size() == 1 ? Activation(ActKind::ModifiedRelu, eps[0])
                              : Activation(ActKind::ModifiedRelu, eps);
        break;
    case ActKind::Identity: break;
    }
}

} // namespace detail

/// Switches every sigmoid-family layer to the thresholded sigmoid and every
/// relu-family layer to the cutoff relu, with the given per-layer cutoffs.
/// Identity layers are left alone. Parameters are untouched.
inline Network set_epsilon(const Network& net, const std::vector<Vector>& per_layer_epsilon) {
    if (static_cast<Index>(per_layer_epsilon.size()) != net.depth())
        throw ShapeError("expected " + std::to_string(net.depth()) + " epsilon entries, got " +
                         std::to_string(per_layer_epsilon.size()));
    Network out = net;
    for (Index l = 0; l < net.depth(); ++l)
        detail::apply_cutoff(out.layer(l).activation,
                             per_layer_epsilon[static_cast<std::size_t>(l)]);
    return out;
}

inline Network set_epsilon(const Network& net, double epsilon) {
    std::vector<Vector> eps(static_cast<std::size_t>(net.depth()), Vector::Constant(1, epsilon));
    return set_epsilon(net, eps);
}

inline Network set_epsilon(const Network& net, const std::vector<double>& per_layer_epsilon) {
    std::vector<Vector> eps;
    eps.reserve(per_layer_epsilon.size());
    for (double e : per_layer_epsilon) eps.push_back(Vector::Constant(1, e));
    return set_epsilon(net, eps);
}

/// Continues training with the pruned weights frozen at zero.
inline TrainingHistory retrain(Network& net, const PruneMask& mask,
                               const std::vector<LabeledSample>& data,
                               const OptimizerConfig& cfg) {
    mask.validate_against(net);
    return train(net, data, cfg, &mask);
}

inline SparsityReport sparsity_report(const Network& net,
                                      const std::vector<LabeledSample>& data) {
    if (data.empty()) throw ValueError("sparsity report: dataset is empty");
    SparsityReport r;
    const Index k = net.depth();
    std::vector<std::int64_t> zero_w(k, 0), total_w(k, 0), zero_a(k, 0), total_a(k, 0);
    std::vector<std::vector<std::int64_t>> zero_w_per_column(static_cast<std::size_t>(k));
    for (Index l = 0; l < k; ++l) {
        const auto il = static_cast<std::size_t>(l);
        const Matrix& w = net.layer(l).weights;
        zero_w[il] = (w.array() == 0.0).count();
        total_w[il] = w.size();
        zero_w_per_column[il].assign(static_cast<std::size_t>(w.cols()), 0);
        for (Index j = 0; j < w.rows(); ++j)
            for (Index u = 0; u < w.cols(); ++u)
                if (w(j, u) == 0.0) ++zero_w_per_column[il][static_cast<std::size_t>(u)];
    }
    for (const LabeledSample& s : data) {
        const ForwardTrace trace = forward(net, s.input);
        for (Index l = 0; l < k; ++l) {
            const auto il = static_cast<std::size_t>(l);
            zero_a[il] += (trace.activations[il + 1].array() == 0.0).count();
            total_a[il] += trace.activations[il + 1].size();
            // a slot is skippable when its weight or its incoming activation
            // is exactly zero
            const Vector& in = trace.activations[il];
            const Index fan_out = net.layer(l).weights.rows();
            for (Index u = 0; u < in.size(); ++u)
                r.macs_skippable += in[u] == 0.0
                                        ? fan_out
                                        : zero_w_per_column[il][static_cast<std::size_t>(u)];
            r.macs_total += in.size() * fan_out;
        }
    }
    for (Index l = 0; l < k; ++l) {
        const auto il = static_cast<std::size_t>(l);
        r.zero_weights += zero_w[il];
        r.total_weights += total_w[il];
        r.zero_activations += zero_a[il];
        r.total_activations += total_a[il];
        r.weight_sparsity_per_layer.push_back(static_cast<double>(zero_w[il]) /
                                              static_cast<double>(total_w[il]));
        r.activation_sparsity_per_layer.push_back(static_cast<double>(zero_a[il]) /
                                                  static_cast<double>(total_a[il]));
    }
    r.weight_sparsity = static_cast<double>(r.zero_weights) / static_cast<double>(r.total_weights);
    r.activation_sparsity =
        static_cast<double>(r.zero_activations) / static_cast<double>(r.total_activations);
    return r;
}

/// Lower empirical q-quantile: the smallest sample value v such that at
/// least a q fraction of the samples are <= v.
inline double lower_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ValueError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ValueError("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto idx = static_cast<std::ptrdiff_t>(std::ceil(q * n)) - 1;
    idx = std::max<std::ptrdiff_t>(idx, 0);
    return values[static_cast<std::size_t>(idx)];
}

/// Per-layer cutoffs at the empirical q-quantile of each layer's
/// pre-activations over the calibration set. Layers are calibrated in
/// order with the earlier cutoffs already applied, so each layer zeroes at
/// least a q fraction of its activations on this data. Negative quantiles
/// are clamped to 0, which can only enlarge the zeroed fraction.
inline std::vector<double> epsilon_from_quantile(const Network& net,
                                                 const std::vector<LabeledSample>& data,
                                                 double q) {
    if (data.empty()) throw ValueError("epsilon calibration: dataset is empty");
    std::vector<double> eps;
    Network staged = net; // earlier layers get their cutoffs as calibration proceeds
    for (Index l = 0; l < net.depth(); ++l) {
        std::vector<double> z_values;
        z_values.reserve(data.size() * static_cast<std::size_t>(net.shape().widths[l + 1]));
        for (const LabeledSample& s : data) {
            const ForwardTrace trace = forward(staged, s.input);
            const Vector& z = trace.preactivations[static_cast<std::size_t>(l)];
            for (Index j = 0; j < z.size(); ++j) z_values.push_back(z[j]);
        }
        const double e = std::max(0.0, lower_quantile(std::move(z_values), q));
        eps.push_back(e);
        detail::apply_cutoff(staged.layer(l).activation, Vector::Constant(1, e));
    }
    return eps;
}

struct SweepRow {
    double epsilon = 0.0;
    double activation_sparsity = 0.0;
    double weight_sparsity = 0.0;
    double accuracy = 0.0;
    double mean_cost = 0.0;
};

/// One row per cutoff value, applied uniformly to every layer. The list
/// must be ascending and nonnegative.
inline std::vector<SweepRow> epsilon_sweep(const Network& net,
                                           const std::vector<LabeledSample>& data,
                                           const std::vector<double>& epsilons) {
    if (data.empty()) throw ValueError("epsilon sweep: dataset is empty");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (epsilons[i] < 0.0) throw ValueError("epsilon sweep values must be nonnegative");
        if (i > 0 && epsilons[i] < epsilons[i - 1])
            throw ValueError("epsilon sweep values must be ascending");
    }
    std::vector<SweepRow> rows;
    rows.reserve(epsilons.size());
    for (double e : epsilons) {
        const Network thresholded = set_epsilon(net, e);
        const SparsityReport rep = sparsity_report(thresholded, data);
        const Metrics m = evaluate(thresholded, data);
        rows.push_back({e, rep.activation_sparsity, rep.weight_sparsity, m.accuracy, m.mean_cost});
    }
    return rows;
}

} // namespace snn
