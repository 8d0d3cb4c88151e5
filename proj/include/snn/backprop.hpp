#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "snn/error.hpp"
#include "snn/network.hpp"
#include "snn/tensor.hpp"

namespace snn {

struct LabeledSample {
    Vector input;
    Vector target;
};

/// Per-layer cost partials, mirroring the network's parameter shapes.
struct GradientSet {
    std::vector<Matrix> weight_grads;
    std::vector<Vector> bias_grads;

    static GradientSet zeros(const NetworkShape& shape) {
        GradientSet g;
        for (Index l = 0; l < shape.depth(); ++l) {
            g.weight_grads.push_back(Matrix::Zero(shape.widths[l + 1], shape.widths[l]));
            g.bias_grads.push_back(Vector::Zero(shape.widths[l + 1]));
        }
        return g;
    }

    Index layer_count() const { return static_cast<Index>(weight_grads.size()); }

    void add(const GradientSet& other) {
        for (std::size_t l = 0; l < weight_grads.size(); ++l) {
            weight_grads[l] += other.weight_grads[l];
            bias_grads[l] += other.bias_grads[l];
        }
    }

    void scale(double s) {
        for (std::size_t l = 0; l < weight_grads.size(); ++l) {
            weight_grads[l] *= s;
            bias_grads[l] *= s;
        }
    }
};

/// Sum of squared output errors for one example.
inline double cost(const Vector& outputs, const Vector& targets) {
    if (outputs.size() != targets.size())
        throw ShapeError("cost: output length " + std::to_string(outputs.size()) +
                         " does not match target length " + std::to_string(targets.size()));
    return (outputs - targets).squaredNorm();
}

/// Output-layer delta: component j is sigma_k'(z_j) * 2 (a_j - y_j).
inline Vector output_delta(const Network& net, const ForwardTrace& trace, const Vector& targets,
                           Thresholds mode = Thresholds::Active) {
    const Vector& z = trace.preactivations.back();
    const Vector& a = trace.output();
    if (a.size() != targets.size())
        throw ShapeError("output_delta: output length " + std::to_string(a.size()) +
                         " does not match target length " + std::to_string(targets.size()));
    const Activation act = mode == Thresholds::Active ? net.layer(net.depth() - 1).activation
                                                      : net.layer(net.depth() - 1).activation.base();
    Vector delta(z.size());
    for (Index j = 0; j < z.size(); ++j)
        delta[j] = act.deriv(z[j], j) * 2.0 * (a[j] - targets[j]);
    return delta;
}

/// Backward pass. With delta^(l) the cost sensitivity of layer l's
/// pre-activations,
///
///   delta_j^(k)  = sigma_k'(z_j^(k)) * 2 (a_j^(k) - y_j)
///   delta_u^(l)  = sigma_l'(z_u^(l)) * sum_j w_{j,u}^(l) delta_j^(l+1)
///
/// the partials are dC/dw_{j,u}^(l) = a_u^(l) delta_j^(l+1) and
/// dC/db_j^(l) = delta_j^(l+1). The sum over j is the accumulation over all
/// paths through which a neuron influences the cost.
inline GradientSet backward(const Network& net, const ForwardTrace& trace, const Vector& targets,
                            Thresholds mode = Thresholds::Active) {
    const Index k = net.depth();
    if (static_cast<Index>(trace.preactivations.size()) != k ||
        static_cast<Index>(trace.activations.size()) != k + 1)
        throw ShapeError("backward: trace does not match network depth");
    GradientSet grads = GradientSet::zeros(net.shape());
    Vector delta = output_delta(net, trace, targets, mode);
    for (Index l = k - 1; l >= 0; --l) {
        const auto il = static_cast<std::size_t>(l);
        grads.weight_grads[il] = outer(delta, trace.activations[il]);
        grads.bias_grads[il] = delta;
        if (l == 0) break;
        const Activation act = mode == Thresholds::Active ? net.layer(l - 1).activation
                                                          : net.layer(l - 1).activation.base();
        const Vector backflow = net.layer(l).weights.transpose() * delta;
        const Vector& z_prev = trace.preactivations[il - 1];
        Vector next(z_prev.size());
        for (Index u = 0; u < z_prev.size(); ++u)
            next[u] = act.deriv(z_prev[u], u) * backflow[u];
        delta = std::move(next);
    }
    return grads;
}

/// Concatenates all weight partials layer by layer in row-major order, then
/// all bias partials layer by layer. Saved model parameters use the same
/// order, so a flattened gradient aligns with them index for index.
inline Vector flatten(const GradientSet& g) {
    Index n = 0;
    for (const auto& w : g.weight_grads) n += w.size();
    for (const auto& b : g.bias_grads) n += b.size();
    Vector out(n);
    Index at = 0;
    for (const auto& w : g.weight_grads)
        for (Index j = 0; j < w.rows(); ++j)
            for (Index u = 0; u < w.cols(); ++u) out[at++] = w(j, u);
    for (const auto& b : g.bias_grads)
        for (Index j = 0; j < b.size(); ++j) out[at++] = b[j];
    return out;
}

namespace detail {

inline double sample_cost(const Network& net, const LabeledSample& sample, Thresholds mode) {
    return cost(forward(net, sample.input, mode).output(), sample.target);
}

/// True when any branchy activation (relu and the cutoff kinds) lands on
/// different sides of its cutoff in the two traces.
inline bool branch_flip(const Network& net, Thresholds mode, const ForwardTrace& a,
                        const ForwardTrace& b) {
    for (Index l = 0; l < net.depth(); ++l) {
        const Activation act = mode == Thresholds::Active ? net.layer(l).activation
                                                          : net.layer(l).activation.base();
        const ActKind k = act.kind();
        if (k != ActKind::Relu && !kind_has_threshold(k)) continue;
        const auto il = static_cast<std::size_t>(l);
        const Vector& za = a.preactivations[il];
        const Vector& zb = b.preactivations[il];
        for (Index j = 0; j < za.size(); ++j) {
            const double eps = k == ActKind::Relu ? 0.0 : act.epsilon_at(j);
            if ((za[j] > eps) != (zb[j] > eps)) return true;
        }
    }
    return false;
}

/// Central difference of the per-sample cost with respect to every
/// parameter, one at a time. When flips is non-null it records, in flatten
/// order, whether perturbing the parameter moved a pre-activation across an
/// activation cutoff (such entries have no meaningful difference quotient).
inline GradientSet fd_scan(const Network& net, const LabeledSample& sample, double h,
                           Thresholds mode, std::vector<bool>* flips) {
    if (!(h > 0.0)) throw ValueError("finite difference step h must be positive");
    Network probe = net;
    GradientSet g = GradientSet::zeros(net.shape());
    if (flips) flips->clear();
    const ForwardTrace base =
        flips ? forward(net, sample.input, mode) : ForwardTrace{};

    auto central = [&](double& param, double& out) {
        const double saved = param;
        param = saved + h;
        const ForwardTrace plus = forward(probe, sample.input, mode);
        param = saved - h;
        const ForwardTrace minus = forward(probe, sample.input, mode);
        param = saved;
        out = (cost(plus.output(), sample.target) - cost(minus.output(), sample.target)) / (2.0 * h);
        if (flips)
            flips->push_back(branch_flip(probe, mode, plus, base) ||
                             branch_flip(probe, mode, minus, base));
    };

    for (Index l = 0; l < net.depth(); ++l) {
        Matrix& w = probe.layer(l).weights;
        Matrix& gw = g.weight_grads[static_cast<std::size_t>(l)];
        for (Index j = 0; j < w.rows(); ++j)
            for (Index u = 0; u < w.cols(); ++u) central(w(j, u), gw(j, u));
    }
    for (Index l = 0; l < net.depth(); ++l) {
        Vector& b = probe.layer(l).biases;
        Vector& gb = g.bias_grads[static_cast<std::size_t>(l)];
        for (Index j = 0; j < b.size(); ++j) central(b[j], gb[j]);
    }
    return g;
}

} // namespace detail

/// Independent gradient oracle: perturbs one parameter at a time and
/// re-runs the forward pass, (C(p+h) - C(p-h)) / 2h.
inline GradientSet finite_diff_gradient(const Network& net, const LabeledSample& sample, double h,
                                        Thresholds mode = Thresholds::Active) {
    return detail::fd_scan(net, sample, h, mode, nullptr);
}

struct GradCheckReport {
    double max_rel_error = 0.0;
    bool pass = false;
    std::int64_t compared = 0;
    std::int64_t excluded = 0; // parameters whose perturbation crossed a cutoff
};

/// Pure comparison half of the gradient check:
/// max|bp - fd| / max(1, max|fd|), restricted to comparable entries.
inline GradCheckReport compare_gradients(const Vector& bp, const Vector& fd, double tol,
                                         const std::vector<bool>* excluded = nullptr) {
    if (bp.size() != fd.size())
        throw ShapeError("compare_gradients: length " + std::to_string(bp.size()) + " vs " +
                         std::to_string(fd.size()));
    GradCheckReport r;
    double num = 0.0, den = 1.0;
    for (Index i = 0; i < bp.size(); ++i) {
        if (excluded && (*excluded)[static_cast<std::size_t>(i)]) {
            ++r.excluded;
            continue;
        }
        ++r.compared;
        num = std::max(num, std::abs(bp[i] - fd[i]));
        den = std::max(den, std::abs(fd[i]));
    }
    r.max_rel_error = num / den;
    r.pass = r.max_rel_error <= tol;
    return r;
}

/// Runs backprop against the finite-difference oracle on one sample.
/// Parameters whose perturbation crosses an activation cutoff are excluded
/// from the comparison.
inline GradCheckReport gradient_check(const Network& net, const LabeledSample& sample, double h,
                                      double tol, Thresholds mode = Thresholds::Active) {
    const ForwardTrace trace = forward(net, sample.input, mode);
    const Vector bp = flatten(backward(net, trace, sample.target, mode));
    std::vector<bool> flips;
    const Vector fd = flatten(detail::fd_scan(net, sample, h, mode, &flips));
    return compare_gradients(bp, fd, tol, &flips);
}

} // namespace snn
