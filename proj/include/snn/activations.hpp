#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "snn/error.hpp"
#include "snn/tensor.hpp"

namespace snn {

enum class ActKind {
    Identity,
    Sigmoid,
    Relu,
    ModifiedRelu,       // 0 for x <= eps, x above
    ThresholdedSigmoid, // 0 for x <= eps, sigmoid above
};

inline bool kind_has_threshold(ActKind k) {
    return k == ActKind::ModifiedRelu || k == ActKind::ThresholdedSigmoid;
}

/// Numerically stable logistic function, pinned to the open interval: deep
/// saturation is rounded to the nearest representable value inside (0, 1)
/// instead of 0.0 or 1.0, because an exact 0.0 activation is reserved as
/// the cutoff marker in the sparsity accounting.
inline double sigmoid(double x) {
    constexpr double lowest = std::numeric_limits<double>::denorm_min();
    constexpr double highest = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    double s;
    if (x >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        s = e / (1.0 + e);
    }
    return std::clamp(s, lowest, highest);
}

inline double sigmoid_deriv(double x) {
    const double s = sigmoid(x);
    return s * (1.0 - s);
}

/// A scalar nonlinearity plus, for the thresholded kinds, its cutoff values.
/// The cutoff may be one broadcast scalar or one value per neuron.
class Activation {
public:
    explicit Activation(ActKind kind) : kind_(kind) {
        if (kind_has_threshold(kind_))
            throw ValueError("activation '" + to_string(kind_) + "' requires an epsilon");
    }

    Activation(ActKind kind, double epsilon) : kind_(kind), epsilon_(Vector::Constant(1, epsilon)) {
        require_threshold_kind();
        check_nonnegative();
    }

    Activation(ActKind kind, Vector epsilon) : kind_(kind), epsilon_(std::move(epsilon)) {
        require_threshold_kind();
        if (epsilon_.size() == 0) throw ValueError("per-neuron epsilon vector is empty");
        check_nonnegative();
    }

    ActKind kind() const { return kind_; }
    bool thresholded() const { return kind_has_threshold(kind_); }
    const Vector& epsilon() const { return epsilon_; }

    /// Cutoff for neuron j; a single stored value broadcasts to all neurons.
    double epsilon_at(Index j) const {
        if (epsilon_.size() == 0) return 0.0;
        return epsilon_.size() == 1 ? epsilon_[0] : epsilon_[j];
    }

    double eval(double x, Index j = 0) const {
        switch (kind_) {
        case ActKind::Identity: return x;
        case ActKind::Sigmoid: return sigmoid(x);
        case ActKind::Relu: return x > 0.0 ? x : 0.0;
        case ActKind::ModifiedRelu: return x > epsilon_at(j) ? x : 0.0;
        case ActKind::ThresholdedSigmoid: return x > epsilon_at(j) ? sigmoid(x) : 0.0;
        }
        throw ValueError("unknown activation kind");
    }

    /// One-sided derivative convention: at the cutoff (and at 0 for relu)
    /// the zero branch wins, so pruned neurons contribute no gradient.
    double deriv(double x, Index j = 0) const {
        switch (kind_) {
        case ActKind::Identity: return 1.0;
        case ActKind::Sigmoid: return sigmoid_deriv(x);
        case ActKind::Relu: return x > 0.0 ? 1.0 : 0.0;
        case ActKind::ModifiedRelu: return x > epsilon_at(j) ? 1.0 : 0.0;
        case ActKind::ThresholdedSigmoid: return x > epsilon_at(j) ? sigmoid_deriv(x) : 0.0;
        }
        throw ValueError("unknown activation kind");
    }

    /// The same nonlinearity with any cutoff removed; used when thresholds
    /// are to be bypassed during training passes.
    Activation base() const {
        switch (kind_) {
        case ActKind::ModifiedRelu: return Activation(ActKind::Relu);
        case ActKind::ThresholdedSigmoid: return Activation(ActKind::Sigmoid);
        default: return *this;
        }
    }

    static std::string to_string(ActKind k) {
        switch (k) {
        case ActKind::Identity: return "identity";
        case ActKind::Sigmoid: return "sigmoid";
        case ActKind::Relu: return "relu";
        case ActKind::ModifiedRelu: return "modified-relu";
        case ActKind::ThresholdedSigmoid: return "thresholded-sigmoid";
        }
        return "?";
    }

private:
    void require_threshold_kind() const {
        if (!kind_has_threshold(kind_))
            throw ValueError("activation '" + to_string(kind_) + "' does not take an epsilon");
    }
    void check_nonnegative() const {
        if ((epsilon_.array() < 0.0).any())
            throw ValueError("epsilon must be nonnegative");
    }

    ActKind kind_;
    Vector epsilon_; // empty, or 1 broadcast value, or one value per neuron
};

/// Parses the lowercase tag used on the command line and in config files.
inline ActKind parse_act_kind(const std::string& tag) {
    if (tag == "identity") return ActKind::Identity;
    if (tag == "sigmoid") return ActKind::Sigmoid;
    if (tag == "relu") return ActKind::Relu;
    if (tag == "modified-relu") return ActKind::ModifiedRelu;
    if (tag == "thresholded-sigmoid") return ActKind::ThresholdedSigmoid;
    throw ValueError("unregistered activation tag '" + tag + "'");
}

template <class DV>
Vector map(const Activation& act, const Eigen::MatrixBase<DV>& v) {
    Vector out(v.size());
    for (Index i = 0; i < v.size(); ++i) out[i] = act.eval(v[i], i);
    return out;
}

} // namespace snn
