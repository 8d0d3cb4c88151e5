#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "snn/activations.hpp"
#include "snn/error.hpp"
#include "snn/random.hpp"
#include "snn/tensor.hpp"

namespace snn {

/// Layer widths n_0 ... n_k, input layer first. At least two entries.
struct NetworkShape {
    std::vector<Index> widths;

    NetworkShape() = default;
    NetworkShape(std::initializer_list<Index> w) : widths(w) { validate(); }
    explicit NetworkShape(std::vector<Index> w) : widths(std::move(w)) { validate(); }

    void validate() const {
        if (widths.size() < 2)
            throw ValueError("network shape needs an input and an output layer, got " +
                             std::to_string(widths.size()) + " entries");
        for (Index w : widths)
            if (w < 1) throw ValueError("layer width must be positive, got " + std::to_string(w));
    }

    /// Number of weight layers, k.
    Index depth() const { return static_cast<Index>(widths.size()) - 1; }
    Index input_width() const { return widths.front(); }
    Index output_width() const { return widths.back(); }

    bool operator==(const NetworkShape& o) const { return widths == o.widths; }
};

struct ParamCount {
    std::int64_t weights = 0;
    std::int64_t biases = 0;
    std::int64_t total() const { return weights + biases; }
};

/// weights = sum of n_l * n_{l+1} over consecutive layers, biases = sum of
/// all non-input widths.
inline ParamCount param_count(const NetworkShape& shape) {
    shape.validate();
    ParamCount pc;
    for (std::size_t l = 0; l + 1 < shape.widths.size(); ++l) {
        pc.weights += static_cast<std::int64_t>(shape.widths[l]) * shape.widths[l + 1];
        pc.biases += shape.widths[l + 1];
    }
    return pc;
}

/// One weight layer: entry (j, u) connects neuron u of the previous layer to
/// neuron j of the next one, the bias vector offsets the next layer, and the
/// activation is the next layer's nonlinearity.
struct LayerParams {
    Matrix weights; // n_{l+1} x n_l
    Vector biases;  // n_{l+1}
    Activation activation;
};

class Network {
public:
    Network(NetworkShape shape, std::vector<LayerParams> layers)
        : shape_(std::move(shape)), layers_(std::move(layers)) {
        shape_.validate();
        if (static_cast<Index>(layers_.size()) != shape_.depth())
            throw ShapeError("network expects " + std::to_string(shape_.depth()) +
                             " weight layers, got " + std::to_string(layers_.size()));
        for (Index l = 0; l < shape_.depth(); ++l) {
            const auto& p = layers_[static_cast<std::size_t>(l)];
            if (p.weights.rows() != shape_.widths[l + 1] || p.weights.cols() != shape_.widths[l] ||
                p.biases.size() != shape_.widths[l + 1])
                throw ShapeError("layer " + std::to_string(l) + " parameters do not match shape");
            if (p.activation.epsilon().size() > 1 &&
                p.activation.epsilon().size() != shape_.widths[l + 1])
                throw ShapeError("layer " + std::to_string(l) + " epsilon vector length " +
                                 std::to_string(p.activation.epsilon().size()) +
                                 " does not match width " + std::to_string(shape_.widths[l + 1]));
        }
    }

    const NetworkShape& shape() const { return shape_; }
    Index depth() const { return shape_.depth(); }
    const std::vector<LayerParams>& layers() const { return layers_; }
    std::vector<LayerParams>& layers() { return layers_; }
    const LayerParams& layer(Index l) const { return layers_[static_cast<std::size_t>(l)]; }
    LayerParams& layer(Index l) { return layers_[static_cast<std::size_t>(l)]; }

private:
    NetworkShape shape_;
    std::vector<LayerParams> layers_;
};

/// Fresh network with weights uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)]
/// and zero biases. Weights are drawn layer by layer in row-major order, so
/// one seed always reproduces the same parameters bit for bit.
inline Network init_network(const NetworkShape& shape, const std::vector<Activation>& activations,
                            std::uint64_t seed) {
    shape.validate();
    if (static_cast<Index>(activations.size()) != shape.depth())
        throw ValueError("expected " + std::to_string(shape.depth()) + " activations, got " +
                         std::to_string(activations.size()));
    Rng rng(seed);
    std::vector<LayerParams> layers;
    layers.reserve(static_cast<std::size_t>(shape.depth()));
    for (Index l = 0; l < shape.depth(); ++l) {
        const Index fan_in = shape.widths[l];
        const Index fan_out = shape.widths[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(fan_out, fan_in);
        for (Index j = 0; j < fan_out; ++j)
            for (Index u = 0; u < fan_in; ++u) w(j, u) = rng.uniform(-scale, scale);
        layers.push_back({std::move(w), Vector::Zero(fan_out),
                          activations[static_cast<std::size_t>(l)]});
    }
    return Network(shape, std::move(layers));
}

/// Whether forward passes honor the activation cutoffs or fall back to the
/// base nonlinearities. Bypassing is used for training passes when the
/// cutoffs are configured as an inference-only device.
enum class Thresholds { Active, Bypassed };

/// Every pre-activation and activation of one forward pass, kept around for
/// the backward pass. preactivations[l] is the input to layer l+1's
/// nonlinearity; activations[0] is the network input.
struct ForwardTrace {
    std::vector<Vector> preactivations; // z^(1) ... z^(k)
    std::vector<Vector> activations;    // a^(0) ... a^(k)

    const Vector& output() const { return activations.back(); }
};

inline ForwardTrace forward(const Network& net, const Vector& input,
                            Thresholds mode = Thresholds::Active) {
    if (input.size() != net.shape().input_width())
        throw ShapeError("forward: input length " + std::to_string(input.size()) +
                         " does not match input width " +
                         std::to_string(net.shape().input_width()));
    ForwardTrace trace;
    trace.preactivations.reserve(static_cast<std::size_t>(net.depth()));
    trace.activations.reserve(static_cast<std::size_t>(net.depth()) + 1);
    trace.activations.push_back(input);
    for (Index l = 0; l < net.depth(); ++l) {
        const LayerParams& p = net.layer(l);
        Vector z = matvec(p.weights, trace.activations.back()) + p.biases;
        const Activation act =
            mode == Thresholds::Active ? p.activation : p.activation.base();
        trace.activations.push_back(map(act, z));
        trace.preactivations.push_back(std::move(z));
    }
    return trace;
}

/// Index of the largest entry; ties go to the lowest index.
inline Index argmax(const Vector& v) {
    Index best = 0;
    for (Index i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

inline Index predict(const Network& net, const Vector& input,
                     Thresholds mode = Thresholds::Active) {
    return argmax(forward(net, input, mode).output());
}

} // namespace snn
