#pragma once

#include <string>
#include <vector>

#include "snn/error.hpp"
#include "snn/network.hpp"
#include "snn/tensor.hpp"

namespace snn {

/// Per-layer boolean matrices mirroring the weight matrices. true = weight
/// still trainable, false = weight frozen at exactly zero.
struct PruneMask {
    std::vector<BoolMatrix> layers;

    static PruneMask all_active(const NetworkShape& shape) {
        PruneMask m;
        for (Index l = 0; l < shape.depth(); ++l)
            m.layers.push_back(
                BoolMatrix::Constant(shape.widths[l + 1], shape.widths[l], true));
        return m;
    }

    std::int64_t frozen_count() const {
        std::int64_t n = 0;
        for (const auto& m : layers) n += (m == false).count();
        return n;
    }

    /// Shape must mirror the network and every frozen weight must already be
    /// exactly zero.
    void validate_against(const Network& net) const {
        if (static_cast<Index>(layers.size()) != net.depth())
            throw ShapeError("mask has " + std::to_string(layers.size()) + " layers, network has " +
                             std::to_string(net.depth()));
        for (Index l = 0; l < net.depth(); ++l) {
            const BoolMatrix& m = layers[static_cast<std::size_t>(l)];
            const Matrix& w = net.layer(l).weights;
            if (m.rows() != w.rows() || m.cols() != w.cols())
                throw ShapeError("mask layer " + std::to_string(l) + " is " +
                                 detail::shape_string(m.rows(), m.cols()) + ", weights are " +
                                 detail::shape_string(w.rows(), w.cols()));
            for (Index j = 0; j < w.rows(); ++j)
                for (Index u = 0; u < w.cols(); ++u)
                    if (!m(j, u) && w(j, u) != 0.0)
                        throw ValueError("mask violation: weight (" + std::to_string(l) + "," +
                                         std::to_string(j) + "," + std::to_string(u) +
                                         ") is frozen but nonzero");
        }
    }
};

} // namespace snn
