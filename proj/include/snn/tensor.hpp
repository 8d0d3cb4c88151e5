#pragma once

#include <Eigen/Dense>

#include <sstream>
#include <type_traits>
#include <string>

#include "snn/error.hpp"

namespace snn {

using Index = Eigen::Index;

template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Dense matrices are stored row-major so that the on-disk parameter order
/// and the flattened gradient order coincide entry for entry.
template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vector = VecX<double>;
using Matrix = MatX<double>;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

inline std::string shape_string(Index rows, Index cols) {
    std::ostringstream os;
    os << rows << "x" << cols;
    return os.str();
}

} // namespace detail

/// Matrix-vector product. Rejects mismatched shapes, naming both operands.
template <class DM, class DV>
Vector matvec(const Eigen::MatrixBase<DM>& m, const Eigen::MatrixBase<DV>& v) {
    if (m.cols() != v.size()) {
        throw ShapeError("matvec: cannot multiply " + detail::shape_string(m.rows(), m.cols()) +
                         " matrix by length-" + std::to_string(v.size()) + " vector");
    }
    return m * v;
}

/// Outer product u v^T; rows follow u, columns follow v.
template <class DU, class DV>
Matrix outer(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v) {
    return u * v.transpose();
}

/// Applies a scalar function entrywise.
template <class F, class DV>
    requires std::is_invocable_r_v<double, F&, double>
Vector map(F&& f, const Eigen::MatrixBase<DV>& v) {
    Vector out(v.size());
    for (Index i = 0; i < v.size(); ++i) out[i] = f(v[i]);
    return out;
}

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
    return x.derived().array().isFinite().all();
}

} // namespace snn
