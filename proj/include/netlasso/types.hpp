#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace netlasso {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Row i holds the parameter vector x_i of node i. Row-major storage makes the
// raw buffer the node-major stacked vector (x_1; x_2; ...; x_n) in R^{n p}.
template <typename Scalar>
using CentroidMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row k holds block z_k in R^p, one per edge.
template <typename Scalar>
using BlockVector = CentroidMatrix<Scalar>;

template <typename Scalar>
using StackedMap = Eigen::Map<Vector<Scalar>>;

template <typename Scalar>
using ConstStackedMap = Eigen::Map<const Vector<Scalar>>;

/// View a centroid or block matrix as its stacked vector without copying.
template <typename Scalar>
StackedMap<Scalar> stacked(CentroidMatrix<Scalar>& m) {
  return StackedMap<Scalar>(m.data(), m.size());
}

template <typename Scalar>
ConstStackedMap<Scalar> stacked(const CentroidMatrix<Scalar>& m) {
  return ConstStackedMap<Scalar>(m.data(), m.size());
}

/// Raised when a computation cannot produce a meaningful number (singular
/// systems, divergence, non-convex inputs where convexity is required).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace netlasso
