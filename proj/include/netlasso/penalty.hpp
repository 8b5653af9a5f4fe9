#pragma once

#include <netlasso/types.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace netlasso {

/// Split of the block indices into the K largest-norm blocks (left untouched
/// by the penalty) and the rest. Both lists are in increasing index order.
struct TrimSelection {
  std::vector<Index> kept;
  std::vector<Index> trimmed;
};

template <typename Derived>
Vector<typename Derived::Scalar> block_norms(const Eigen::MatrixBase<Derived>& z) {
  return z.rowwise().norm();
}

namespace detail {

inline void check_budget(Index K) {
  if (K < 0) throw std::invalid_argument("trimmed penalty: K must be non-negative");
}

}  // namespace detail

/// Indices of the min(K, m) largest norms, ties broken by the lowest index.
template <typename Scalar>
TrimSelection select_top_k(const Vector<Scalar>& norms, Index K) {
  detail::check_budget(K);
  const Index m = norms.size();
  const Index k = std::min(K, m);
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  auto before = [&](Index a, Index b) { return norms(a) > norms(b) || (norms(a) == norms(b) && a < b); };
  std::nth_element(order.begin(), order.begin() + k, order.end(), before);
  TrimSelection sel;
  sel.kept.assign(order.begin(), order.begin() + k);
  sel.trimmed.assign(order.begin() + k, order.end());
  std::sort(sel.kept.begin(), sel.kept.end());
  std::sort(sel.trimmed.begin(), sel.trimmed.end());
  return sel;
}

/// tau_K(z) = T_K(z): sum of the m-K smallest block norms. K >= m gives 0.
template <typename Derived>
typename Derived::Scalar trimmed_norm(const Eigen::MatrixBase<Derived>& z, Index K) {
  using Scalar = typename Derived::Scalar;
  detail::check_budget(K);
  if (K >= z.rows()) return Scalar(0);
  Vector<Scalar> norms = block_norms(z);
  std::sort(norms.data(), norms.data() + norms.size());
  return norms.head(norms.size() - K).sum();
}

/// Sum of all block norms (T_0).
template <typename Derived>
typename Derived::Scalar group_norm_sum(const Eigen::MatrixBase<Derived>& z) {
  return block_norms(z).sum();
}

/// Group soft-threshold: 0 if ||a|| <= lambda, else (1 - lambda/||a||) a.
template <typename Derived>
Vector<typename Derived::Scalar> prox_group_l2(const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  if (!(lambda >= Scalar(0))) throw std::invalid_argument("prox_group_l2: lambda must be non-negative");
  const Scalar nrm = a.norm();
  if (nrm <= lambda) return Vector<Scalar>::Zero(a.size());
  return (Scalar(1) - lambda / nrm) * a;
}

template <typename Scalar>
struct TrimmedProx {
  BlockVector<Scalar> z;
  TrimSelection selection;
};

/// Global minimizer of lambda T_K(z) + 1/2 ||z - a||^2: the K largest blocks
/// are copied, every other block is group-soft-thresholded.
template <typename Derived>
TrimmedProx<typename Derived::Scalar> prox_trimmed(const Eigen::MatrixBase<Derived>& a, Index K,
                                                   typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  if (!(lambda > Scalar(0))) throw std::invalid_argument("prox_trimmed: lambda must be positive");
  const Vector<Scalar> norms = block_norms(a);
  TrimmedProx<Scalar> out{BlockVector<Scalar>(a), select_top_k(norms, K)};
  for (Index k : out.selection.trimmed) {
    const Scalar nrm = norms(k);
    if (nrm <= lambda)
      out.z.row(k).setZero();
    else
      out.z.row(k) *= Scalar(1) - lambda / nrm;
  }
  return out;
}

/// Moreau envelope of lambda |.| evaluated at t >= 0.
template <typename Scalar>
Scalar phi_envelope(Scalar t, Scalar lambda) {
  return t <= lambda ? t * t / 2 : lambda * t - lambda * lambda / 2;
}

/// Directional derivative dT_K(z; v). Norms within `tie_tol` (relative to
/// max(1, ||z_(K)||)) of the K-th largest are treated as tied, and blocks with
/// norm <= zero_tol as zero. Both default to exact comparisons.
template <typename DerivedZ, typename DerivedV>
typename DerivedZ::Scalar directional_derivative(const Eigen::MatrixBase<DerivedZ>& z,
                                                 const Eigen::MatrixBase<DerivedV>& v, Index K,
                                                 typename DerivedZ::Scalar tie_tol = 0,
                                                 typename DerivedZ::Scalar zero_tol = 0) {
  using Scalar = typename DerivedZ::Scalar;
  detail::check_budget(K);
  if (z.rows() != v.rows() || z.cols() != v.cols())
    throw std::invalid_argument("directional_derivative: z and v differ in shape");
  const Index m = z.rows();
  if (K >= m) return Scalar(0);

  const Vector<Scalar> norms = block_norms(z);
  Scalar kth = std::numeric_limits<Scalar>::infinity();
  if (K > 0) {
    Vector<Scalar> sorted = norms;
    std::sort(sorted.data(), sorted.data() + m, std::greater<Scalar>());
    kth = sorted(K - 1);
  }
  const Scalar band = std::isinf(kth) ? Scalar(0) : tie_tol * std::max(Scalar(1), kth);

  auto slope = [&](Index k) -> Scalar {
    if (norms(k) > zero_tol) return z.row(k).dot(v.row(k)) / norms(k);
    return v.row(k).norm();
  };

  Scalar total = 0;
  Index below = 0;
  std::vector<Scalar> tied;
  for (Index k = 0; k < m; ++k) {
    if (norms(k) < kth - band) {
      total += slope(k);
      ++below;
    } else if (norms(k) <= kth + band) {
      tied.push_back(slope(k));
    }
  }
  const Index need = std::max<Index>(0, m - K - below);
  if (need > static_cast<Index>(tied.size()))
    throw std::logic_error("directional_derivative: tie classification is inconsistent");
  std::partial_sort(tied.begin(), tied.begin() + need, tied.end());
  for (Index t = 0; t < need; ++t) total += tied[static_cast<std::size_t>(t)];
  return total;
}

}  // namespace netlasso
