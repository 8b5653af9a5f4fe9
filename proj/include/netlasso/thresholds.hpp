#pragma once

#include <netlasso/graph.hpp>
#include <netlasso/losses.hpp>
#include <netlasso/partition.hpp>
#include <netlasso/types.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace netlasso {

namespace detail {

// a / b with a / 0 = infinity for a > 0.
template <typename Scalar>
Scalar ratio_or_inf(Scalar a, Scalar b) {
  if (b > Scalar(0)) return a / b;
  return a > Scalar(0) ? std::numeric_limits<Scalar>::infinity() : Scalar(0);
}

// w_i^(l) for every node i and cluster l.
template <typename Scalar>
Matrix<Scalar> node_cluster_weights(const WeightedGraph<Scalar>& graph, const Partition& part) {
  Matrix<Scalar> w = Matrix<Scalar>::Zero(graph.num_vertices(), part.num_clusters());
  for (Index k = 0; k < graph.num_edges(); ++k) {
    const Edge& e = graph.edge(k);
    w(e.i, part.label(e.j)) += graph.weight(k);
    w(e.j, part.label(e.i)) += graph.weight(k);
  }
  return w;
}

template <typename Scalar>
void check_partition(const WeightedGraph<Scalar>& graph, const Partition& part) {
  if (part.size() != graph.num_vertices()) throw std::invalid_argument("thresholds: partition size differs from graph");
  if (part.num_clusters() < 1) throw std::invalid_argument("thresholds: empty partition");
}

}  // namespace detail

/// Within-cluster pair term of the recovery interval.
template <typename Scalar>
struct PairTerm {
  Index cluster = 0;
  Index i = 0;
  Index j = 0;
  Scalar weight = 0;
  Scalar mu = 0;
  Scalar gradient_gap = 0;  // ||grad f_j(xbar^(k)) - grad f_i(xbar^(k))||
  Scalar ratio = 0;         // gradient_gap / (n_k w_ij - mu), infinity when the denominator is <= 0
  bool premise_ok = false;  // n_k w_ij > mu
};

template <typename Scalar>
struct RecoveryReport {
  std::vector<Index> cluster_sizes;             // n_k
  Matrix<Scalar> node_cluster_weights;          // w_i^(l), n x N
  Matrix<Scalar> cross_weights;                 // w^(k,l), N x N
  Matrix<Scalar> cluster_minimizers;            // row k = xbar^(k)
  Vector<Scalar> global_minimizer;              // xbar
  std::vector<Scalar> alpha;                    // alpha_k
  std::vector<Scalar> smoothness;               // L_i
  std::vector<PairTerm<Scalar>> pairs;
  Matrix<int> distinct_minimizers;              // 1 when xbar^(k) != xbar^(k')
  Scalar gamma_min = 0;
  Scalar gamma_max = std::numeric_limits<Scalar>::infinity();
  Scalar coarsening_bound = 0;
  bool alpha_user_supplied = false;
  bool premise_ok = true;  // every pair satisfies n_k w_ij > mu and all minimizers are distinct

  bool interval_nonempty() const { return premise_ok && gamma_min < gamma_max; }
};

/// Recovery interval [gamma_min, gamma_max) and coarsening bound for the
/// partition `part`. alpha_k defaults to the strong-convexity modulus of the
/// aggregate loss; `alpha_override` supplies it per cluster instead.
template <typename Scalar>
RecoveryReport<Scalar> recovery_interval(const LossSet<Scalar>& losses, const WeightedGraph<Scalar>& graph,
                                         const Partition& part,
                                         const std::optional<std::vector<std::type_identity_t<Scalar>>>& alpha_override = std::nullopt) {
  detail::check_partition(graph, part);
  if (losses.num_nodes() != graph.num_vertices())
    throw std::invalid_argument("recovery_interval: losses and graph disagree on the node count");
  for (Index i = 0; i < losses.num_nodes(); ++i)
    if (!(losses.strong_convexity(i) > Scalar(0)))
      throw std::invalid_argument("recovery_interval: loss at node " + std::to_string(i) + " is not strictly convex");

  const Index n = graph.num_vertices(), p = losses.dim(), q = part.num_clusters();
  const auto clusters = part.clusters();
  RecoveryReport<Scalar> rep;
  rep.node_cluster_weights = detail::node_cluster_weights(graph, part);
  rep.cross_weights = Matrix<Scalar>::Zero(q, q);
  for (Index i = 0; i < n; ++i) rep.cross_weights.row(part.label(i)) += rep.node_cluster_weights.row(i);
  rep.cluster_minimizers.resize(q, p);
  for (Index i = 0; i < n; ++i) rep.smoothness.push_back(losses.smoothness(i));

  if (alpha_override) {
    if (static_cast<Index>(alpha_override->size()) != q)
      throw std::invalid_argument("recovery_interval: need one alpha per cluster");
    rep.alpha = *alpha_override;
    rep.alpha_user_supplied = true;
  }
  for (Index k = 0; k < q; ++k) {
    const auto& members = clusters[static_cast<std::size_t>(k)];
    if (members.empty()) throw std::invalid_argument("recovery_interval: empty cluster");
    rep.cluster_sizes.push_back(static_cast<Index>(members.size()));
    if (!alpha_override) rep.alpha.push_back(losses.aggregate_strong_convexity(members));
    if (!(rep.alpha[static_cast<std::size_t>(k)] > Scalar(0)))
      throw std::invalid_argument("recovery_interval: aggregate loss of cluster " + std::to_string(k) +
                                  " is not strongly convex");
    rep.cluster_minimizers.row(k) = losses.sum_loss_minimizer(members).transpose();
  }

  // Sum over l != k of w^(k,l).
  Vector<Scalar> outside(q);
  for (Index k = 0; k < q; ++k) outside(k) = rep.cross_weights.row(k).sum() - rep.cross_weights(k, k);

  rep.distinct_minimizers = Matrix<int>::Ones(q, q);
  for (Index k = 0; k < q; ++k) {
    rep.distinct_minimizers(k, k) = 0;
    for (Index l = k + 1; l < q; ++l) {
      const Scalar gap = (rep.cluster_minimizers.row(k) - rep.cluster_minimizers.row(l)).norm();
      const Scalar scale = Scalar(1) + rep.cluster_minimizers.row(k).norm() + rep.cluster_minimizers.row(l).norm();
      const bool distinct = gap > Scalar(1e-9) * scale;
      rep.distinct_minimizers(k, l) = rep.distinct_minimizers(l, k) = distinct ? 1 : 0;
      if (!distinct) rep.premise_ok = false;
      const Scalar denom = outside(k) / rep.alpha[static_cast<std::size_t>(k)] +
                           outside(l) / rep.alpha[static_cast<std::size_t>(l)];
      rep.gamma_max = std::min(rep.gamma_max, detail::ratio_or_inf(gap, denom));
    }
  }

  for (Index k = 0; k < q; ++k) {
    const auto& members = clusters[static_cast<std::size_t>(k)];
    const Vector<Scalar> xk = rep.cluster_minimizers.row(k).transpose();
    const Scalar nk = Scalar(members.size());
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        PairTerm<Scalar> t;
        t.cluster = k;
        t.i = members[a];
        t.j = members[b];
        t.weight = graph.weight_between(t.i, t.j);
        Scalar spread = 0;
        for (Index l = 0; l < q; ++l)
          if (l != k) spread += std::abs(rep.node_cluster_weights(t.i, l) - rep.node_cluster_weights(t.j, l));
        t.mu = spread + (losses.smoothness(t.i) + losses.smoothness(t.j)) / rep.alpha[static_cast<std::size_t>(k)] *
                            outside(k);
        t.gradient_gap = (losses.gradient(t.j, xk) - losses.gradient(t.i, xk)).norm();
        const Scalar denom = nk * t.weight - t.mu;
        t.premise_ok = denom > Scalar(0);
        if (!t.premise_ok) rep.premise_ok = false;
        t.ratio = t.premise_ok ? t.gradient_gap / denom : std::numeric_limits<Scalar>::infinity();
        rep.gamma_min = std::max(rep.gamma_min, t.ratio);
        rep.pairs.push_back(t);
      }
  }

  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  rep.global_minimizer = losses.sum_loss_minimizer(all);
  for (Index k = 0; k < q; ++k) {
    Vector<Scalar> g = Vector<Scalar>::Zero(p);
    for (Index i : clusters[static_cast<std::size_t>(k)]) g += losses.gradient(i, rep.global_minimizer);
    rep.coarsening_bound = std::max(rep.coarsening_bound, detail::ratio_or_inf(g.norm(), outside(k)));
  }
  return rep;
}

template <typename Scalar>
struct ClusteringInterval {
  Scalar gamma_min = 0;
  Scalar gamma_max = std::numeric_limits<Scalar>::infinity();
  bool premise_ok = true;
};

/// Interval specialized to convex clustering (f_i = 1/2 ||x - a_i||^2), built
/// from cluster means and sizes.
template <typename Derived>
ClusteringInterval<typename Derived::Scalar> recovery_interval_cc(const Eigen::MatrixBase<Derived>& points,
                                                                   const WeightedGraph<typename Derived::Scalar>& graph,
                                                                   const Partition& part) {
  using Scalar = typename Derived::Scalar;
  detail::check_partition(graph, part);
  if (points.rows() != graph.num_vertices()) throw std::invalid_argument("recovery_interval_cc: point count differs");
  const Index q = part.num_clusters();
  const auto clusters = part.clusters();
  const Matrix<Scalar> wl = detail::node_cluster_weights(graph, part);
  Matrix<Scalar> cross = Matrix<Scalar>::Zero(q, q);
  for (Index i = 0; i < points.rows(); ++i) cross.row(part.label(i)) += wl.row(i);
  Matrix<Scalar> means = Matrix<Scalar>::Zero(q, points.cols());
  for (Index i = 0; i < points.rows(); ++i) means.row(part.label(i)) += points.row(i);
  for (Index k = 0; k < q; ++k) means.row(k) /= Scalar(clusters[static_cast<std::size_t>(k)].size());

  ClusteringInterval<Scalar> out;
  for (Index k = 0; k < q; ++k)
    for (Index l = k + 1; l < q; ++l) {
      const Scalar nk = Scalar(clusters[static_cast<std::size_t>(k)].size());
      const Scalar nl = Scalar(clusters[static_cast<std::size_t>(l)].size());
      const Scalar denom = (cross.row(k).sum() - cross(k, k)) / nk + (cross.row(l).sum() - cross(l, l)) / nl;
      out.gamma_max = std::min(out.gamma_max, detail::ratio_or_inf(Scalar((means.row(k) - means.row(l)).norm()), denom));
    }
  for (Index k = 0; k < q; ++k) {
    const auto& members = clusters[static_cast<std::size_t>(k)];
    const Scalar nk = Scalar(members.size());
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const Index i = members[a], j = members[b];
        Scalar spread = 0;
        for (Index l = 0; l < q; ++l)
          if (l != k) spread += std::abs(wl(i, l) - wl(j, l));
        const Scalar denom = nk * graph.weight_between(i, j) - spread;
        if (!(denom > Scalar(0))) {
          out.premise_ok = false;
          out.gamma_min = std::numeric_limits<Scalar>::infinity();
          continue;
        }
        out.gamma_min = std::max(out.gamma_min, Scalar((points.row(i) - points.row(j)).norm()) / denom);
      }
  }
  return out;
}

template <typename Scalar>
ClusteringInterval<Scalar> recovery_interval_cc(const LossSet<Scalar>& losses, const WeightedGraph<Scalar>& graph,
                                                const Partition& part) {
  if (losses.kind() != LossKind::squared_distance)
    throw std::invalid_argument("recovery_interval_cc: requires squared-distance losses");
  return recovery_interval_cc(losses.points(), graph, part);
}

enum class BoundMethod { supplied, clustering, strongly_convex, quadratic };

inline std::string to_string(BoundMethod m) {
  switch (m) {
    case BoundMethod::supplied: return "supplied-C";
    case BoundMethod::clustering: return "clustering-C";
    case BoundMethod::strongly_convex: return "strongly-convex-C";
    case BoundMethod::quadratic: return "quadratic-C";
  }
  return "unknown";
}

template <typename Scalar>
struct PenaltyThreshold {
  Scalar bound_C = 0;
  Scalar gamma_star = 0;  // sum_i (||grad f_i(0)|| + 2 L_i C)
  BoundMethod method = BoundMethod::supplied;
  bool degenerate = false;  // gamma_star == 0
};

/// gamma above which penalized minimizers satisfy the cardinality constraint.
template <typename Scalar>
PenaltyThreshold<Scalar> exact_penalty_threshold(const LossSet<Scalar>& losses, Scalar C,
                                                 BoundMethod method = BoundMethod::supplied) {
  if (!(C >= Scalar(0)) || !std::isfinite(double(C)))
    throw std::invalid_argument("exact_penalty_threshold: C must be finite and non-negative");
  PenaltyThreshold<Scalar> t;
  t.bound_C = C;
  t.method = method;
  const Vector<Scalar> zero = Vector<Scalar>::Zero(losses.dim());
  for (Index i = 0; i < losses.num_nodes(); ++i)
    t.gamma_star += losses.gradient(i, zero).norm() + 2 * losses.smoothness(i) * C;
  t.degenerate = !(t.gamma_star > Scalar(0));
  return t;
}

/// max_i ||a_i||.
template <typename Derived>
typename Derived::Scalar bound_C_clustering(const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  if (points.rows() == 0) return Scalar(0);
  return points.rowwise().norm().maxCoeff();
}

/// sqrt(2/alpha sum_j (f_j(0) - f_j(xbar_j))) + max_i ||xbar_i||, alpha = min alpha_i.
template <typename Scalar>
Scalar bound_C_strongly_convex(const LossSet<Scalar>& losses) {
  const Scalar alpha = losses.min_strong_convexity();
  if (!(alpha > Scalar(0))) throw std::invalid_argument("bound_C_strongly_convex: some alpha_i is zero");
  const Vector<Scalar> zero = Vector<Scalar>::Zero(losses.dim());
  Scalar gap = 0, largest = 0;
  for (Index i = 0; i < losses.num_nodes(); ++i) {
    const Index idx[] = {i};
    const auto m = losses.minimizer(i);
    const Vector<Scalar> xi = m ? *m : losses.sum_loss_minimizer(idx);
    gap += std::max(Scalar(0), losses.eval(i, zero) - losses.eval(i, xi));
    largest = std::max(largest, xi.norm());
  }
  return std::sqrt(2 / alpha * gap) + largest;
}

/// For f_i = 1/2 x^T A_i x - B_i^T x with A_i positive definite:
/// sqrt((1/alpha) sum_i B_i^T A_i^{-1} B_i) + max_i ||A_i^{-1} B_i||, alpha = min lambda_min(A_i).
template <typename Scalar>
Scalar bound_C_quadratic(const LossSet<Scalar>& losses) {
  if (!losses.is_quadratic()) throw std::invalid_argument("bound_C_quadratic: requires quadratic losses");
  const Scalar alpha = losses.min_strong_convexity();
  if (!(alpha > Scalar(0))) throw std::invalid_argument("bound_C_quadratic: some A_i is not positive definite");
  Scalar energy = 0, largest = 0;
  for (Index i = 0; i < losses.num_nodes(); ++i) {
    const Matrix<Scalar> a = losses.hessian(i);
    const Vector<Scalar> b = losses.linear_term(i);
    Eigen::LLT<Matrix<Scalar>> llt(a);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("bound_C_quadratic: some A_i is not positive definite");
    const Vector<Scalar> sol = llt.solve(b);
    energy += b.dot(sol);
    largest = std::max(largest, sol.norm());
  }
  return std::sqrt(std::max(Scalar(0), energy) / alpha) + largest;
}

}  // namespace netlasso
