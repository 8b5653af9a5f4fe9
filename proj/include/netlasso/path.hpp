#pragma once

#include <netlasso/graph.hpp>
#include <netlasso/losses.hpp>
#include <netlasso/partition.hpp>
#include <netlasso/penalty.hpp>
#include <netlasso/solver.hpp>
#include <netlasso/types.hpp>

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace netlasso {

/// Connected components of the edges whose endpoints are merged. An edge is
/// merged when ||x_i - x_j|| <= merge_tol (1 + max_i ||x_i||), or when the
/// split variable block z_e is given and exactly zero.
template <typename Scalar>
Partition extract_partition(const CentroidMatrix<Scalar>& x, const WeightedGraph<Scalar>& graph, Scalar merge_tol,
                            const BlockVector<Scalar>* z = nullptr) {
  if (!(merge_tol >= Scalar(0))) throw std::invalid_argument("extract_partition: merge_tol must be non-negative");
  if (x.rows() != graph.num_vertices()) throw std::invalid_argument("extract_partition: wrong number of centroids");
  if (z && z->rows() != graph.num_edges()) throw std::invalid_argument("extract_partition: z has wrong block count");
  const Index n = x.rows();
  const Scalar scale = n > 0 ? Scalar(1) + x.rowwise().norm().maxCoeff() : Scalar(1);
  const Scalar tol = merge_tol * scale;
  UnionFind uf(n);
  for (Index k = 0; k < graph.num_edges(); ++k) {
    const Edge& e = graph.edge(k);
    const bool split_zero = z && z->row(k).isZero(0);
    if (split_zero || (x.row(e.i) - x.row(e.j)).norm() <= tol) uf.unite(e.i, e.j);
  }
  std::vector<Index> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = uf.find(i);
  return Partition(labels);
}

/// Centroids where every cluster sits at the minimizer of its summed loss.
template <typename Scalar>
CentroidMatrix<Scalar> refit_on_partition(const LossSet<Scalar>& losses, const Partition& part) {
  if (part.size() != losses.num_nodes()) throw std::invalid_argument("refit_on_partition: size mismatch");
  CentroidMatrix<Scalar> x(losses.num_nodes(), losses.dim());
  for (const auto& members : part.clusters()) {
    const Vector<Scalar> c = losses.sum_loss_minimizer(members);
    for (Index i : members) x.row(i) = c.transpose();
  }
  return x;
}

template <typename Scalar>
struct PathStep {
  Scalar parameter = 0;
  CentroidMatrix<Scalar> x;
  Partition partition;
  Scalar objective = 0;
  Scalar penalty = 0;  // T_K(D x) for K-paths, sum_e w_e ||(D x)_e|| for gamma-paths
  StopReason reason = StopReason::max_iterations;
  int iterations = 0;
  Scalar primal_residual = 0;
};

template <typename Scalar>
struct PathResult {
  std::string parameter_name;  // "K" or "gamma"
  std::vector<PathStep<Scalar>> steps;
  bool stopped_early = false;
};

namespace detail {

template <typename Scalar>
PathStep<Scalar> make_step(Scalar parameter, SolveResult<Scalar>&& res, const LossSet<Scalar>& losses,
                           const WeightedGraph<Scalar>& graph, const SolverConfig<Scalar>& config, Scalar merge_tol) {
  PathStep<Scalar> step;
  step.parameter = parameter;
  step.reason = res.reason;
  step.iterations = res.state.iter;
  step.primal_residual = res.state.primal_residual.empty() ? Scalar(0) : res.state.primal_residual.back();
  step.partition = extract_partition(res.state.x, graph, merge_tol, &res.state.z);
  const DifferenceOperator<Scalar> d(graph, losses.dim());
  step.penalty = penalty_value(d.apply(res.state.x), graph, config);
  step.objective = losses.total(res.state.x) + config.gamma * step.penalty;
  step.x = std::move(res.state.x);
  return step;
}

}  // namespace detail

/// Cluster path over a strictly decreasing K schedule. Each solve starts from
/// the previous centroids with the dual variable reset to zero.
template <typename Scalar>
PathResult<Scalar> k_path(const LossSet<Scalar>& losses, const WeightedGraph<Scalar>& graph, Scalar gamma,
                          const std::vector<Index>& k_sequence, SolverConfig<Scalar> base,
                          std::optional<CentroidMatrix<std::type_identity_t<Scalar>>> init = std::nullopt,
                          std::type_identity_t<Scalar> merge_tol = Scalar(1e-6)) {
  if (k_sequence.empty()) throw std::invalid_argument("k_path: empty K sequence");
  for (std::size_t t = 0; t < k_sequence.size(); ++t) {
    if (k_sequence[t] < 0 || k_sequence[t] > graph.num_edges())
      throw std::invalid_argument("k_path: K values must lie in [0, m]");
    if (t > 0 && k_sequence[t] >= k_sequence[t - 1]) throw std::invalid_argument("k_path: K must strictly decrease");
  }
  PathResult<Scalar> out;
  out.parameter_name = "K";
  base.gamma = gamma;
  base.penalty = PenaltyKind::trimmed;
  SolverInit<Scalar> start;
  start.x = std::move(init);
  for (Index K : k_sequence) {
    SolverConfig<Scalar> cfg = base;
    cfg.K = K;
    auto res = solve_ntl(losses, graph, cfg, start);
    if (res.reason == StopReason::diverged) throw NumericalError("k_path: solver diverged at K=" + std::to_string(K));
    out.steps.push_back(detail::make_step(Scalar(K), std::move(res), losses, graph, cfg, merge_tol));
    start.x = out.steps.back().x;
  }
  return out;
}

/// Network lasso over a strictly increasing gamma schedule. Stops early once
/// every centroid has merged into one cluster when `stop_when_merged` is set.
template <typename Scalar>
PathResult<Scalar> gamma_path(const LossSet<Scalar>& losses, const WeightedGraph<Scalar>& graph,
                              const std::vector<Scalar>& gammas, SolverConfig<Scalar> base,
                              std::optional<CentroidMatrix<std::type_identity_t<Scalar>>> init = std::nullopt,
                              bool warm_start = true, bool stop_when_merged = true,
                              std::type_identity_t<Scalar> merge_tol = Scalar(1e-6)) {
  if (gammas.empty()) throw std::invalid_argument("gamma_path: empty gamma sequence");
  for (std::size_t t = 0; t < gammas.size(); ++t) {
    if (!(gammas[t] > Scalar(0))) throw std::invalid_argument("gamma_path: gamma values must be positive");
    if (t > 0 && !(gammas[t] > gammas[t - 1])) throw std::invalid_argument("gamma_path: gamma must strictly increase");
  }
  PathResult<Scalar> out;
  out.parameter_name = "gamma";
  base.penalty = PenaltyKind::weighted;
  std::optional<CentroidMatrix<Scalar>> x = init;
  for (std::size_t t = 0; t < gammas.size(); ++t) {
    SolverConfig<Scalar> cfg = base;
    cfg.gamma = gammas[t];
    SolverInit<Scalar> start;
    start.x = warm_start ? x : init;
    auto res = solve_nl(losses, graph, cfg, start);
    if (res.reason == StopReason::diverged)
      throw NumericalError("gamma_path: solver diverged at gamma=" + std::to_string(double(gammas[t])));
    out.steps.push_back(detail::make_step(gammas[t], std::move(res), losses, graph, cfg, merge_tol));
    x = out.steps.back().x;
    if (stop_when_merged && out.steps.back().partition.num_clusters() == 1 && t + 1 < gammas.size()) {
      out.stopped_early = true;
      break;
    }
  }
  return out;
}

/// Centroids at the middle of the steps that still have more than one cluster
/// (the lower middle for an even count).
template <typename Scalar>
CentroidMatrix<Scalar> midpoint_init(const PathResult<Scalar>& path) {
  std::vector<std::size_t> unmerged;
  for (std::size_t t = 0; t < path.steps.size(); ++t)
    if (path.steps[t].partition.num_clusters() > 1) unmerged.push_back(t);
  if (unmerged.empty()) throw std::invalid_argument("midpoint_init: every path step is fully merged");
  return path.steps[unmerged[(unmerged.size() - 1) / 2]].x;
}

}  // namespace netlasso
