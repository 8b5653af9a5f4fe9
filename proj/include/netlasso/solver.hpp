#pragma once

#include <netlasso/graph.hpp>
#include <netlasso/losses.hpp>
#include <netlasso/penalty.hpp>
#include <netlasso/types.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace netlasso {

enum class XUpdateMode { exact, linearized };
enum class PenaltyKind { trimmed, weighted };
enum class StopReason { converged, max_iterations, diverged };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::diverged: return "diverged";
  }
  return "unknown";
}

inline std::string to_string(XUpdateMode m) { return m == XUpdateMode::exact ? "exact" : "linearized"; }

/// rho <- max(rho, min(multiplier * rho, cap)) after every `period` iterations.
template <typename Scalar>
struct RhoSchedule {
  Scalar multiplier = 10;
  Scalar cap = std::numeric_limits<Scalar>::infinity();
  int period = 100;
};

template <typename Scalar>
struct SolverConfig {
  Scalar gamma = 1;
  Index K = 0;
  Scalar rho = 1e4;
  PenaltyKind penalty = PenaltyKind::trimmed;
  XUpdateMode x_update = XUpdateMode::exact;
  Scalar bregman_L = 0;  // 0 selects max_i L_i
  int max_iters = 1000;
  Scalar eps_abs = 1e-5;
  Scalar eps_rel = 1e-5;
  std::optional<RhoSchedule<Scalar>> rho_schedule;
  Scalar lyapunov_r = 0.9;
  Scalar divergence_factor = 1e12;
  std::optional<Scalar> sigma;  // lambda_min(D D^T) if already known

  static SolverConfig ntl(Scalar gamma, Index K) {
    SolverConfig c;
    c.gamma = gamma;
    c.K = K;
    c.rho = Scalar(1e4);
    c.penalty = PenaltyKind::trimmed;
    return c;
  }

  static SolverConfig nl(Scalar gamma) {
    SolverConfig c;
    c.gamma = gamma;
    c.rho = Scalar(1);
    c.penalty = PenaltyKind::weighted;
    return c;
  }

  void validate() const {
    if (!(gamma >= Scalar(0)) || !std::isfinite(double(gamma)))
      throw std::invalid_argument("solver config: gamma must be finite and non-negative");
    if (K < 0) throw std::invalid_argument("solver config: K must be non-negative");
    if (!(rho > Scalar(0))) throw std::invalid_argument("solver config: rho must be positive");
    if (!(eps_abs > Scalar(0)) || !(eps_rel > Scalar(0)))
      throw std::invalid_argument("solver config: tolerances must be positive");
    if (max_iters < 1) throw std::invalid_argument("solver config: max_iters must be at least 1");
    if (!(bregman_L >= Scalar(0))) throw std::invalid_argument("solver config: bregman L must be non-negative");
    if (!(lyapunov_r > Scalar(0) && lyapunov_r < Scalar(1)))
      throw std::invalid_argument("solver config: r must lie in (0, 1)");
    if (rho_schedule) {
      if (!(rho_schedule->multiplier >= Scalar(1)))
        throw std::invalid_argument("solver config: rho multiplier must be at least 1");
      if (rho_schedule->period < 1) throw std::invalid_argument("solver config: rho period must be positive");
      if (!(rho_schedule->cap > Scalar(0))) throw std::invalid_argument("solver config: rho cap must be positive");
    }
  }
};

/// Piecewise-signal preset: multiply by 10 every 100 iterations up to
/// 2 / (0.99 sigma). Callers start from rho = 1.
template <typename Scalar>
RhoSchedule<Scalar> rho_schedule_preset(Scalar sigma) {
  RhoSchedule<Scalar> s;
  s.multiplier = 10;
  s.period = 100;
  s.cap = sigma > Scalar(0) ? Scalar(2) / (Scalar(0.99) * sigma) : std::numeric_limits<Scalar>::infinity();
  return s;
}

template <typename Scalar>
struct SolverState {
  CentroidMatrix<Scalar> x;
  BlockVector<Scalar> z;
  BlockVector<Scalar> y;
  Scalar rho = 1;
  int iter = 0;
  std::vector<Scalar> objective;
  std::vector<Scalar> augmented_lagrangian;
  std::vector<Scalar> primal_residual;
  std::vector<Scalar> x_change;
  std::vector<Scalar> dual_change;  // rho ||D (x^{t+1} - x^t)||
  std::vector<Scalar> lyapunov;
  std::vector<Scalar> rho_history;
  Scalar lyapunov_weight = 0;
};

template <typename Scalar>
struct SolveResult {
  SolverState<Scalar> state;
  StopReason reason = StopReason::max_iterations;
  std::string message;
};

template <typename Scalar>
struct SolverInit {
  std::optional<CentroidMatrix<Scalar>> x;
  std::optional<BlockVector<Scalar>> y;
};

/// Value of the configured penalty (without gamma) at block vector z.
template <typename Scalar, typename Derived>
Scalar penalty_value(const Eigen::MatrixBase<Derived>& z, const WeightedGraph<Scalar>& graph,
                     const SolverConfig<Scalar>& config) {
  if (config.penalty == PenaltyKind::trimmed) return trimmed_norm(z, config.K);
  Scalar s = 0;
  for (Index k = 0; k < z.rows(); ++k) s += graph.weight(k) * z.row(k).norm();
  return s;
}

/// f(x) + gamma * penalty(D x).
template <typename Scalar>
Scalar objective(const CentroidMatrix<Scalar>& x, const LossSet<Scalar>& losses, const WeightedGraph<Scalar>& graph,
                 const SolverConfig<Scalar>& config) {
  const DifferenceOperator<Scalar> d(graph, x.cols());
  return losses.total(x) + config.gamma * penalty_value(d.apply(x), graph, config);
}

/// f(x) + gamma P(z) + y^T (z - D x) + rho/2 ||z - D x||^2, at rho = state.rho.
template <typename Scalar>
Scalar augmented_lagrangian(const SolverState<Scalar>& state, const LossSet<Scalar>& losses,
                            const WeightedGraph<Scalar>& graph, const SolverConfig<Scalar>& config) {
  const DifferenceOperator<Scalar> d(graph, losses.dim());
  const BlockVector<Scalar> dx = d.apply(state.x);
  if (state.z.rows() != dx.rows() || state.z.cols() != dx.cols() || state.y.rows() != dx.rows() ||
      state.y.cols() != dx.cols())
    throw std::invalid_argument("augmented_lagrangian: dimension mismatch");
  const BlockVector<Scalar> r = state.z - dx;
  return losses.total(state.x) + config.gamma * penalty_value(state.z, graph, config) +
         stacked(state.y).dot(stacked(r)) + state.rho / 2 * stacked(r).squaredNorm();
}

/// z = prox of (gamma/rho) P at D x - y/rho.
template <typename Scalar>
BlockVector<Scalar> z_update(const SolverState<Scalar>& state, const WeightedGraph<Scalar>& graph,
                             const SolverConfig<Scalar>& config) {
  if (!(state.rho > Scalar(0))) throw std::invalid_argument("z_update: rho must be positive");
  const DifferenceOperator<Scalar> d(graph, state.x.cols());
  BlockVector<Scalar> a = d.apply(state.x) - state.y / state.rho;
  if (config.gamma == Scalar(0)) return a;
  const Scalar lambda = config.gamma / state.rho;
  if (config.penalty == PenaltyKind::trimmed) return prox_trimmed(a, config.K, lambda).z;
  for (Index k = 0; k < a.rows(); ++k) a.row(k) = prox_group_l2(a.row(k).transpose(), lambda * graph.weight(k)).transpose();
  return a;
}

/// y + rho (z - D x).
template <typename Scalar>
BlockVector<Scalar> y_update(const SolverState<Scalar>& state, const WeightedGraph<Scalar>& graph) {
  const DifferenceOperator<Scalar> d(graph, state.x.cols());
  return state.y + state.rho * (state.z - d.apply(state.x));
}

/// Symmetric positive definite solve, dense Cholesky for dense systems and
/// sparse LDL^T otherwise.
template <typename Scalar>
class SpdSolver {
 public:
  void compute(const Eigen::SparseMatrix<Scalar>& a) {
    const double density = double(a.nonZeros()) / (double(a.rows()) * double(a.cols()));
    dense_ = density > 0.2;
    if (dense_) {
      llt_.compute(Matrix<Scalar>(a));
      if (llt_.info() != Eigen::Success) throw NumericalError("x-update: system matrix is singular");
    } else {
      ldlt_.compute(a);
      if (ldlt_.info() != Eigen::Success) throw NumericalError("x-update: system matrix is singular");
      const auto& dvec = ldlt_.vectorD();
      if (dvec.size() > 0 && !(dvec.minCoeff() > Scalar(1e-13) * std::max(Scalar(1), dvec.cwiseAbs().maxCoeff())))
        throw NumericalError("x-update: system matrix is singular");
    }
  }

  Vector<Scalar> solve(const Vector<Scalar>& b) const {
    return dense_ ? Vector<Scalar>(llt_.solve(b)) : Vector<Scalar>(ldlt_.solve(b));
  }

 private:
  bool dense_ = false;
  Eigen::LLT<Matrix<Scalar>> llt_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> ldlt_;
};

/// Factorization reused across iterations while rho (and the update mode) stay
/// fixed. One cache belongs to one (graph, losses) pair.
template <typename Scalar>
struct XUpdateCache {
  Scalar rho = -1;
  Scalar L = -1;
  XUpdateMode mode = XUpdateMode::exact;
  SpdSolver<Scalar> factor;
  std::optional<Eigen::SparseMatrix<Scalar>> laplacian;
  std::optional<Eigen::SparseMatrix<Scalar>> hessian;
  std::optional<Vector<Scalar>> linear;
  int factorizations = 0;
};

namespace detail {

template <typename Scalar>
Eigen::SparseMatrix<Scalar> block_hessian(const LossSet<Scalar>& losses) {
  const Index n = losses.num_nodes(), p = losses.dim();
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(static_cast<std::size_t>(n * p * p));
  for (Index i = 0; i < n; ++i) {
    const Matrix<Scalar> h = losses.hessian(i);
    for (Index r = 0; r < p; ++r)
      for (Index c = 0; c < p; ++c)
        if (h(r, c) != Scalar(0)) trip.emplace_back(i * p + r, i * p + c, h(r, c));
  }
  Eigen::SparseMatrix<Scalar> out(n * p, n * p);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

template <typename Scalar>
Vector<Scalar> stacked_linear_term(const LossSet<Scalar>& losses) {
  const Index n = losses.num_nodes(), p = losses.dim();
  Vector<Scalar> g(n * p);
  for (Index i = 0; i < n; ++i) g.segment(i * p, p) = losses.linear_term(i);
  return g;
}

template <typename Scalar>
const Eigen::SparseMatrix<Scalar>& cached_laplacian(XUpdateCache<Scalar>& cache, const WeightedGraph<Scalar>& graph,
                                                    Index p) {
  if (!cache.laplacian) cache.laplacian = DifferenceOperator<Scalar>(graph, p).gram_domain();
  return *cache.laplacian;
}

template <typename Scalar>
Scalar bregman_constant(const LossSet<Scalar>& losses, const SolverConfig<Scalar>& config) {
  return config.bregman_L > Scalar(0) ? config.bregman_L : losses.max_smoothness();
}

}  // namespace detail

/// argmin_x L_rho(x, z, y) for quadratic losses: (H + rho D^T D) x = g + D^T (y + rho z).
template <typename Scalar>
CentroidMatrix<Scalar> x_update_exact(const SolverState<Scalar>& state, const LossSet<Scalar>& losses,
                                      const WeightedGraph<Scalar>& graph, XUpdateCache<Scalar>* cache = nullptr) {
  if (!losses.is_quadratic()) throw std::invalid_argument("x_update_exact: losses must be quadratic");
  XUpdateCache<Scalar> local;
  XUpdateCache<Scalar>& c = cache ? *cache : local;
  const Index n = losses.num_nodes(), p = losses.dim();
  if (c.mode != XUpdateMode::exact || c.rho != state.rho) {
    if (!c.hessian) c.hessian = detail::block_hessian(losses);
    Eigen::SparseMatrix<Scalar> a = *c.hessian + state.rho * detail::cached_laplacian(c, graph, p);
    c.factor.compute(a);
    c.rho = state.rho;
    c.mode = XUpdateMode::exact;
    ++c.factorizations;
  }
  if (!c.linear) c.linear = detail::stacked_linear_term(losses);
  const DifferenceOperator<Scalar> d(graph, p);
  const BlockVector<Scalar> w = state.y + state.rho * state.z;
  const CentroidMatrix<Scalar> dtw = d.apply_transpose(w);
  const Vector<Scalar> rhs = *c.linear + stacked(dtw);
  CentroidMatrix<Scalar> x(n, p);
  stacked(x) = c.factor.solve(rhs);
  return x;
}

/// Linearized (Bregman) update:
/// (I + (rho/L) D^T D)^{-1} (x - grad f(x)/L + D^T (y + rho z)/L).
template <typename Scalar>
CentroidMatrix<Scalar> x_update_linearized(const SolverState<Scalar>& state, const LossSet<Scalar>& losses,
                                           const WeightedGraph<Scalar>& graph, Scalar L,
                                           XUpdateCache<Scalar>* cache = nullptr) {
  if (!(L > Scalar(0))) throw std::invalid_argument("x_update_linearized: L must be positive");
  XUpdateCache<Scalar> local;
  XUpdateCache<Scalar>& c = cache ? *cache : local;
  const Index n = losses.num_nodes(), p = losses.dim();
  if (c.mode != XUpdateMode::linearized || c.rho != state.rho || c.L != L) {
    Eigen::SparseMatrix<Scalar> eye(n * p, n * p);
    eye.setIdentity();
    Eigen::SparseMatrix<Scalar> a = eye + (state.rho / L) * detail::cached_laplacian(c, graph, p);
    c.factor.compute(a);
    c.rho = state.rho;
    c.L = L;
    c.mode = XUpdateMode::linearized;
    ++c.factorizations;
  }
  const DifferenceOperator<Scalar> d(graph, p);
  const BlockVector<Scalar> w = state.y + state.rho * state.z;
  const CentroidMatrix<Scalar> rhs = state.x - losses.gradient_all(state.x) / L + d.apply_transpose(w) / L;
  CentroidMatrix<Scalar> x(n, p);
  stacked(x) = c.factor.solve(stacked(rhs));
  return x;
}

/// Per-node minimizers; nodes without one start at the origin.
template <typename Scalar>
CentroidMatrix<Scalar> per_node_minimizers(const LossSet<Scalar>& losses) {
  CentroidMatrix<Scalar> x = CentroidMatrix<Scalar>::Zero(losses.num_nodes(), losses.dim());
  for (Index i = 0; i < losses.num_nodes(); ++i)
    if (auto m = losses.minimizer(i)) x.row(i) = m->transpose();
  return x;
}

/// ADMM for min f(x) + gamma P(D x) with P the trimmed norm T_K or the
/// weighted group norm. Exact updates follow the plain ADMM scheme; the
/// linearized update is the proximal (Bregman) variant.
template <typename Scalar>
class AdmmSolver {
 public:
  AdmmSolver(const LossSet<Scalar>& losses, const WeightedGraph<Scalar>& graph, SolverConfig<Scalar> config)
      : losses_(&losses), graph_(&graph), config_(std::move(config)), d_(graph, losses.dim()) {
    config_.validate();
    if (graph.num_vertices() != losses.num_nodes())
      throw std::invalid_argument("solver: graph and losses disagree on the node count");
    if (config_.x_update == XUpdateMode::exact && !losses.is_quadratic())
      throw std::invalid_argument("solver: exact x-update needs quadratic losses");
  }

  const SolverConfig<Scalar>& config() const { return config_; }
  int factorizations() const { return cache_.factorizations; }

  SolveResult<Scalar> run(const SolverInit<Scalar>& init = {}) {
    const Index n = losses_->num_nodes(), p = losses_->dim(), m = graph_->num_edges();
    SolveResult<Scalar> out;
    SolverState<Scalar>& s = out.state;
    s.x = init.x ? *init.x : per_node_minimizers(*losses_);
    if (s.x.rows() != n || s.x.cols() != p) throw std::invalid_argument("solver: initial x has wrong shape");
    s.y = init.y ? *init.y : BlockVector<Scalar>::Zero(m, p);
    if (s.y.rows() != m || s.y.cols() != p) throw std::invalid_argument("solver: initial y has wrong shape");
    s.z = d_.apply(s.x);
    s.rho = config_.rho;

    const Scalar L = detail::bregman_constant(*losses_, config_);
    if (config_.x_update == XUpdateMode::linearized) {
      const Scalar sigma = config_.sigma ? *config_.sigma : sigma_min_DDt(*graph_);
      // L2 = L for the linearized update; with sigma = 0 the weight is undefined and omitted.
      s.lyapunov_weight = sigma > Scalar(0) ? L * L / (sigma * (Scalar(1) - config_.lyapunov_r)) : Scalar(0);
    }

    const Scalar obj0 = objective_at(s.x);
    const Scalar blow_up = config_.divergence_factor * std::max(Scalar(1), std::abs(obj0));
    const Scalar sqrt_pm = std::sqrt(Scalar(p * m)), sqrt_pn = std::sqrt(Scalar(p * n));
    BlockVector<Scalar> dx_prev = s.z;

    out.reason = StopReason::max_iterations;
    for (int t = 0; t < config_.max_iters; ++t) {
      const CentroidMatrix<Scalar> x_prev = s.x;
      s.z = z_update(s, *graph_, config_);
      s.x = config_.x_update == XUpdateMode::exact ? x_update_exact(s, *losses_, *graph_, &cache_)
                                                   : x_update_linearized(s, *losses_, *graph_, L, &cache_);
      const BlockVector<Scalar> dx = d_.apply(s.x);
      const BlockVector<Scalar> r = s.z - dx;
      s.y += s.rho * r;
      ++s.iter;

      const Scalar primal = stacked(r).norm();
      const Scalar x_change = stacked(CentroidMatrix<Scalar>(s.x - x_prev)).norm();
      const Scalar dual = s.rho * stacked(BlockVector<Scalar>(dx - dx_prev)).norm();
      const Scalar obj = losses_->total(s.x) + config_.gamma * penalty_value(dx, *graph_, config_);
      const Scalar lag = losses_->total(s.x) + config_.gamma * penalty_value(s.z, *graph_, config_) +
                         stacked(s.y).dot(stacked(r)) + s.rho / 2 * primal * primal;
      s.objective.push_back(obj);
      s.augmented_lagrangian.push_back(lag);
      s.primal_residual.push_back(primal);
      s.x_change.push_back(x_change);
      s.dual_change.push_back(dual);
      s.lyapunov.push_back(lag + s.lyapunov_weight / s.rho * x_change * x_change);
      s.rho_history.push_back(s.rho);
      dx_prev = dx;

      if (!std::isfinite(double(obj)) || std::abs(obj) > blow_up || !std::isfinite(double(lag))) {
        out.reason = StopReason::diverged;
        out.message = "objective " + std::to_string(double(obj)) + " exceeded the divergence guard at iteration " +
                      std::to_string(s.iter);
        return out;
      }

      const Scalar z_norm = stacked(s.z).norm(), dx_norm = stacked(dx).norm();
      const bool primal_ok = primal <= sqrt_pm * config_.eps_abs + config_.eps_rel * std::max(z_norm, dx_norm);
      bool second_ok;
      if (config_.penalty == PenaltyKind::trimmed)
        second_ok = x_change <= sqrt_pn * config_.eps_abs + config_.eps_rel * stacked(s.x).norm();
      else
        second_ok = dual <= sqrt_pm * config_.eps_abs + config_.eps_rel * stacked(s.y).norm();
      if (primal_ok && second_ok) {
        out.reason = StopReason::converged;
        return out;
      }

      if (config_.rho_schedule && s.iter % config_.rho_schedule->period == 0) {
        const Scalar next = std::min(s.rho * config_.rho_schedule->multiplier, config_.rho_schedule->cap);
        s.rho = std::max(s.rho, next);
      }
    }
    return out;
  }

 private:
  Scalar objective_at(const CentroidMatrix<Scalar>& x) const {
    return losses_->total(x) + config_.gamma * penalty_value(d_.apply(x), *graph_, config_);
  }

  const LossSet<Scalar>* losses_;
  const WeightedGraph<Scalar>* graph_;
  SolverConfig<Scalar> config_;
  DifferenceOperator<Scalar> d_;
  XUpdateCache<Scalar> cache_;
};

/// Network trimmed lasso: min f(x) + gamma T_K(D x).
template <typename Scalar>
SolveResult<Scalar> solve_ntl(const LossSet<Scalar>& losses, const WeightedGraph<Scalar>& graph,
                              SolverConfig<Scalar> config, const SolverInit<Scalar>& init = {}) {
  config.penalty = PenaltyKind::trimmed;
  return AdmmSolver<Scalar>(losses, graph, std::move(config)).run(init);
}

/// Network lasso: min f(x) + gamma sum_e w_e ||(D x)_e||.
template <typename Scalar>
SolveResult<Scalar> solve_nl(const LossSet<Scalar>& losses, const WeightedGraph<Scalar>& graph,
                             SolverConfig<Scalar> config, const SolverInit<Scalar>& init = {}) {
  config.penalty = PenaltyKind::weighted;
  return AdmmSolver<Scalar>(losses, graph, std::move(config)).run(init);
}

/// Constants of the convergence theorem for the configured x-update, and
/// whether the chosen rho is admissible.
template <typename Scalar>
struct ConvergenceReport {
  Scalar sigma = 0;
  Scalar L1 = 0, L2 = 0, alpha1 = 0, alpha2 = 0;
  Scalar r = 0.9;
  Scalar zeta = 0;
  Scalar f_inf = -std::numeric_limits<Scalar>::infinity();
  Scalar rho = 0;
  Scalar rho_bound = std::numeric_limits<Scalar>::infinity();     // at the configured r
  Scalar rho_infimum = std::numeric_limits<Scalar>::infinity();   // optimized over r in (0, 1)
  Scalar r_star = 1;                                              // optimizing r (1 means the supremum end)
  Scalar bounded_rho_bound = std::numeric_limits<Scalar>::infinity();  // L / (sigma r)
  bool surjective = false;
  bool strongly_convex = false;
  bool rho_admissible = false;
  bool bounded_condition = false;
  bool applicable = false;
  bool pass = false;
  std::string message;
};

template <typename Scalar>
ConvergenceReport<Scalar> validate_convergence_params(const LossSet<Scalar>& losses, const WeightedGraph<Scalar>& graph,
                                                      const SolverConfig<Scalar>& config) {
  ConvergenceReport<Scalar> rep;
  rep.sigma = config.sigma ? *config.sigma : sigma_min_DDt(graph);
  rep.r = config.lyapunov_r;
  rep.rho = config.rho;
  const Scalar L = losses.max_smoothness();
  if (config.x_update == XUpdateMode::exact) {
    rep.L1 = L;
    rep.L2 = 0;
    rep.alpha1 = losses.min_strong_convexity();
    rep.alpha2 = 0;
  } else {
    const Scalar Lb = detail::bregman_constant(losses, config);
    rep.L1 = rep.L2 = rep.alpha1 = Lb;
    rep.alpha2 = 0;
  }
  rep.zeta = L;
  Scalar f_inf = 0;
  bool have_min = true;
  for (Index i = 0; i < losses.num_nodes() && have_min; ++i) {
    if (auto m = losses.minimizer(i))
      f_inf += losses.eval(i, *m);
    else
      have_min = false;
  }
  if (have_min) rep.f_inf = f_inf;

  rep.surjective = rep.sigma > Scalar(0);
  const Scalar a = rep.alpha1 + rep.alpha2;
  rep.strongly_convex = a > Scalar(0);
  rep.applicable = rep.surjective;
  if (!rep.surjective) {
    rep.message = "inapplicable: D is not surjective (sigma = 0)";
    return rep;
  }
  if (!rep.strongly_convex) {
    rep.message = "alpha1 + alpha2 must be positive";
    return rep;
  }
  auto bound_at = [&](Scalar r) {
    return Scalar(2) / (rep.sigma * a) * (rep.L1 * rep.L1 / r + (rep.L2 > 0 ? rep.L2 * rep.L2 / (1 - r) : Scalar(0)));
  };
  rep.rho_bound = bound_at(rep.r);
  if (rep.L2 > Scalar(0)) {
    rep.r_star = rep.L1 / (rep.L1 + rep.L2);
    rep.rho_infimum = Scalar(2) * (rep.L1 + rep.L2) * (rep.L1 + rep.L2) / (rep.sigma * a);
  } else {
    rep.r_star = 1;
    rep.rho_infimum = Scalar(2) * rep.L1 * rep.L1 / (rep.sigma * a);
  }
  rep.bounded_rho_bound = L > Scalar(0) ? L / (rep.sigma * rep.r) : Scalar(0);
  rep.rho_admissible = config.rho > rep.rho_bound;
  rep.bounded_condition = config.rho > rep.bounded_rho_bound;
  rep.pass = rep.rho_admissible;
  rep.message = rep.pass ? "conditions hold" : "rho is below the admissible bound";
  return rep;
}

template <typename Scalar>
struct StationarityReport {
  Scalar min_value = std::numeric_limits<Scalar>::infinity();
  std::string worst_kind;
  Index directions = 0;
  bool passed = false;
  Scalar tolerance = 0;
};

namespace detail {

// Probes grad f(x)^T v + penalty'(D x; D v) over unit directions v:
// -grad f, signed coordinates, edge-aligned moves, and Gaussian samples.
template <typename Scalar, typename PenaltySlope>
StationarityReport<Scalar> probe_stationarity(const CentroidMatrix<Scalar>& x, const LossSet<Scalar>& losses,
                                              const WeightedGraph<Scalar>& graph, int num_random, std::uint64_t seed,
                                              Scalar tolerance, PenaltySlope&& penalty_slope) {
  const Index n = x.rows(), p = x.cols();
  const DifferenceOperator<Scalar> d(graph, p);
  const CentroidMatrix<Scalar> grad = losses.gradient_all(x);
  const BlockVector<Scalar> dx = d.apply(x);
  StationarityReport<Scalar> rep;
  rep.tolerance = tolerance;

  auto probe = [&](CentroidMatrix<Scalar> v, const char* kind) {
    const Scalar nv = stacked(v).norm();
    if (!(nv > Scalar(0))) return;
    v /= nv;
    const Scalar val = stacked(grad).dot(stacked(v)) + penalty_slope(dx, d.apply(v));
    ++rep.directions;
    if (val < rep.min_value) {
      rep.min_value = val;
      rep.worst_kind = kind;
    }
  };

  probe(CentroidMatrix<Scalar>(-grad), "negative-gradient");
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < p; ++c)
      for (Scalar sgn : {Scalar(1), Scalar(-1)}) {
        CentroidMatrix<Scalar> v = CentroidMatrix<Scalar>::Zero(n, p);
        v(i, c) = sgn;
        probe(v, "coordinate");
      }
  for (const auto& e : graph.edges()) {
    const Vector<Scalar> diff = (x.row(e.i) - x.row(e.j)).transpose();
    for (Index c = 0; c <= p; ++c)
      for (Scalar sgn : {Scalar(1), Scalar(-1)}) {
        Vector<Scalar> u = Vector<Scalar>::Zero(p);
        if (c < p)
          u(c) = 1;
        else if (diff.norm() > Scalar(0))
          u = diff / diff.norm();
        else
          continue;
        CentroidMatrix<Scalar> v = CentroidMatrix<Scalar>::Zero(n, p);
        v.row(e.i) = sgn * u.transpose();
        v.row(e.j) = -sgn * u.transpose();
        probe(v, "edge");
        // Move one endpoint only.
        CentroidMatrix<Scalar> w = CentroidMatrix<Scalar>::Zero(n, p);
        w.row(e.i) = sgn * u.transpose();
        probe(w, "edge-endpoint");
      }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int k = 0; k < num_random; ++k) {
    CentroidMatrix<Scalar> v(n, p);
    for (Index i = 0; i < v.size(); ++i) v.data()[i] = Scalar(normal(rng));
    probe(v, "random");
  }
  rep.passed = rep.min_value >= -tolerance;
  return rep;
}

}  // namespace detail

/// Samples unit directions v and evaluates grad f(x)^T v + gamma dT_K(D x; D v).
/// A minimum >= -tolerance certifies stationarity along the sampled set.
template <typename Scalar>
StationarityReport<Scalar> stationarity_check(const CentroidMatrix<Scalar>& x, const LossSet<Scalar>& losses,
                                              const WeightedGraph<Scalar>& graph, Scalar gamma, Index K,
                                              int num_random, std::uint64_t seed, Scalar tolerance = Scalar(1e-6),
                                              Scalar zero_tol = 0, Scalar tie_tol = 0) {
  return detail::probe_stationarity(x, losses, graph, num_random, seed, tolerance,
                                    [&](const BlockVector<Scalar>& z, const BlockVector<Scalar>& v) {
                                      return gamma * directional_derivative(z, v, K, tie_tol, zero_tol);
                                    });
}

/// Same probe for the weighted group penalty gamma sum_e w_e ||(D x)_e||.
/// Blocks with norm <= zero_tol count as merged.
template <typename Scalar>
StationarityReport<Scalar> stationarity_check_weighted(const CentroidMatrix<Scalar>& x, const LossSet<Scalar>& losses,
                                                       const WeightedGraph<Scalar>& graph, Scalar gamma,
                                                       int num_random, std::uint64_t seed,
                                                       Scalar tolerance = Scalar(1e-6), Scalar zero_tol = 0) {
  return detail::probe_stationarity(x, losses, graph, num_random, seed, tolerance,
                                    [&](const BlockVector<Scalar>& z, const BlockVector<Scalar>& v) {
                                      Scalar total = 0;
                                      for (Index k = 0; k < z.rows(); ++k) {
                                        const Scalar nz = z.row(k).norm();
                                        const Scalar slope = nz > zero_tol ? z.row(k).dot(v.row(k)) / nz
                                                                           : Scalar(v.row(k).norm());
                                        total += graph.weight(k) * slope;
                                      }
                                      return gamma * total;
                                    });
}

}  // namespace netlasso
