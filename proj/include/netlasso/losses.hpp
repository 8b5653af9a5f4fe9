#pragma once

#include <netlasso/types.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace netlasso {

enum class LossKind { squared_distance, ridge_regression, quadratic, custom };

inline std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::squared_distance: return "squared-distance";
    case LossKind::ridge_regression: return "ridge-regression";
    case LossKind::quadratic: return "quadratic";
    case LossKind::custom: return "custom";
  }
  return "unknown";
}

/// User-supplied per-node loss. `smoothness` and `strong_convexity` hold one
/// constant per node; `minimizer` may be left empty.
template <typename Scalar>
struct CustomLoss {
  std::function<Scalar(Index, const Vector<Scalar>&)> eval;
  std::function<Vector<Scalar>(Index, const Vector<Scalar>&)> gradient;
  std::vector<Scalar> smoothness;
  std::vector<Scalar> strong_convexity;
  std::function<std::optional<Vector<Scalar>>(Index)> minimizer;
};

/// Eigenvalues (min, max) of the symmetric 2x2 matrix [[a, b], [b, c]].
template <typename Scalar>
std::pair<Scalar, Scalar> symmetric_2x2_eigenvalues(Scalar a, Scalar b, Scalar c) {
  const Scalar mean = (a + c) / 2;
  const Scalar rad = std::hypot((a - c) / 2, b);
  const Scalar hi = mean + rad;
  const Scalar det = a * c - b * b;
  // det / hi avoids cancellation in mean - rad when the matrix is nearly singular.
  const Scalar lo = hi > Scalar(0) ? det / hi : mean - rad;
  return {lo, hi};
}

/// The per-node smooth losses f_1..f_n of one problem. Quadratic kinds
/// (squared-distance, ridge, quadratic) are written f_i(x) = 1/2 x^T H_i x -
/// g_i^T x + c_i, which is what the exact ADMM x-update consumes.
template <typename Scalar>
class LossSet {
 public:
  using Vec = Vector<Scalar>;
  using Mat = Matrix<Scalar>;

  /// f_i(x) = 1/2 ||x - a_i||^2 with a_i the rows of `points`.
  template <typename Derived>
  static LossSet squared_distance(const Eigen::MatrixBase<Derived>& points) {
    LossSet s(LossKind::squared_distance, points.rows(), points.cols());
    s.points_ = points;
    s.lambda_min_.assign(static_cast<std::size_t>(s.n_), Scalar(1));
    s.lambda_max_.assign(static_cast<std::size_t>(s.n_), Scalar(1));
    return s;
  }

  /// f_i(x) = 1/2 (b_i - x_1 - a_i x_2)^2 + eps/2 x_2^2, x = (intercept, slope).
  static LossSet ridge_regression(Vec a, Vec b, Scalar eps) {
    if (a.size() != b.size()) throw std::invalid_argument("ridge_regression: a and b differ in length");
    if (!(eps >= Scalar(0))) throw std::invalid_argument("ridge_regression: epsilon must be non-negative");
    LossSet s(LossKind::ridge_regression, a.size(), 2);
    s.points_ = a;
    s.responses_ = std::move(b);
    s.epsilon_ = eps;
    for (Index i = 0; i < s.n_; ++i) {
      const Scalar ai = s.points_(i, 0);
      auto [lo, hi] = symmetric_2x2_eigenvalues(Scalar(1), ai, ai * ai + eps);
      s.lambda_min_.push_back(std::max(Scalar(0), lo));
      s.lambda_max_.push_back(hi);
    }
    return s;
  }

  /// f_i(x) = 1/2 x^T A_i x - B_i^T x with A_i symmetric positive semidefinite.
  static LossSet quadratic(std::vector<Mat> A, std::vector<Vec> B) {
    if (A.empty() || A.size() != B.size()) throw std::invalid_argument("quadratic: need matching non-empty A and B");
    const Index p = A.front().rows();
    LossSet s(LossKind::quadratic, static_cast<Index>(A.size()), p);
    for (std::size_t i = 0; i < A.size(); ++i) {
      if (A[i].rows() != p || A[i].cols() != p || B[i].size() != p)
        throw std::invalid_argument("quadratic: inconsistent dimensions at node " + std::to_string(i));
      if (!A[i].isApprox(A[i].transpose(), Scalar(1e-12) * (Scalar(1) + A[i].norm())))
        throw std::invalid_argument("quadratic: A_i must be symmetric");
      Eigen::SelfAdjointEigenSolver<Mat> es(A[i], Eigen::EigenvaluesOnly);
      if (es.eigenvalues()(0) < -Scalar(1e-12) * (Scalar(1) + std::abs(es.eigenvalues()(p - 1))))
        throw std::invalid_argument("quadratic: A_i must be positive semidefinite");
      s.lambda_min_.push_back(std::max(Scalar(0), es.eigenvalues()(0)));
      s.lambda_max_.push_back(es.eigenvalues()(p - 1));
    }
    s.A_ = std::move(A);
    s.B_ = std::move(B);
    return s;
  }

  static LossSet custom(Index n, Index p, CustomLoss<Scalar> loss) {
    if (!loss.eval || !loss.gradient) throw std::invalid_argument("custom loss: eval and gradient are required");
    if (static_cast<Index>(loss.smoothness.size()) != n || static_cast<Index>(loss.strong_convexity.size()) != n)
      throw std::invalid_argument("custom loss: need one smoothness and strong-convexity constant per node");
    LossSet s(LossKind::custom, n, p);
    s.lambda_min_ = loss.strong_convexity;
    s.lambda_max_ = loss.smoothness;
    s.custom_ = std::move(loss);
#ifndef NDEBUG
    const Scalar err = s.max_gradient_error(4, 20240607);
    if (!(err <= Scalar(1e-5)))
      throw std::invalid_argument("custom loss: gradient disagrees with finite differences (relative error " +
                                  std::to_string(double(err)) + ")");
#endif
    return s;
  }

  LossKind kind() const { return kind_; }
  Index num_nodes() const { return n_; }
  Index dim() const { return p_; }
  bool is_quadratic() const { return kind_ != LossKind::custom; }

  /// Rows a_i for squared-distance; the column of inputs a_i for ridge.
  const Mat& points() const { return points_; }
  const Vec& responses() const { return responses_; }
  Scalar epsilon() const { return epsilon_; }

  Scalar eval(Index i, const Vec& x) const {
    check(i, x);
    switch (kind_) {
      case LossKind::squared_distance:
        return (x - points_.row(i).transpose()).squaredNorm() / 2;
      case LossKind::ridge_regression: {
        const Scalar r = responses_(i) - x(0) - points_(i, 0) * x(1);
        return r * r / 2 + epsilon_ / 2 * x(1) * x(1);
      }
      case LossKind::quadratic:
        return x.dot(A_[i] * x) / 2 - B_[i].dot(x);
      case LossKind::custom:
        return custom_.eval(i, x);
    }
    return Scalar(0);
  }

  Vec gradient(Index i, const Vec& x) const {
    check(i, x);
    switch (kind_) {
      case LossKind::squared_distance:
        return x - points_.row(i).transpose();
      case LossKind::ridge_regression: {
        const Scalar a = points_(i, 0);
        const Scalar r = responses_(i) - x(0) - a * x(1);
        Vec g(2);
        g << -r, -a * r + epsilon_ * x(1);
        return g;
      }
      case LossKind::quadratic:
        return A_[i] * x - B_[i];
      case LossKind::custom:
        return custom_.gradient(i, x);
    }
    return Vec();
  }

  /// Gradient Lipschitz constant L_i.
  Scalar smoothness(Index i) const { return lambda_max_.at(static_cast<std::size_t>(i)); }
  /// Strong-convexity modulus alpha_i (0 when only convex).
  Scalar strong_convexity(Index i) const { return lambda_min_.at(static_cast<std::size_t>(i)); }

  Scalar max_smoothness() const { return *std::max_element(lambda_max_.begin(), lambda_max_.end()); }
  Scalar min_strong_convexity() const { return *std::min_element(lambda_min_.begin(), lambda_min_.end()); }

  /// argmin f_i, or nullopt when f_i is not strictly convex.
  std::optional<Vec> minimizer(Index i) const {
    switch (kind_) {
      case LossKind::squared_distance:
        return Vec(points_.row(i).transpose());
      case LossKind::custom:
        if (custom_.minimizer) return custom_.minimizer(i);
        if (strong_convexity(i) > Scalar(0)) {
          const Index idx[] = {i};
          return sum_loss_minimizer(idx);
        }
        return std::nullopt;
      default: {
        if (!(strong_convexity(i) > Scalar(0))) return std::nullopt;
        Eigen::LLT<Mat> llt(hessian(i));
        if (llt.info() != Eigen::Success) return std::nullopt;
        return Vec(llt.solve(linear_term(i)));
      }
    }
  }

  /// Hessian H_i of a quadratic-kind loss.
  Mat hessian(Index i) const {
    switch (kind_) {
      case LossKind::squared_distance:
        return Mat::Identity(p_, p_);
      case LossKind::ridge_regression: {
        const Scalar a = points_(i, 0);
        Mat h(2, 2);
        h << 1, a, a, a * a + epsilon_;
        return h;
      }
      case LossKind::quadratic:
        return A_[static_cast<std::size_t>(i)];
      case LossKind::custom:
        break;
    }
    throw std::logic_error("hessian: custom losses have no stored Hessian");
  }

  /// g_i in grad f_i(x) = H_i x - g_i.
  Vec linear_term(Index i) const {
    switch (kind_) {
      case LossKind::squared_distance:
        return points_.row(i).transpose();
      case LossKind::ridge_regression: {
        Vec g(2);
        g << responses_(i), points_(i, 0) * responses_(i);
        return g;
      }
      case LossKind::quadratic:
        return B_[static_cast<std::size_t>(i)];
      case LossKind::custom:
        break;
    }
    throw std::logic_error("linear_term: custom losses have no stored linear term");
  }

  /// Minimizer of f^(S) = sum_{i in S} f_i. Throws NumericalError when the
  /// aggregate is not strictly convex.
  Vec sum_loss_minimizer(std::span<const Index> subset) const {
    if (subset.empty()) throw std::invalid_argument("sum_loss_minimizer: empty subset");
    if (kind_ == LossKind::squared_distance) {
      Vec mean = Vec::Zero(p_);
      for (Index i : subset) mean += points_.row(i).transpose();
      return mean / Scalar(subset.size());
    }
    if (is_quadratic()) {
      Mat h = Mat::Zero(p_, p_);
      Vec g = Vec::Zero(p_);
      for (Index i : subset) {
        h += hessian(i);
        g += linear_term(i);
      }
      if (!(aggregate_strong_convexity(subset) > Scalar(0)))
        throw NumericalError("sum_loss_minimizer: aggregate loss is not strictly convex");
      return h.llt().solve(g);
    }
    return custom_aggregate_minimizer(subset);
  }

  /// Strong-convexity modulus of f^(S): lambda_min(sum H_i) for quadratic
  /// kinds, sum of alpha_i (a valid lower bound) for custom losses.
  Scalar aggregate_strong_convexity(std::span<const Index> subset) const {
    if (kind_ == LossKind::squared_distance) return Scalar(subset.size());
    if (is_quadratic()) {
      Mat h = Mat::Zero(p_, p_);
      for (Index i : subset) h += hessian(i);
      if (p_ == 2) return std::max(Scalar(0), symmetric_2x2_eigenvalues(h(0, 0), h(0, 1), h(1, 1)).first);
      Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
      return std::max(Scalar(0), es.eigenvalues()(0));
    }
    Scalar a = 0;
    for (Index i : subset) a += strong_convexity(i);
    return a;
  }

  /// f(X) = sum_i f_i(x_i).
  Scalar total(const CentroidMatrix<Scalar>& x) const {
    check_matrix(x);
    Scalar s = 0;
    for (Index i = 0; i < n_; ++i) s += eval(i, x.row(i).transpose());
    return s;
  }

  CentroidMatrix<Scalar> gradient_all(const CentroidMatrix<Scalar>& x) const {
    check_matrix(x);
    CentroidMatrix<Scalar> g(n_, p_);
    for (Index i = 0; i < n_; ++i) g.row(i) = gradient(i, x.row(i).transpose()).transpose();
    return g;
  }

  /// Largest relative disagreement between `gradient` and central differences
  /// at random points, over all nodes.
  Scalar max_gradient_error(int samples_per_node, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    Scalar worst = 0;
    for (Index i = 0; i < n_; ++i)
      for (int s = 0; s < samples_per_node; ++s) {
        Vec x(p_);
        for (Index c = 0; c < p_; ++c) x(c) = Scalar(unif(rng));
        const Vec g = gradient(i, x);
        Vec fd(p_);
        for (Index c = 0; c < p_; ++c) {
          const Scalar h = Scalar(1e-6) * std::max(Scalar(1), std::abs(x(c)));
          Vec xp = x, xm = x;
          xp(c) += h;
          xm(c) -= h;
          fd(c) = (eval(i, xp) - eval(i, xm)) / (2 * h);
        }
        worst = std::max(worst, (fd - g).norm() / std::max(Scalar(1), g.norm()));
      }
    return worst;
  }

 private:
  LossSet(LossKind kind, Index n, Index p) : kind_(kind), n_(n), p_(p) {
    if (n < 1 || p < 1) throw std::invalid_argument("loss set: need at least one node and dimension");
  }

  void check(Index i, const Vec& x) const {
    if (i < 0 || i >= n_) throw std::out_of_range("loss: node index out of range");
    if (x.size() != p_) throw std::invalid_argument("loss: dimension mismatch");
  }

  void check_matrix(const CentroidMatrix<Scalar>& x) const {
    if (x.rows() != n_ || x.cols() != p_) throw std::invalid_argument("loss: centroid matrix has wrong shape");
  }

  // Accelerated gradient descent on a strongly convex aggregate.
  Vec custom_aggregate_minimizer(std::span<const Index> subset) const {
    Scalar lip = 0, mu = 0;
    for (Index i : subset) {
      lip += smoothness(i);
      mu += strong_convexity(i);
    }
    if (!(mu > Scalar(0)) || !(lip > Scalar(0)))
      throw NumericalError("sum_loss_minimizer: aggregate loss is not strictly convex");
    auto grad = [&](const Vec& x) {
      Vec g = Vec::Zero(p_);
      for (Index i : subset) g += gradient(i, x);
      return g;
    };
    const Scalar q = std::sqrt(mu / lip);
    const Scalar momentum = (1 - q) / (1 + q);
    Vec x = Vec::Zero(p_), prev = x;
    for (int it = 0; it < 100000; ++it) {
      const Vec y = x + momentum * (x - prev);
      prev = x;
      x = y - grad(y) / lip;
      if (grad(x).norm() <= Scalar(1e-13) * (Scalar(1) + lip * x.norm())) break;
    }
    return x;
  }

  LossKind kind_;
  Index n_;
  Index p_;
  Mat points_;
  Vec responses_;
  Scalar epsilon_ = 0;
  std::vector<Mat> A_;
  std::vector<Vec> B_;
  CustomLoss<Scalar> custom_;
  std::vector<Scalar> lambda_min_;
  std::vector<Scalar> lambda_max_;
};

}  // namespace netlasso
