#include <netlasso/path.hpp>
#include <netlasso/solver.hpp>
#include <netlasso/thresholds.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "../oracles.hpp"

using namespace netlasso;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Four points in two clusters on the complete graph; weight 1 inside, w across.
struct FourPoint {
  Eigen::MatrixXd a;
  WeightedGraph<double> g;
  Partition truth;
};

FourPoint four_point(double w) {
  FourPoint f;
  f.a.resize(4, 2);
  f.a << 0, 0, 0, 1, 10, 0, 10, 1;
  f.truth = Partition(std::vector<Index>{0, 0, 1, 1});
  std::vector<Edge> edges;
  std::vector<double> weights;
  for (Index i = 0; i < 4; ++i)
    for (Index j = i + 1; j < 4; ++j) {
      edges.push_back({i, j});
      weights.push_back(f.truth.label(i) == f.truth.label(j) ? 1.0 : w);
    }
  f.g = WeightedGraph<double>(4, edges, weights);
  return f;
}

struct OracleInterval {
  double gamma_min = 0, gamma_max = kInf, coarsening = 0;
  std::vector<double> mu;  // in the library's pair order
};

// The recovery-interval formulas written out over a dense weight matrix,
// for quadratic losses f_i = 1/2 x^T A_i x - B_i^T x.
OracleInterval interval_oracle(const std::vector<Eigen::MatrixXd>& A, const std::vector<Eigen::VectorXd>& B,
                               const Eigen::MatrixXd& W, const std::vector<Index>& label, Index N) {
  const Index n = W.rows(), p = B[0].size();
  auto in = [&](Index i, Index k) { return label[static_cast<std::size_t>(i)] == k; };
  auto Li = [&](Index i) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A[static_cast<std::size_t>(i)]).eigenvalues().maxCoeff();
  };
  auto grad = [&](Index i, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(A[static_cast<std::size_t>(i)] * x - B[static_cast<std::size_t>(i)]);
  };
  std::vector<Index> nk(static_cast<std::size_t>(N), 0);
  for (Index i = 0; i < n; ++i) ++nk[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])];
  auto w_node = [&](Index i, Index k) {
    double s = 0;
    for (Index j = 0; j < n; ++j)
      if (in(j, k)) s += W(i, j);
    return s;
  };
  auto w_cross = [&](Index k, Index l) {
    double s = 0;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (in(i, k) && in(j, l)) s += W(i, j);
    return s;
  };
  std::vector<Eigen::VectorXd> xbar;
  std::vector<double> alpha;
  for (Index k = 0; k < N; ++k) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    for (Index i = 0; i < n; ++i)
      if (in(i, k)) {
        H += A[static_cast<std::size_t>(i)];
        b += B[static_cast<std::size_t>(i)];
      }
    xbar.push_back(H.ldlt().solve(b));
    alpha.push_back(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff());
  }
  auto outside = [&](Index k) {
    double s = 0;
    for (Index l = 0; l < N; ++l)
      if (l != k) s += w_cross(k, l);
    return s;
  };
  OracleInterval o;
  for (Index k = 0; k < N; ++k)
    for (Index kk = k + 1; kk < N; ++kk) {
      const double num = (xbar[static_cast<std::size_t>(k)] - xbar[static_cast<std::size_t>(kk)]).norm();
      const double den = outside(k) / alpha[static_cast<std::size_t>(k)] + outside(kk) / alpha[static_cast<std::size_t>(kk)];
      o.gamma_max = std::min(o.gamma_max, den == 0 ? kInf : num / den);
    }
  for (Index k = 0; k < N; ++k)
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        if (!in(i, k) || !in(j, k)) continue;
        double mu = 0;
        for (Index l = 0; l < N; ++l)
          if (l != k) mu += std::abs(w_node(i, l) - w_node(j, l));
        mu += (Li(i) + Li(j)) / alpha[static_cast<std::size_t>(k)] * outside(k);
        o.mu.push_back(mu);
        const double den = double(nk[static_cast<std::size_t>(k)]) * W(i, j) - mu;
        const double num = (grad(j, xbar[static_cast<std::size_t>(k)]) - grad(i, xbar[static_cast<std::size_t>(k)])).norm();
        o.gamma_min = std::max(o.gamma_min, den <= 0 ? kInf : num / den);
      }
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  for (Index i = 0; i < n; ++i) {
    H += A[static_cast<std::size_t>(i)];
    b += B[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd xg = H.ldlt().solve(b);
  for (Index k = 0; k < N; ++k) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
    for (Index i = 0; i < n; ++i)
      if (in(i, k)) g += grad(i, xg);
    const double den = outside(k);
    o.coarsening = std::max(o.coarsening, den == 0 ? (g.norm() > 0 ? kInf : 0.0) : g.norm() / den);
  }
  return o;
}

void expect_rel(double got, double want, double tol) {
  if (std::isinf(want)) {
    EXPECT_TRUE(std::isinf(got)) << got;
    return;
  }
  EXPECT_NEAR(got, want, tol * (1 + std::abs(want)));
}

}  // namespace

TEST(RecoveryInterval, ZeroCrossWeights) {
  const auto f = four_point(0.0);
  const auto rep = recovery_interval(LossSet<double>::squared_distance(f.a), f.g, f.truth);
  EXPECT_TRUE(std::isinf(rep.gamma_max));
  for (const auto& t : rep.pairs) EXPECT_EQ(t.mu, 0.0);
  EXPECT_NEAR(rep.gamma_min, 0.5, 1e-15);  // ||a_0 - a_1|| / (n_k w) = 1/2
  EXPECT_TRUE(rep.interval_nonempty());
}

TEST(RecoveryInterval, FourPointHandValues) {
  // alpha_k = 2, w^(0,1) = 4w, mu = 4w, so gamma_min = 1/(2 - 4w) and
  // gamma_max = 10 / (2w + 2w).
  for (double w : {1e-3, 0.01, 0.1}) {
    const auto f = four_point(w);
    const auto rep = recovery_interval(LossSet<double>::squared_distance(f.a), f.g, f.truth);
    EXPECT_NEAR(rep.gamma_min, 1 / (2 - 4 * w), 1e-12);
    EXPECT_NEAR(rep.gamma_max, 10 / (4 * w), 1e-9);
    EXPECT_NEAR(rep.coarsening_bound, 10 / (4 * w), 1e-9);
    for (const auto& t : rep.pairs) EXPECT_NEAR(t.mu, 4 * w, 1e-15);
    EXPECT_EQ(rep.cross_weights(0, 1), 4 * w);
  }
}

TEST(RecoveryInterval, MatchesFormulaTranscription) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uw(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = 7, p = 2, N = 3;
    std::vector<Eigen::MatrixXd> A;
    std::vector<Eigen::VectorXd> B;
    for (Index i = 0; i < n; ++i) {
      const Eigen::MatrixXd m = oracle::random_points(rng, p, p);
      A.push_back(m * m.transpose() + 0.3 * Eigen::MatrixXd::Identity(p, p));
      B.push_back(oracle::random_points(rng, p, 1, 3.0));
    }
    const std::vector<Index> label = {0, 1, 0, 2, 1, 0, 2};
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    std::vector<Edge> edges;
    std::vector<double> weights;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        const double w = label[static_cast<std::size_t>(i)] == label[static_cast<std::size_t>(j)] ? 1 + uw(rng)
                                                                                                  : 0.01 * uw(rng);
        W(i, j) = W(j, i) = w;
        edges.push_back({i, j});
        weights.push_back(w);
      }
    const WeightedGraph<double> g(n, edges, weights);
    const auto got = recovery_interval(LossSet<double>::quadratic(A, B), g, Partition(label));
    const auto want = interval_oracle(A, B, W, label, N);
    expect_rel(got.gamma_min, want.gamma_min, 1e-10);
    expect_rel(got.gamma_max, want.gamma_max, 1e-10);
    expect_rel(got.coarsening_bound, want.coarsening, 1e-10);
    // The library orders pairs cluster by cluster; the oracle does the same.
    ASSERT_EQ(got.pairs.size(), want.mu.size());
    for (std::size_t t = 0; t < want.mu.size(); ++t) EXPECT_NEAR(got.pairs[t].mu, want.mu[t], 1e-10 * (1 + want.mu[t]));
  }
}

TEST(RecoveryInterval, SmallCrossWeightLimit) {
  // As w -> 0, gamma_min tends to max ||grad f_j - grad f_i|| / n_k.
  const auto f = four_point(1e-8);
  const auto rep = recovery_interval(LossSet<double>::squared_distance(f.a), f.g, f.truth);
  EXPECT_NEAR(rep.gamma_min, 0.5, 1e-6 * 0.5);
}

TEST(RecoveryInterval, PremiseFailureIsReportedNotThrown) {
  const auto f = four_point(0.6);  // 2 - 4w < 0
  const auto rep = recovery_interval(LossSet<double>::squared_distance(f.a), f.g, f.truth);
  EXPECT_FALSE(rep.premise_ok);
  EXPECT_TRUE(std::isinf(rep.gamma_min));
  EXPECT_FALSE(rep.interval_nonempty());
  for (const auto& t : rep.pairs) EXPECT_FALSE(t.premise_ok);
}

TEST(RecoveryInterval, EqualClusterMinimizersFailPremise) {
  Eigen::MatrixXd a(4, 1);
  a << -1, 1, -2, 2;  // both cluster means are 0
  const auto rep =
      recovery_interval(LossSet<double>::squared_distance(a), build_complete<double>(4), Partition({0, 0, 1, 1}));
  EXPECT_EQ(rep.distinct_minimizers(0, 1), 0);
  EXPECT_FALSE(rep.premise_ok);
  EXPECT_EQ(rep.gamma_max, 0.0);
}

TEST(RecoveryInterval, ErrorsAndOverride) {
  Eigen::VectorXd ai(4), bi(4);
  ai << 0, 1, 2, 3;
  bi << 1, 1, 2, 2;
  const auto g = build_complete<double>(4);
  const Partition part({0, 0, 1, 1});
  EXPECT_THROW(recovery_interval(LossSet<double>::ridge_regression(ai, bi, 0.0), g, part), std::invalid_argument);
  const auto ridge = LossSet<double>::ridge_regression(ai, bi, 0.1);
  EXPECT_THROW(recovery_interval(ridge, g, Partition({0, 0, 0})), std::invalid_argument);
  EXPECT_THROW(recovery_interval(ridge, g, part, std::vector<double>{1.0}), std::invalid_argument);
  const auto rep = recovery_interval(ridge, g, part, std::vector<double>{0.5, 0.25});
  EXPECT_TRUE(rep.alpha_user_supplied);
  EXPECT_EQ(rep.alpha[1], 0.25);
  // Overriding alpha with the sum of node moduli only shrinks the interval.
  const auto exact = recovery_interval(ridge, g, part);
  std::vector<double> summed;
  for (const auto& members : part.clusters()) {
    double s = 0;
    for (Index i : members) s += ridge.strong_convexity(i);
    summed.push_back(s);
  }
  const auto loose = recovery_interval(ridge, g, part, summed);
  EXPECT_GE(exact.gamma_max, loose.gamma_max);
  EXPECT_LE(exact.gamma_min, loose.gamma_min);
}

TEST(RecoveryIntervalCC, ZeroCrossAndComparison) {
  auto f = four_point(0.0);
  auto cc = recovery_interval_cc(f.a, f.g, f.truth);
  EXPECT_TRUE(std::isinf(cc.gamma_max));
  EXPECT_NEAR(cc.gamma_min, 0.5, 1e-15);
  for (double w : {1e-3, 0.05, 0.2}) {
    f = four_point(w);
    cc = recovery_interval_cc(f.a, f.g, f.truth);
    const auto rep = recovery_interval(LossSet<double>::squared_distance(f.a), f.g, f.truth);
    EXPECT_LE(cc.gamma_min, rep.gamma_min + 1e-15);
    EXPECT_NEAR(cc.gamma_max, rep.gamma_max, 1e-12 * rep.gamma_max);
    EXPECT_NEAR(cc.gamma_min, 0.5, 1e-15);  // symmetric weights: denominator n_k w_ij
  }
  Eigen::VectorXd ai(4), bi(4);
  ai << 0, 1, 2, 3;
  bi << 1, 1, 2, 2;
  EXPECT_THROW(recovery_interval_cc(LossSet<double>::ridge_regression(ai, bi, 0.1), f.g, f.truth),
               std::invalid_argument);
}

TEST(RecoveryInterval, MidpointSolveRecoversPartition) {
  const auto f = four_point(1e-3);
  const auto losses = LossSet<double>::squared_distance(f.a);
  const auto rep = recovery_interval(losses, f.g, f.truth);
  ASSERT_TRUE(rep.interval_nonempty());
  auto cfg = SolverConfig<double>::nl(0.5 * (rep.gamma_min + rep.gamma_max));
  cfg.rho = cfg.gamma;
  cfg.eps_abs = cfg.eps_rel = 1e-10;
  cfg.max_iters = 20000;
  const auto res = solve_nl(losses, f.g, cfg);
  EXPECT_EQ(extract_partition(res.state.x, f.g, 1e-6), f.truth);
}

TEST(RecoveryInterval, BelowCoarseningBoundGivesCoarsening) {
  // Three clusters on a line, two of them close; intra weight 1, inter weight
  // 0.01. Past gamma_max the close pair may merge but the far one may not.
  Eigen::MatrixXd a(6, 1);
  a << 0, 0.2, 3, 3.2, 20, 20.2;
  const Partition truth({0, 0, 1, 1, 2, 2});
  std::vector<Edge> edges;
  std::vector<double> weights;
  for (Index i = 0; i < 6; ++i)
    for (Index j = i + 1; j < 6; ++j) {
      edges.push_back({i, j});
      weights.push_back(truth.label(i) == truth.label(j) ? 1.0 : 0.01);
    }
  const WeightedGraph<double> g(6, edges, weights);
  const auto losses = LossSet<double>::squared_distance(a);
  const auto rep = recovery_interval(losses, g, truth);
  ASSERT_TRUE(rep.premise_ok);
  ASSERT_LT(rep.gamma_max, rep.coarsening_bound);
  for (double frac : {0.1, 0.5, 0.9}) {
    auto cfg = SolverConfig<double>::nl(rep.gamma_min + frac * (rep.coarsening_bound - rep.gamma_min));
    cfg.rho = cfg.gamma;
    cfg.eps_abs = cfg.eps_rel = 1e-10;
    cfg.max_iters = 50000;
    const auto res = solve_nl(losses, g, cfg);
    const auto rel = partition_relation(extract_partition(res.state.x, g, 1e-6), truth);
    EXPECT_TRUE(rel == PartitionRelation::perfect || rel == PartitionRelation::nontrivial_coarsening)
        << frac << " " << to_string(rel);
  }
}

TEST(ExactPenalty, ClusteringReducesToThreeNC) {
  std::mt19937_64 rng(41);
  const Eigen::MatrixXd a = oracle::random_points(rng, 9, 3);
  const auto losses = LossSet<double>::squared_distance(a);
  const double C = bound_C_clustering(a);
  const auto t = exact_penalty_threshold(losses, C, BoundMethod::clustering);
  EXPECT_LE(t.gamma_star, 3 * 9 * C * (1 + 1e-15));
  EXPECT_EQ(to_string(t.method), "clustering-C");
  // Points all on the sphere of radius C give equality.
  Eigen::MatrixXd s(3, 2);
  s << 2, 0, 0, -2, std::sqrt(2.0), std::sqrt(2.0);
  const auto ts = exact_penalty_threshold(LossSet<double>::squared_distance(s), bound_C_clustering(s));
  EXPECT_NEAR(ts.gamma_star, 3 * 3 * 2.0, 1e-12);
}

TEST(ExactPenalty, TwoPointArithmetic) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, 1;
  const double C = bound_C_clustering(a);
  EXPECT_EQ(C, 1.0);
  EXPECT_DOUBLE_EQ(exact_penalty_threshold(LossSet<double>::squared_distance(a), C).gamma_star, 6.0);
}

TEST(ExactPenalty, QuadraticWithoutLinearTerm) {
  std::mt19937_64 rng(42);
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::VectorXd> B;
  double lmax = 0;
  for (int i = 0; i < 4; ++i) {
    const Eigen::MatrixXd m = oracle::random_points(rng, 3, 3);
    A.push_back(m * m.transpose() + Eigen::MatrixXd::Identity(3, 3));
    B.push_back(Eigen::VectorXd::Zero(3));
    lmax += Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A.back()).eigenvalues().maxCoeff();
  }
  const auto losses = LossSet<double>::quadratic(A, B);
  EXPECT_NEAR(exact_penalty_threshold(losses, 0.7).gamma_star, 2 * 0.7 * lmax, 1e-10 * lmax);
  EXPECT_EQ(bound_C_quadratic(losses), 0.0);
  const auto t0 = exact_penalty_threshold(losses, bound_C_quadratic(losses), BoundMethod::quadratic);
  EXPECT_EQ(t0.gamma_star, 0.0);
  EXPECT_TRUE(t0.degenerate);
}

TEST(ExactPenalty, StrictlyIncreasingInC) {
  std::mt19937_64 rng(43);
  const auto losses = LossSet<double>::squared_distance(oracle::random_points(rng, 5, 2));
  double prev = -1;
  for (double C : {0.0, 0.1, 1.0, 2.5, 10.0}) {
    const double g = exact_penalty_threshold(losses, C).gamma_star;
    EXPECT_GT(g, prev);
    prev = g;
  }
  EXPECT_THROW(exact_penalty_threshold(losses, -1.0), std::invalid_argument);
  EXPECT_THROW(exact_penalty_threshold(losses, kInf), std::invalid_argument);
}

TEST(BoundC, ClusteringValues) {
  Eigen::MatrixXd a(1, 2);
  a << 3, 4;
  EXPECT_EQ(bound_C_clustering(a), 5.0);
  EXPECT_EQ(bound_C_clustering(Eigen::MatrixXd::Zero(3, 2)), 0.0);
}

TEST(BoundC, StronglyConvexOnClusteringLosses) {
  std::mt19937_64 rng(44);
  const Eigen::MatrixXd a = oracle::random_points(rng, 6, 2);
  const double want = std::sqrt(a.squaredNorm()) + a.rowwise().norm().maxCoeff();
  EXPECT_NEAR(bound_C_strongly_convex(LossSet<double>::squared_distance(a)), want, 1e-12);
  EXPECT_EQ(bound_C_strongly_convex(LossSet<double>::squared_distance(Eigen::MatrixXd::Zero(3, 2))), 0.0);
  Eigen::VectorXd ai(2), bi(2);
  ai << 1, 2;
  bi << 0, 1;
  EXPECT_THROW(bound_C_strongly_convex(LossSet<double>::ridge_regression(ai, bi, 0.0)), std::invalid_argument);
}

TEST(BoundC, QuadraticFormulaAndCrossCheck) {
  std::mt19937_64 rng(45);
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::VectorXd> B;
  for (int i = 0; i < 5; ++i) {
    const Eigen::MatrixXd m = oracle::random_points(rng, 2, 2);
    A.push_back(m * m.transpose() + 0.2 * Eigen::MatrixXd::Identity(2, 2));
    B.push_back(oracle::random_points(rng, 2, 1));
  }
  const auto losses = LossSet<double>::quadratic(A, B);
  double alpha = kInf, energy = 0, largest = 0;
  for (int i = 0; i < 5; ++i) {
    alpha = std::min(alpha, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A[static_cast<std::size_t>(i)]).eigenvalues()(0));
    const Eigen::VectorXd s = A[static_cast<std::size_t>(i)].inverse() * B[static_cast<std::size_t>(i)];
    energy += B[static_cast<std::size_t>(i)].dot(s);
    largest = std::max(largest, s.norm());
  }
  const double want = std::sqrt(energy / alpha) + largest;
  EXPECT_NEAR(bound_C_quadratic(losses), want, 1e-10 * want);
  EXPECT_NEAR(bound_C_strongly_convex(losses), want, 1e-10 * want);

  std::vector<Eigen::MatrixXd> I(3, Eigen::MatrixXd::Identity(2, 2));
  std::vector<Eigen::VectorXd> b = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 2), Eigen::Vector2d(2, 2)};
  const double want_i = std::sqrt(1 + 4 + 8) + std::sqrt(8.0);
  EXPECT_NEAR(bound_C_quadratic(LossSet<double>::quadratic(I, b)), want_i, 1e-12);
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
  EXPECT_NEAR(bound_C_quadratic(LossSet<double>::squared_distance(ones)), 2 + std::sqrt(2.0), 1e-12);
}
