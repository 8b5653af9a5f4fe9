#include <netlasso/path.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "../oracles.hpp"

using namespace netlasso;
using Centroids = CentroidMatrix<double>;

namespace {

std::vector<Index> random_labels(std::mt19937_64& rng, Index n, Index k) {
  std::uniform_int_distribution<Index> d(0, k - 1);
  std::vector<Index> l(static_cast<std::size_t>(n));
  for (auto& v : l) v = d(rng);
  return l;
}

}  // namespace

TEST(Partition, RenumbersByFirstAppearance) {
  const Partition p({7, 7, 3, 9, 3});
  EXPECT_EQ(p.labels(), (std::vector<Index>{0, 0, 1, 2, 1}));
  EXPECT_EQ(p.num_clusters(), 3);
  EXPECT_EQ(p, Partition({1, 1, 0, 5, 0}));
  EXPECT_EQ(p.clusters()[1], (std::vector<Index>{2, 4}));
}

TEST(PartitionRelation, Cases) {
  const Partition truth({0, 0, 1, 1});
  EXPECT_EQ(partition_relation(truth, truth), PartitionRelation::perfect);
  EXPECT_EQ(partition_relation(Partition({0, 0, 1, 1}), Partition({0, 1, 2, 2})),
            PartitionRelation::nontrivial_coarsening);
  EXPECT_EQ(partition_relation(Partition({0, 1, 0, 1}), truth), PartitionRelation::other);
  EXPECT_EQ(partition_relation(Partition::single_cluster(4), truth), PartitionRelation::trivial_coarsening);
  EXPECT_EQ(partition_relation(Partition::single_cluster(4), Partition::single_cluster(4)), PartitionRelation::perfect);
  EXPECT_EQ(partition_relation(Partition::singletons(4), truth), PartitionRelation::other);
  EXPECT_THROW(partition_relation(truth, Partition::singletons(3)), std::invalid_argument);
  EXPECT_EQ(to_string(PartitionRelation::nontrivial_coarsening), "nontrivial-coarsening");
}

TEST(AdjustedRandIndex, KnownValues) {
  const Partition p({0, 0, 1, 1, 2});
  EXPECT_EQ(adjusted_rand_index(p, p), 1.0);
  EXPECT_EQ(adjusted_rand_index(Partition::singletons(4), Partition::single_cluster(4)), 0.0);
  EXPECT_THROW(adjusted_rand_index(p, Partition::singletons(4)), std::invalid_argument);
}

TEST(AdjustedRandIndex, MatchesPairCountingAndIsSymmetric) {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<Index> dn(2, 30), dk(1, 6);
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = dn(rng);
    const auto la = random_labels(rng, n, dk(rng)), lb = random_labels(rng, n, dk(rng));
    const Partition a(la), b(lb);
    const double ari = adjusted_rand_index(a, b);
    EXPECT_NEAR(ari, oracle::ari_pairs(la, lb), 1e-12);
    EXPECT_EQ(ari, adjusted_rand_index(b, a));
    EXPECT_EQ(adjusted_rand_index(a, a), 1.0);
    EXPECT_LE(ari, 1.0 + 1e-15);
  }
}

TEST(ExtractPartition, Basics) {
  const auto g = build_complete<double>(4);
  EXPECT_EQ(extract_partition(Centroids(Centroids::Ones(4, 2)), g, 1e-6).num_clusters(), 1);
  Centroids x(4, 1);
  x << 0, 1, 2, 3;
  EXPECT_EQ(extract_partition(x, g, 1e-6), Partition::singletons(4));
  EXPECT_THROW(extract_partition(x, g, -1.0), std::invalid_argument);
}

TEST(ExtractPartition, PathWithOneGap) {
  const auto g = build_path<double>(6);
  Centroids x(6, 1);
  x << 0.5, 0.5, 0.5, 1.5, 1.5, 1.5;
  EXPECT_EQ(extract_partition(x, g, 1e-6), Partition({0, 0, 0, 1, 1, 1}));
}

TEST(ExtractPartition, UsesEdgesNotGlobalEquality) {
  // Nodes 0 and 2 share a centroid but the edge path between them is split.
  const auto g = build_path<double>(3);
  Centroids x(3, 1);
  x << 1, 2, 1;
  EXPECT_EQ(extract_partition(x, g, 1e-6).num_clusters(), 3);
}

TEST(ExtractPartition, ZeroSplitBlockMerges) {
  const auto g = build_path<double>(2);
  Centroids x(2, 1);
  x << 0, 0.1;
  BlockVector<double> z = BlockVector<double>::Zero(1, 1);
  EXPECT_EQ(extract_partition(x, g, 1e-6, &z).num_clusters(), 1);
  z(0, 0) = 1e-300;
  EXPECT_EQ(extract_partition(x, g, 1e-6, &z).num_clusters(), 2);
}

TEST(ExtractPartition, PermutationEquivariant) {
  std::mt19937_64 rng(52);
  const Index n = 9;
  Centroids x(n, 2);
  for (Index i = 0; i < n; ++i) x.row(i) = Eigen::RowVector2d(double(i % 3), 0);
  const auto g = build_complete<double>(n);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Centroids xp(n, 2);
  for (Index i = 0; i < n; ++i) xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  const Partition a = extract_partition(x, g, 1e-6), b = extract_partition(xp, g, 1e-6);
  std::vector<Index> mapped(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) mapped[static_cast<std::size_t>(i)] = a.label(perm[static_cast<std::size_t>(i)]);
  EXPECT_EQ(Partition(mapped), b);
}

TEST(KPath, FullKEqualsUnconstrainedFit) {
  std::mt19937_64 rng(53);
  const Eigen::MatrixXd a = oracle::random_points(rng, 5, 2);
  const auto losses = LossSet<double>::squared_distance(a);
  const auto g = build_complete<double>(5);
  const auto path = k_path(losses, g, 1.0, {10}, SolverConfig<double>::ntl(1.0, 0));
  ASSERT_EQ(path.steps.size(), 1u);
  EXPECT_LT((path.steps[0].x - a).norm(), 1e-8);
  EXPECT_EQ(path.steps[0].partition, Partition::singletons(5));
  EXPECT_EQ(path.parameter_name, "K");
}

TEST(KPath, ZeroKStepMatchesUniformNetworkLasso) {
  std::mt19937_64 rng(54);
  const Eigen::MatrixXd a = oracle::random_points(rng, 6, 2);
  const auto losses = LossSet<double>::squared_distance(a);
  const auto g = build_path<double>(6);
  const double gamma = 0.4;
  auto base = SolverConfig<double>::ntl(gamma, 0);
  base.rho = 10;
  base.eps_abs = base.eps_rel = 1e-12;
  base.max_iters = 50000;
  const auto path = k_path(losses, g, gamma, {5, 3, 1, 0}, base);
  auto nl = SolverConfig<double>::nl(gamma);
  nl.eps_abs = nl.eps_rel = 1e-12;
  nl.max_iters = 50000;
  const auto res = solve_nl(losses, g, nl);
  EXPECT_NEAR(path.steps.back().objective, objective(res.state.x, losses, g, nl), 1e-6);
}

TEST(KPath, StepsAreFeasibleAndClusterCountsShrink) {
  Eigen::MatrixXd a(6, 1);
  a << 0, 0.1, 2, 2.1, 5, 5.2;
  const auto losses = LossSet<double>::squared_distance(a);
  const auto g = build_path<double>(6);
  const double gamma = 3 * 6 * bound_C_clustering(a) * 1.001;
  auto base = SolverConfig<double>::ntl(gamma, 0);
  base.rho = 100;
  base.eps_abs = base.eps_rel = 1e-11;
  base.max_iters = 20000;
  const auto path = k_path(losses, g, gamma, {4, 2, 1, 0}, base);
  Index prev = 6;
  for (const auto& s : path.steps) {
    EXPECT_LE(s.penalty, 1e-6) << s.parameter;
    EXPECT_LE(s.partition.num_clusters(), Index(s.parameter) + 1);
    EXPECT_LE(s.partition.num_clusters(), prev);
    prev = s.partition.num_clusters();
  }
  EXPECT_EQ(path.steps[1].partition, Partition({0, 0, 1, 1, 2, 2}));
  EXPECT_EQ(path.steps.back().partition.num_clusters(), 1);
}

TEST(KPath, RejectsBadSchedules) {
  const auto losses = LossSet<double>::squared_distance(Eigen::MatrixXd::Zero(3, 1));
  const auto g = build_path<double>(3);
  const auto cfg = SolverConfig<double>::ntl(1.0, 0);
  EXPECT_THROW(k_path(losses, g, 1.0, {}, cfg), std::invalid_argument);
  EXPECT_THROW(k_path(losses, g, 1.0, {1, 1}, cfg), std::invalid_argument);
  EXPECT_THROW(k_path(losses, g, 1.0, {3}, cfg), std::invalid_argument);
  EXPECT_THROW(k_path(losses, g, 1.0, {0, 1}, cfg), std::invalid_argument);
}

TEST(GammaPath, TinyGammaAndMergeToMean) {
  Eigen::MatrixXd a(4, 2);
  a << 1, 1, -1, 1, -1, -1, 1, -1;  // symmetric, mean 0
  const auto losses = LossSet<double>::squared_distance(a);
  const auto g = build_complete<double>(4);
  auto base = SolverConfig<double>::nl(1.0);
  base.eps_abs = base.eps_rel = 1e-10;
  base.max_iters = 20000;
  const auto tiny = gamma_path(losses, g, std::vector<double>{1e-8}, base);
  EXPECT_LT((tiny.steps[0].x - a).norm(), 1e-6);

  std::vector<double> gammas;
  for (int t = 1; t <= 50; ++t) gammas.push_back(1e-3 * std::pow(1.2, t - 1));
  const auto path = gamma_path(losses, g, gammas, base);
  EXPECT_TRUE(path.stopped_early);
  EXPECT_LT(path.steps.size(), gammas.size());
  const auto& last = path.steps.back();
  EXPECT_EQ(last.partition.num_clusters(), 1);
  EXPECT_LT(last.x.cwiseAbs().maxCoeff(), 1e-4);
  for (std::size_t t = 1; t < path.steps.size(); ++t) EXPECT_GT(path.steps[t].parameter, path.steps[t - 1].parameter);

  const auto full = gamma_path(losses, g, gammas, base, std::nullopt, true, false);
  EXPECT_EQ(full.steps.size(), gammas.size());
  EXPECT_FALSE(full.stopped_early);
}

TEST(GammaPath, RejectsBadSchedules) {
  const auto losses = LossSet<double>::squared_distance(Eigen::MatrixXd::Zero(3, 1));
  const auto g = build_path<double>(3);
  const auto cfg = SolverConfig<double>::nl(1.0);
  EXPECT_THROW(gamma_path(losses, g, std::vector<double>{}, cfg), std::invalid_argument);
  EXPECT_THROW(gamma_path(losses, g, std::vector<double>{0.0, 1.0}, cfg), std::invalid_argument);
  EXPECT_THROW(gamma_path(losses, g, std::vector<double>{2.0, 1.0}, cfg), std::invalid_argument);
}

TEST(MidpointInit, PicksMiddleUnmergedStep) {
  PathResult<double> path;
  for (int t = 0; t < 5; ++t) {
    PathStep<double> s;
    s.x = Centroids::Constant(2, 1, double(t));
    s.partition = t < 3 ? Partition::singletons(2) : Partition::single_cluster(2);
    path.steps.push_back(s);
  }
  EXPECT_EQ(midpoint_init(path)(0, 0), 1.0);
  for (auto& s : path.steps) s.partition = Partition::singletons(2);
  EXPECT_EQ(midpoint_init(path)(0, 0), 2.0);
  for (auto& s : path.steps) s.partition = Partition::single_cluster(2);
  EXPECT_THROW(midpoint_init(path), std::invalid_argument);
}

TEST(RefitOnPartition, ClusterMeans) {
  Eigen::MatrixXd a(4, 1);
  a << 0, 2, 10, 20;
  const auto x = refit_on_partition(LossSet<double>::squared_distance(a), Partition({0, 0, 1, 1}));
  EXPECT_EQ(x(0, 0), 1.0);
  EXPECT_EQ(x(1, 0), 1.0);
  EXPECT_EQ(x(3, 0), 15.0);
}
