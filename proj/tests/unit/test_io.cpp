#include <netlasso/io.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace netlasso;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "netlasso_unit";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(FormatDouble, RoundTripsExactly) {
  std::mt19937_64 rng(61);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 10000; ++i) {
    double v;
    const std::uint64_t b = bits(rng);
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    const auto back = parse_double(format_double(v));
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(ParseDouble, AcceptsAndRejects) {
  EXPECT_EQ(parse_double(" 2.5 "), 2.5);
  EXPECT_EQ(parse_double("+1e3"), 1000.0);
  EXPECT_EQ(parse_double("\"-4\""), -4.0);
  EXPECT_FALSE(parse_double("").has_value());
  EXPECT_FALSE(parse_double("1.5x").has_value());
  EXPECT_FALSE(parse_double("abc").has_value());
}

TEST(JsonNumber, NonFiniteAsStrings) {
  EXPECT_EQ(json_number(1.5), nlohmann::json(1.5));
  EXPECT_EQ(json_number(-std::numeric_limits<double>::infinity()), nlohmann::json("-inf"));
}

TEST(CentroidsCsv, RoundTrip) {
  CentroidMatrix<double> x(3, 2);
  x << 1.0 / 3.0, -0.0, 1e-310, 2, 7, -8.125;
  const auto path = temp_file("centroids.csv");
  {
    std::ofstream out(path);
    write_centroids_csv(out, x);
  }
  EXPECT_EQ(read_centroids_csv(path.string()), x);
}

TEST(TraceCsv, OneRowPerIteration) {
  SolverState<double> s;
  s.objective = {3, 2};
  s.augmented_lagrangian = {3.5, 2.5};
  s.primal_residual = {0.1, 0.01};
  s.x_change = {1, 0.5};
  s.rho_history = {1, 10};
  std::ostringstream out;
  write_trace_csv(out, s);
  EXPECT_EQ(out.str(), "iter,objective,augmented_lagrangian,primal_residual,x_change,rho\n1,3,3.5,0.1,1,1\n2,2,2.5,0.01,0.5,10\n");
}

TEST(EdgeList, ParsesWeightsAndComments) {
  const auto path = temp_file("edges.txt");
  std::ofstream(path) << "# header\n0 1\n2 1 0.5  # trailing\n\n";
  const auto g = load_edge_list(path.string(), 3);
  ASSERT_EQ(g.num_edges(), 2);
  EXPECT_EQ(g.weight_between(0, 1), 1.0);
  EXPECT_EQ(g.weight_between(1, 2), 0.5);
  std::ofstream(path) << "0 1 2 3\n";
  EXPECT_THROW(load_edge_list(path.string(), 3), std::invalid_argument);
  std::ofstream(path) << "0 1.5\n";
  EXPECT_THROW(load_edge_list(path.string(), 3), std::invalid_argument);
}

TEST(Json, ReportFieldNames) {
  Eigen::MatrixXd a(4, 1);
  a << 0, 1, 10, 11;
  const auto losses = LossSet<double>::squared_distance(a);
  const Partition part({0, 0, 1, 1});
  const WeightedGraph<double> g(4, {{0, 1}, {2, 3}, {1, 2}}, {1.0, 1.0, 1e-3});
  const auto rep = to_json(recovery_interval(losses, g, part));
  for (const char* key : {"gamma_min", "gamma_max", "coarsening_bound", "mu", "premise_ok"})
    EXPECT_TRUE(rep.contains(key)) << key;
  EXPECT_EQ(rep["mu"][0]["premise_ok"], true);
  const auto th = to_json(exact_penalty_threshold(losses, 11.0, BoundMethod::clustering));
  EXPECT_EQ(th["method"], "clustering-C");
  EXPECT_EQ(to_json(part)["labels"], nlohmann::json({0, 0, 1, 1}));
}

TEST(PathCsv, WideLayout) {
  PathResult<double> path;
  path.parameter_name = "K";
  PathStep<double> s;
  s.parameter = 3;
  s.x = CentroidMatrix<double>(2, 1);
  s.x << 0.5, 1;
  s.partition = Partition::singletons(2);
  path.steps.push_back(s);
  std::ostringstream out;
  write_path_csv(out, path);
  EXPECT_EQ(out.str(), "step,K,x0_0,x1_0\n0,3,0.5,1\n");
  EXPECT_EQ(to_json(path)["steps"][0]["num_clusters"], 2);
}
