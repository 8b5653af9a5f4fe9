#include <netlasso/io.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace netlasso {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(const std::string& text) {
  const auto b = text.find_first_not_of(" \t\"");
  if (b == std::string::npos) return std::nullopt;
  const auto e = text.find_last_not_of(" \t\"");
  const char* first = text.data() + b;
  const char* last = text.data() + e + 1;
  if (*first == '+') ++first;
  double v = 0;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
  return v;
}

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

void write_centroids_csv(std::ostream& out, const CentroidMatrix<double>& x) {
  for (Index c = 0; c < x.cols(); ++c) out << (c ? "," : "") << 'x' << c;
  out << '\n';
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index c = 0; c < x.cols(); ++c) out << (c ? "," : "") << format_double(x(i, c));
    out << '\n';
  }
}

CentroidMatrix<double> read_centroids_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_centroids_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    bool ok = true;
    while (std::getline(ss, cell, ',')) {
      const auto v = parse_double(cell);
      if (!v) {
        ok = false;
        break;
      }
      row.push_back(*v);
    }
    const bool header = first && !ok;
    first = false;
    if (header) continue;
    if (!ok) throw std::invalid_argument("read_centroids_csv: non-numeric cell in " + path);
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("read_centroids_csv: ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("read_centroids_csv: no rows in " + path);
  CentroidMatrix<double> x(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c) x(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
  return x;
}

void write_trace_csv(std::ostream& out, const SolverState<double>& s) {
  out << "iter,objective,augmented_lagrangian,primal_residual,x_change,rho\n";
  for (std::size_t t = 0; t < s.objective.size(); ++t)
    out << t + 1 << ',' << format_double(s.objective[t]) << ',' << format_double(s.augmented_lagrangian[t]) << ','
        << format_double(s.primal_residual[t]) << ',' << format_double(s.x_change[t]) << ','
        << format_double(s.rho_history[t]) << '\n';
}

WeightedGraph<double> load_edge_list(const std::string& path, Index n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path);
  std::vector<Edge> edges;
  std::vector<double> weights;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<std::string> tok;
    std::string t;
    while (ss >> t) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 2 || tok.size() > 3)
      throw std::invalid_argument("load_edge_list: expected 'i j [w]' on line " + std::to_string(line_no));
    const auto i = parse_double(tok[0]), j = parse_double(tok[1]);
    const auto w = tok.size() == 3 ? parse_double(tok[2]) : std::optional<double>(1.0);
    if (!i || !j || !w || *i != std::floor(*i) || *j != std::floor(*j))
      throw std::invalid_argument("load_edge_list: malformed line " + std::to_string(line_no));
    edges.push_back({static_cast<Index>(*i), static_cast<Index>(*j)});
    weights.push_back(*w);
  }
  return WeightedGraph<double>(n, std::move(edges), std::move(weights));
}

nlohmann::json to_json(const Partition& p) {
  return {{"labels", p.labels()}, {"num_clusters", p.num_clusters()}};
}

namespace {

nlohmann::json matrix_json(const Matrix<double>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(json_number(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json vector_json(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

}  // namespace

nlohmann::json to_json(const RecoveryReport<double>& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& t : r.pairs)
    pairs.push_back({{"cluster", t.cluster},
                     {"i", t.i},
                     {"j", t.j},
                     {"w", json_number(t.weight)},
                     {"mu", json_number(t.mu)},
                     {"gradient_gap", json_number(t.gradient_gap)},
                     {"ratio", json_number(t.ratio)},
                     {"premise_ok", t.premise_ok}});
  Matrix<double> distinct = r.distinct_minimizers.cast<double>();
  return {{"n_k", r.cluster_sizes},
          {"w_i_l", matrix_json(r.node_cluster_weights)},
          {"w_k_l", matrix_json(r.cross_weights)},
          {"xbar_k", matrix_json(r.cluster_minimizers)},
          {"xbar", matrix_json(r.global_minimizer.transpose())},
          {"alpha_k", vector_json(r.alpha)},
          {"alpha_user_supplied", r.alpha_user_supplied},
          {"L_i", vector_json(r.smoothness)},
          {"mu", pairs},
          {"distinct_minimizers", matrix_json(distinct)},
          {"gamma_min", json_number(r.gamma_min)},
          {"gamma_max", json_number(r.gamma_max)},
          {"coarsening_bound", json_number(r.coarsening_bound)},
          {"premise_ok", r.premise_ok},
          {"interval_nonempty", r.interval_nonempty()}};
}

nlohmann::json to_json(const ClusteringInterval<double>& r) {
  return {{"gamma_min_prime", json_number(r.gamma_min)},
          {"gamma_max_prime", json_number(r.gamma_max)},
          {"premise_ok", r.premise_ok}};
}

nlohmann::json to_json(const PenaltyThreshold<double>& t) {
  return {{"C", json_number(t.bound_C)},
          {"gamma_star", json_number(t.gamma_star)},
          {"method", to_string(t.method)},
          {"degenerate", t.degenerate}};
}

nlohmann::json to_json(const ConvergenceReport<double>& r) {
  return {{"sigma", json_number(r.sigma)},
          {"L1", json_number(r.L1)},
          {"L2", json_number(r.L2)},
          {"alpha1", json_number(r.alpha1)},
          {"alpha2", json_number(r.alpha2)},
          {"r", json_number(r.r)},
          {"zeta", json_number(r.zeta)},
          {"f_inf", json_number(r.f_inf)},
          {"rho", json_number(r.rho)},
          {"rho_bound", json_number(r.rho_bound)},
          {"rho_infimum", json_number(r.rho_infimum)},
          {"r_star", json_number(r.r_star)},
          {"bounded_rho_bound", json_number(r.bounded_rho_bound)},
          {"surjective", r.surjective},
          {"strongly_convex", r.strongly_convex},
          {"rho_admissible", r.rho_admissible},
          {"bounded_condition", r.bounded_condition},
          {"applicable", r.applicable},
          {"pass", r.pass},
          {"message", r.message}};
}

nlohmann::json to_json(const StationarityReport<double>& r) {
  return {{"min_value", json_number(r.min_value)},
          {"worst_direction", r.worst_kind},
          {"directions", r.directions},
          {"tolerance", json_number(r.tolerance)},
          {"passed", r.passed}};
}

nlohmann::json to_json(const PathResult<double>& path) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : path.steps)
    steps.push_back({{"parameter", json_number(s.parameter)},
                     {"labels", s.partition.labels()},
                     {"num_clusters", s.partition.num_clusters()},
                     {"objective", json_number(s.objective)},
                     {"penalty", json_number(s.penalty)},
                     {"iterations", s.iterations},
                     {"stop_reason", to_string(s.reason)},
                     {"primal_residual", json_number(s.primal_residual)}});
  return {{"parameter", path.parameter_name}, {"stopped_early", path.stopped_early}, {"steps", steps}};
}

void write_path_csv(std::ostream& out, const PathResult<double>& path) {
  out << "step," << path.parameter_name;
  if (!path.steps.empty()) {
    const auto& x = path.steps.front().x;
    for (Index i = 0; i < x.rows(); ++i)
      for (Index c = 0; c < x.cols(); ++c) out << ",x" << i << '_' << c;
  }
  out << '\n';
  for (std::size_t t = 0; t < path.steps.size(); ++t) {
    out << t << ',' << format_double(path.steps[t].parameter);
    const auto& x = path.steps[t].x;
    for (Index i = 0; i < x.rows(); ++i)
      for (Index c = 0; c < x.cols(); ++c) out << ',' << format_double(x(i, c));
    out << '\n';
  }
}

}  // namespace netlasso
