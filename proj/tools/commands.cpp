#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace netlasso::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> geometric_grid(double start, double ratio, int steps) {
  if (!(start > 0) || !(ratio > 1) || steps < 1)
    throw ConfigError("gamma grid needs start > 0, ratio > 1 and at least one step");
  std::vector<double> g;
  for (int t = 0; t < steps; ++t) g.push_back(start * std::pow(ratio, t));
  return g;
}

std::vector<Index> jump_set(const Partition& part) {
  std::vector<Index> jumps;
  for (Index k = 0; k + 1 < part.size(); ++k)
    if (part.label(k) != part.label(k + 1)) jumps.push_back(k);
  return jumps;
}

std::vector<std::pair<Index, double>> default_levels(Index n) {
  static const double values[] = {0.0, 1.5, -0.5, 1.0, 2.5, 0.5};
  const Index segments = 6;
  if (n < segments) throw ConfigError("piecewise signal needs at least 6 samples for the default levels");
  std::vector<std::pair<Index, double>> levels;
  Index used = 0;
  for (Index s = 0; s < segments; ++s) {
    const Index end = (n * (s + 1)) / segments;
    levels.emplace_back(end - used, values[s]);
    used = end;
  }
  return levels;
}

PiecewiseOutcome run_piecewise(const SignalInstance& signal, const PiecewiseSettings& settings) {
  const Index n = signal.noisy.size();
  if (n < 2) throw std::invalid_argument("run_piecewise: signal needs at least two samples");
  if (settings.K < 0 || settings.K > n - 1) throw ConfigError("piecewise.K must lie in [0, n - 1]");
  const Matrix<double> points = signal.noisy;
  const auto losses = LossSet<double>::squared_distance(points);

  std::vector<Edge> edges;
  std::vector<double> weights;
  for (Index i = 0; i + 1 < n; ++i) {
    edges.push_back({i, i + 1});
    weights.push_back(gaussian_weight(points, i, i + 1, settings.graph_alpha));
  }
  const WeightedGraph<double> graph(n, std::move(edges), std::move(weights));
  const double sigma = sigma_min_DDt(graph);

  PiecewiseOutcome out;
  out.ntl_gamma = settings.gamma ? *settings.gamma : 3.0 * double(n) * points.cwiseAbs().maxCoeff() * 1.001;
  auto ntl = SolverConfig<double>::ntl(out.ntl_gamma, settings.K);
  ntl.rho = settings.rho0;
  ntl.sigma = sigma;
  ntl.rho_schedule = rho_schedule_preset(sigma);
  ntl.max_iters = settings.max_iters;
  ntl.eps_abs = settings.eps_abs;
  ntl.eps_rel = settings.eps_rel;
  SolverInit<double> start;
  start.x = points;
  auto res = solve_ntl(losses, graph, ntl, start);
  if (res.reason == StopReason::diverged) throw NumericalError("piecewise: NTL diverged: " + res.message);
  out.ntl_reason = res.reason;
  out.ntl_iterations = res.state.iter;
  out.ntl_jumps = jump_set(extract_partition(res.state.x, graph, settings.merge_tol, &res.state.z));
  out.ntl_error = (res.state.x.col(0) - signal.original).norm();
  out.ntl_x = std::move(res.state.x);

  auto nl = SolverConfig<double>::nl(1.0);
  nl.max_iters = settings.max_iters;
  nl.eps_abs = settings.eps_abs;
  nl.eps_rel = settings.eps_rel;
  out.nl_path = gamma_path(losses, graph, settings.nl_gammas, nl, CentroidMatrix<double>(points), false, false,
                           settings.merge_tol);
  for (std::size_t t = 0; t < out.nl_path.steps.size(); ++t) {
    const auto& s = out.nl_path.steps[t];
    out.nl_errors.push_back((s.x.col(0) - signal.original).norm());
    out.nl_jumps.push_back(jump_set(s.partition));
    if (out.nl_errors[t] < out.nl_errors[out.best_quality]) out.best_quality = t;
    if (!out.best_cardinality && Index(out.nl_jumps[t].size()) <= settings.K) out.best_cardinality = t;
  }
  return out;
}

namespace {

// ---- artifact writing ----

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

template <typename Writer>
void write_stream(const fs::path& path, Writer&& writer) {
  std::ostringstream ss;
  writer(ss);
  write_text(path, ss.str());
}

// ---- problem construction ----

struct Problem {
  LabeledPoints data;
  std::optional<SignalInstance> signal;
  std::optional<LossSet<double>> losses;
  Matrix<double> geometry;  // coordinates for Gaussian weights and nearest neighbours
  WeightedGraph<double> graph;
};

std::uint64_t seed_of(const json& cfg) {
  const auto s = cfg["seed"].get<std::int64_t>();
  if (s < 0) throw ConfigError("seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

Index positive_index(const json& v, const std::string& key) {
  const auto x = v.get<std::int64_t>();
  if (x < 1) throw ConfigError(key + " must be positive");
  return static_cast<Index>(x);
}

std::pair<double, double> pair_of(const json& v, const std::string& key) {
  if (v.size() != 2) throw ConfigError(key + " must hold exactly two numbers");
  return {v[0].get<double>(), v[1].get<double>()};
}

std::vector<std::pair<Index, double>> levels_of(const json& cfg) {
  const Index n = positive_index(cfg["data"]["n"], "data.n");
  const json& lv = cfg["data"]["levels"];
  if (lv.is_null()) return default_levels(n);
  std::vector<std::pair<Index, double>> levels;
  Index total = 0;
  for (const auto& p : lv) {
    const auto len = p[0].get<std::int64_t>();
    if (len < 1) throw ConfigError("data.levels: segment lengths must be positive");
    levels.emplace_back(static_cast<Index>(len), p[1].get<double>());
    total += static_cast<Index>(len);
  }
  if (total != n) throw ConfigError("data.levels: segment lengths must sum to data.n");
  return levels;
}

LabeledPoints load_data(const json& cfg, std::optional<SignalInstance>* signal_out = nullptr) {
  const json& d = cfg["data"];
  const std::string kind = d["kind"];
  const auto seed = seed_of(cfg);
  const double sd = d["noise_sd"];
  if (!(sd >= 0)) throw ConfigError("data.noise_sd must be non-negative");
  LabeledPoints data;
  if (kind == "two-lines") {
    data = gen_two_line_regression(positive_index(d["n"], "data.n"), pair_of(d["slopes"], "data.slopes"),
                                   pair_of(d["intercepts"], "data.intercepts"), pair_of(d["x_range"], "data.x_range"),
                                   sd, seed);
  } else if (kind == "half-moons") {
    data = gen_half_moons(positive_index(d["n"], "data.n"), sd, seed);
  } else if (kind == "piecewise") {
    const auto levels = levels_of(cfg);
    const Index n = positive_index(d["n"], "data.n");
    SignalInstance sig = gen_piecewise_signal(n, levels, sd, seed);
    data.points = sig.noisy;
    std::vector<Index> labels;
    for (std::size_t s = 0; s < levels.size(); ++s) labels.insert(labels.end(), levels[s].first, Index(s));
    data.labels = Partition(labels);
    data.seed = seed;
    if (signal_out) *signal_out = std::move(sig);
  } else {
    const std::string path = d["path"];
    if (path.empty()) throw ConfigError("data.path is required for csv data");
    data = load_csv(path, d["has_labels"].get<bool>());
  }
  if (!d["resample"].is_null()) {
    if (signal_out && signal_out->has_value()) throw ConfigError("data.resample is not supported for piecewise data");
    data = resample(data, positive_index(d["resample"], "data.resample"), seed);
  }
  return data;
}

LossSet<double> make_losses(const json& cfg, LabeledPoints& data, Matrix<double>& geometry) {
  std::string kind = cfg["loss"]["kind"];
  if (kind == "auto") kind = data.responses.size() > 0 ? "ridge-regression" : "squared-distance";
  if (kind == "squared-distance") {
    if (data.responses.size() > 0) {
      Matrix<double> ab(data.points.rows(), 2);
      ab << data.points.col(0), data.responses;
      data.points = ab;
      data.responses.resize(0);
    }
    geometry = data.points;
    return LossSet<double>::squared_distance(data.points);
  }
  if (data.responses.size() == 0) {
    if (data.points.cols() != 2) throw ConfigError("ridge-regression needs responses or two data columns (a, b)");
    data.responses = data.points.col(1);
    data.points = Matrix<double>(data.points.col(0));
  }
  if (data.points.cols() != 1) throw ConfigError("ridge-regression needs scalar inputs");
  const double eps = cfg["loss"]["epsilon"];
  geometry.resize(data.points.rows(), 2);
  geometry << data.points.col(0), data.responses;
  return LossSet<double>::ridge_regression(Vector<double>(data.points.col(0)), data.responses, eps);
}

WeightedGraph<double> reweighted(const WeightedGraph<double>& g, const std::function<double(const Edge&)>& weight) {
  std::vector<Edge> edges;
  std::vector<double> w;
  for (Index k = 0; k < g.num_edges(); ++k) {
    edges.push_back(g.edge(k));
    w.push_back(weight(g.edge(k)));
  }
  return WeightedGraph<double>(g.num_vertices(), std::move(edges), std::move(w));
}

WeightedGraph<double> make_graph(const json& cfg, const Matrix<double>& geometry) {
  const json& gc = cfg["graph"];
  const std::string kind = gc["kind"];
  const bool gaussian = gc["weights"] == "gaussian";
  const double alpha = gc["alpha"];
  if (!(alpha > 0)) throw ConfigError("graph.alpha must be positive");
  const Index n = geometry.rows();
  auto gauss = [&](const Edge& e) { return gaussian_weight(geometry, e.i, e.j, alpha); };
  auto unit = [](const Edge&) { return 1.0; };
  if (kind == "complete") return gaussian ? build_complete_gaussian(geometry, alpha) : build_complete<double>(n);
  if (kind == "knn") {
    const auto g = build_knn_gaussian(geometry, positive_index(gc["k"], "graph.k"), alpha);
    return gaussian ? g : reweighted(g, unit);
  }
  if (kind == "path") {
    const auto g = build_path<double>(n);
    return gaussian ? reweighted(g, gauss) : g;
  }
  const std::string file = gc["file"];
  if (file.empty()) throw ConfigError("graph.file is required for an edge-list graph");
  const auto g = load_edge_list(file, n);
  return gaussian ? reweighted(g, gauss) : g;
}

Problem build_problem(const json& cfg) {
  Problem p;
  p.data = load_data(cfg, &p.signal);
  p.losses = make_losses(cfg, p.data, p.geometry);
  p.graph = make_graph(cfg, p.geometry);
  return p;
}

// ---- solver settings ----

double bound_C(const json& cfg, const LossSet<double>& losses, BoundMethod& method) {
  const json& c = cfg["thresholds"]["C"];
  if (!c.is_null()) {
    method = BoundMethod::supplied;
    if (!(c.get<double>() >= 0)) throw ConfigError("thresholds.C must be non-negative");
    return c;
  }
  if (losses.kind() == LossKind::squared_distance) {
    method = BoundMethod::clustering;
    return bound_C_clustering(losses.points());
  }
  if (losses.is_quadratic()) {
    method = BoundMethod::quadratic;
    return bound_C_quadratic(losses);
  }
  method = BoundMethod::strongly_convex;
  return bound_C_strongly_convex(losses);
}

// 3nC for clustering, gamma* otherwise, both times 1.001.
double exact_penalty_gamma(const json& cfg, const LossSet<double>& losses) {
  BoundMethod method{};
  const double C = bound_C(cfg, losses, method);
  if (losses.kind() == LossKind::squared_distance) return 3.0 * double(losses.num_nodes()) * C * 1.001;
  return exact_penalty_threshold(losses, C, method).gamma_star * 1.001;
}

double resolve_gamma(const json& cfg, const LossSet<double>& losses) {
  if (cfg["solver"]["gamma_preset"] == "exact-penalty") return exact_penalty_gamma(cfg, losses);
  return cfg["solver"]["gamma"];
}

SolverConfig<double> make_solver(const json& cfg, bool ntl, double gamma, Index K, const WeightedGraph<double>& graph) {
  const json& s = cfg["solver"];
  auto c = ntl ? SolverConfig<double>::ntl(gamma, K) : SolverConfig<double>::nl(gamma);
  const std::string schedule = s["rho_schedule"];
  if (!s["rho"].is_null())
    c.rho = s["rho"];
  else if (schedule == "preset")
    c.rho = 1;
  c.x_update = s["x_update"] == "linearized" ? XUpdateMode::linearized : XUpdateMode::exact;
  if (!s["bregman_L"].is_null()) c.bregman_L = s["bregman_L"];
  c.max_iters = static_cast<int>(s["max_iters"].get<std::int64_t>());
  c.eps_abs = s["eps_abs"];
  c.eps_rel = s["eps_rel"];
  c.lyapunov_r = s["lyapunov_r"];
  if (schedule == "preset") {
    c.sigma = sigma_min_DDt(graph);
    c.rho_schedule = rho_schedule_preset(*c.sigma);
  } else if (schedule == "custom") {
    RhoSchedule<double> r;
    r.multiplier = s["multiplier"];
    if (!s["cap"].is_null()) r.cap = s["cap"];
    r.period = static_cast<int>(s["period"].get<std::int64_t>());
    c.rho_schedule = r;
  }
  c.validate();
  return c;
}

void check_K(Index K, const WeightedGraph<double>& graph, const std::string& key) {
  if (K < 0 || K > graph.num_edges())
    throw ConfigError(key + " = " + std::to_string(K) + " must lie in [0, m] with m = " +
                      std::to_string(graph.num_edges()));
}

std::vector<double> gamma_schedule(const json& cfg) {
  const json& p = cfg["path"];
  if (!p["gammas"].is_null()) return p["gammas"].get<std::vector<double>>();
  return geometric_grid(p["gamma_start"], p["gamma_ratio"], static_cast<int>(p["gamma_steps"].get<std::int64_t>()));
}

std::vector<Index> k_schedule(const json& cfg, const WeightedGraph<double>& graph) {
  const json& p = cfg["path"];
  std::vector<Index> ks;
  if (!p["k_sequence"].is_null()) {
    for (const auto& k : p["k_sequence"]) ks.push_back(static_cast<Index>(k.get<std::int64_t>()));
  } else {
    const Index m = graph.num_edges();
    const Index start = p["k_start"].is_null() ? m : static_cast<Index>(p["k_start"].get<std::int64_t>());
    const Index step = p["k_step"].is_null() ? std::max<Index>(1, m / 20) : static_cast<Index>(p["k_step"].get<std::int64_t>());
    const Index stop = static_cast<Index>(p["k_stop"].get<std::int64_t>());
    if (step < 1) throw ConfigError("path.k_step must be positive");
    if (stop > start) throw ConfigError("path.k_stop must not exceed path.k_start");
    for (Index k = start; k > stop; k -= step) ks.push_back(k);
    ks.push_back(stop);
  }
  if (ks.empty()) throw ConfigError("empty K schedule");
  for (std::size_t t = 0; t < ks.size(); ++t) {
    check_K(ks[t], graph, "path K");
    if (t > 0 && ks[t] >= ks[t - 1]) throw ConfigError("path K schedule must strictly decrease");
  }
  return ks;
}

// Starting centroids for the configured init policy; nullopt means per-node minimizers.
std::optional<CentroidMatrix<double>> make_init(const json& cfg, const Problem& p, json& info) {
  const std::string policy = cfg["init"]["policy"];
  info["policy"] = policy;
  if (policy == "per-node-minimizer") return std::nullopt;
  if (policy == "from-file") {
    const std::string file = cfg["init"]["file"];
    if (file.empty()) throw ConfigError("init.file is required for the from-file policy");
    auto x = read_centroids_csv(file);
    if (x.rows() != p.losses->num_nodes() || x.cols() != p.losses->dim())
      throw ConfigError("init.file: expected " + std::to_string(p.losses->num_nodes()) + " x " +
                        std::to_string(p.losses->dim()) + " centroids");
    return x;
  }
  auto nl = SolverConfig<double>::nl(1.0);
  nl.max_iters = static_cast<int>(cfg["solver"]["max_iters"].get<std::int64_t>());
  nl.eps_abs = cfg["solver"]["eps_abs"];
  nl.eps_rel = cfg["solver"]["eps_rel"];
  const auto path = gamma_path(*p.losses, p.graph, gamma_schedule(cfg), nl, std::nullopt,
                               cfg["path"]["warm_start"].get<bool>(), true, cfg["merge_tol"].get<double>());
  std::size_t unmerged = 0;
  for (const auto& s : path.steps) unmerged += s.partition.num_clusters() > 1;
  info["nl_path_steps"] = path.steps.size();
  info["nl_unmerged_steps"] = unmerged;
  return midpoint_init(path);
}

json partition_report(const Partition& part, const std::optional<Partition>& truth) {
  json j = to_json(part);
  if (truth) {
    j["ari"] = json_number(adjusted_rand_index(part, *truth));
    j["relation"] = to_string(partition_relation(part, *truth));
  }
  return j;
}

// ---- commands ----

int cmd_gen_data(const json& cfg, const fs::path& out) {
  std::optional<SignalInstance> signal;
  const LabeledPoints data = load_data(cfg, &signal);
  save_csv((out / "data.csv").string(), data);
  if (signal) save_signal_csv((out / "signal.csv").string(), *signal);
  json summary = {{"n", data.size()}, {"columns", data.points.cols()}, {"has_responses", data.responses.size() > 0},
                  {"has_labels", data.labels.has_value()}};
  if (data.labels) summary["num_clusters"] = data.labels->num_clusters();
  if (signal) summary["jumps"] = signal->jumps;
  write_json(out / "summary.json", summary);
  return 0;
}

int cmd_solve(const json& cfg, const fs::path& out, bool ntl) {
  const Problem p = build_problem(cfg);
  const LossSet<double>& losses = *p.losses;
  const double gamma = resolve_gamma(cfg, losses);
  const Index K = static_cast<Index>(cfg["solver"]["K"].get<std::int64_t>());
  if (ntl) check_K(K, p.graph, "solver.K");
  const auto sc = make_solver(cfg, ntl, gamma, K, p.graph);
  json init_info;
  SolverInit<double> init;
  init.x = make_init(cfg, p, init_info);
  auto res = ntl ? solve_ntl(losses, p.graph, sc, init) : solve_nl(losses, p.graph, sc, init);
  write_stream(out / "trace.csv", [&](std::ostream& os) { write_trace_csv(os, res.state); });
  if (res.reason == StopReason::diverged) throw NumericalError("solver diverged: " + res.message);

  const double merge_tol = cfg["merge_tol"];
  const Partition part = extract_partition(res.state.x, p.graph, merge_tol, &res.state.z);
  write_stream(out / "centroids.csv", [&](std::ostream& os) { write_centroids_csv(os, res.state.x); });
  write_json(out / "partition.json", partition_report(part, p.data.labels));

  const int dirs = static_cast<int>(cfg["stationarity"]["random_directions"].get<std::int64_t>());
  const double tol = cfg["stationarity"]["tolerance"];
  const double zero_tol = merge_tol * (1 + res.state.x.rowwise().norm().maxCoeff());
  json stationarity;
  if (ntl) {
    // The iterate only approaches exact merges; the refit puts merged nodes on identical centroids.
    const CentroidMatrix<double> refit = refit_on_partition(losses, part);
    const DifferenceOperator<double> dr(p.graph, losses.dim());
    stationarity["at_iterate"] =
        to_json(stationarity_check(res.state.x, losses, p.graph, gamma, K, dirs, seed_of(cfg), tol, zero_tol));
    stationarity["at_refit"] = to_json(stationarity_check(refit, losses, p.graph, gamma, K, dirs, seed_of(cfg), tol));
    stationarity["refit_objective"] = json_number(objective(refit, losses, p.graph, sc));
    stationarity["refit_trimmed_norm"] = json_number(trimmed_norm(dr.apply(refit), K));
  } else {
    stationarity["at_iterate"] = to_json(
        stationarity_check_weighted(res.state.x, losses, p.graph, gamma, dirs, seed_of(cfg), tol, zero_tol));
  }
  write_json(out / "stationarity.json", stationarity);

  const DifferenceOperator<double> d(p.graph, losses.dim());
  json summary = {{"task", ntl ? "solve-ntl" : "solve-nl"},
                  {"n", losses.num_nodes()},
                  {"m", p.graph.num_edges()},
                  {"gamma", json_number(gamma)},
                  {"rho_final", json_number(res.state.rho)},
                  {"iterations", res.state.iter},
                  {"stop_reason", to_string(res.reason)},
                  {"objective", json_number(objective(res.state.x, losses, p.graph, sc))},
                  {"num_clusters", part.num_clusters()},
                  {"init", init_info}};
  if (ntl) {
    summary["K"] = K;
    summary["trimmed_norm"] = json_number(trimmed_norm(d.apply(res.state.x), K));
  }
  write_json(out / "summary.json", summary);
  return 0;
}

json path_report(const PathResult<double>& path, const std::optional<Partition>& truth) {
  json j = to_json(path);
  if (truth && !path.steps.empty()) {
    json ari = json::array();
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t t = 0; t < path.steps.size(); ++t) {
      const double a = adjusted_rand_index(path.steps[t].partition, *truth);
      ari.push_back(json_number(a));
      if (a > best) best = a, arg = t;
    }
    j["ari"] = ari;
    j["max_ari"] = json_number(best);
    j["max_ari_step"] = arg;
  }
  return j;
}

int cmd_path(const json& cfg, const fs::path& out, bool over_K) {
  const Problem p = build_problem(cfg);
  const LossSet<double>& losses = *p.losses;
  const double merge_tol = cfg["merge_tol"];
  json init_info;
  const auto init = make_init(cfg, p, init_info);
  PathResult<double> path;
  json summary = {{"task", over_K ? "k-path" : "gamma-path"}, {"n", losses.num_nodes()}, {"m", p.graph.num_edges()}};
  if (over_K) {
    const double gamma = resolve_gamma(cfg, losses);
    const auto ks = k_schedule(cfg, p.graph);
    path = k_path(losses, p.graph, gamma, ks, make_solver(cfg, true, gamma, 0, p.graph), init, merge_tol);
    summary["gamma"] = json_number(gamma);
  } else {
    path = gamma_path(losses, p.graph, gamma_schedule(cfg), make_solver(cfg, false, 1.0, 0, p.graph), init,
                      cfg["path"]["warm_start"].get<bool>(), cfg["path"]["stop_when_merged"].get<bool>(), merge_tol);
  }
  summary["steps"] = path.steps.size();
  summary["init"] = init_info;
  const json report = path_report(path, p.data.labels);
  if (report.contains("max_ari")) summary["max_ari"] = report["max_ari"];
  write_json(out / "path.json", report);
  write_stream(out / "trajectory.csv", [&](std::ostream& os) { write_path_csv(os, path); });
  write_json(out / "summary.json", summary);
  return 0;
}

std::optional<std::vector<double>> alpha_override(const json& cfg) {
  if (cfg["thresholds"]["alpha"].is_null()) return std::nullopt;
  return cfg["thresholds"]["alpha"].get<std::vector<double>>();
}

int cmd_thresholds(const json& cfg, const fs::path& out) {
  const Problem p = build_problem(cfg);
  const LossSet<double>& losses = *p.losses;
  BoundMethod method{};
  const double C = bound_C(cfg, losses, method);
  const auto pen = exact_penalty_threshold(losses, C, method);
  json report = {{"n", losses.num_nodes()}, {"m", p.graph.num_edges()}, {"exact_penalty", to_json(pen)}};
  if (losses.kind() == LossKind::squared_distance) {
    report["3nC"] = json_number(3.0 * double(losses.num_nodes()) * C);
    report["gamma_preset"] = json_number(3.0 * double(losses.num_nodes()) * C * 1.001);
  } else {
    report["gamma_preset"] = json_number(pen.gamma_star * 1.001);
  }
  if (p.data.labels) {
    report["recovery"] = to_json(recovery_interval(losses, p.graph, *p.data.labels, alpha_override(cfg)));
    if (losses.kind() == LossKind::squared_distance)
      report["recovery_clustering"] = to_json(recovery_interval_cc(losses, p.graph, *p.data.labels));
  }
  const auto sc = make_solver(cfg, true, resolve_gamma(cfg, losses), 0, p.graph);
  report["convergence"] = to_json(validate_convergence_params(losses, p.graph, sc));
  write_json(out / "thresholds.json", report);
  return 0;
}

int cmd_recovery_check(const json& cfg, const fs::path& out) {
  const Problem p = build_problem(cfg);
  if (!p.data.labels) throw ConfigError("recovery-check needs labelled data");
  const LossSet<double>& losses = *p.losses;
  const auto rec = recovery_interval(losses, p.graph, *p.data.labels, alpha_override(cfg));
  json report = {{"interval", to_json(rec)}};
  if (!rec.interval_nonempty()) {
    report["checked"] = false;
    report["message"] = rec.premise_ok ? "empty interval" : "premise fails";
    write_json(out / "recovery.json", report);
    return 0;
  }
  const double gamma = std::isinf(rec.gamma_max) ? 2 * rec.gamma_min : 0.5 * (rec.gamma_min + rec.gamma_max);
  const auto sc = make_solver(cfg, false, gamma, 0, p.graph);
  const auto res = solve_nl(losses, p.graph, sc);
  if (res.reason == StopReason::diverged) throw NumericalError("solver diverged: " + res.message);
  const Partition part = extract_partition(res.state.x, p.graph, cfg["merge_tol"].get<double>(), &res.state.z);
  report["checked"] = true;
  report["gamma"] = json_number(gamma);
  report["stop_reason"] = to_string(res.reason);
  report["iterations"] = res.state.iter;
  report["partition"] = partition_report(part, p.data.labels);
  report["recovered"] = part == *p.data.labels;
  write_json(out / "recovery.json", report);
  write_stream(out / "centroids.csv", [&](std::ostream& os) { write_centroids_csv(os, res.state.x); });
  return 0;
}

std::vector<Index> labels_from_csv(const std::string& path) {
  const LabeledPoints d = load_csv(path, true);
  return d.labels->labels();
}

// Partition from a partition JSON or a label CSV; a path JSON yields one per step.
std::vector<Partition> read_partitions(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") return {Partition(labels_from_csv(path))};
  const json j = read_json_file(path);
  try {
    if (j.contains("labels")) return {Partition(j["labels"].get<std::vector<Index>>())};
    if (j.contains("steps")) {
      std::vector<Partition> out;
      for (const auto& s : j["steps"]) out.emplace_back(s["labels"].get<std::vector<Index>>());
      return out;
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ": expected a partition or path document");
}

int cmd_metrics(const json& cfg, const fs::path& out) {
  const std::string est = cfg["metrics"]["estimate"], truth_file = cfg["metrics"]["truth"];
  if (est.empty()) throw ConfigError("metrics.estimate is required");
  Partition truth;
  if (truth_file.empty()) {
    const LabeledPoints data = load_data(cfg);
    if (!data.labels) throw ConfigError("metrics needs metrics.truth or labelled data");
    truth = *data.labels;
  } else {
    const auto t = read_partitions(truth_file);
    if (t.size() != 1) throw ConfigError("metrics.truth must hold a single partition");
    truth = t.front();
  }
  const auto estimates = read_partitions(est);
  json ari = json::array();
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    if (estimates[t].size() != truth.size()) throw ConfigError("metrics: estimate and truth differ in size");
    const double a = adjusted_rand_index(estimates[t], truth);
    ari.push_back(json_number(a));
    if (a > best) best = a, arg = t;
  }
  json report = {{"n", truth.size()}, {"truth_clusters", truth.num_clusters()}, {"ari", ari},
                 {"max_ari", json_number(best)}, {"max_ari_step", arg}};
  if (estimates.size() == 1) report["relation"] = to_string(partition_relation(estimates.front(), truth));
  write_json(out / "metrics.json", report);
  return 0;
}

int cmd_piecewise(const json& cfg, const fs::path& out) {
  if (cfg["data"]["kind"] != "piecewise") throw ConfigError("piecewise needs data.kind = piecewise");
  std::optional<SignalInstance> signal;
  load_data(cfg, &signal);
  const json& pc = cfg["piecewise"];
  PiecewiseSettings s;
  s.K = static_cast<Index>(pc["K"].get<std::int64_t>());
  if (!pc["gamma"].is_null()) s.gamma = pc["gamma"].get<double>();
  s.rho0 = pc["rho0"];
  s.graph_alpha = cfg["graph"]["alpha"];
  s.nl_gammas = geometric_grid(pc["gamma_start"], pc["gamma_ratio"], static_cast<int>(pc["gamma_steps"].get<std::int64_t>()));
  s.max_iters = static_cast<int>(pc["max_iters"].get<std::int64_t>());
  s.eps_abs = cfg["solver"]["eps_abs"];
  s.eps_rel = cfg["solver"]["eps_rel"];
  s.merge_tol = cfg["merge_tol"];
  const auto r = run_piecewise(*signal, s);

  auto nl_pick = [&](std::size_t t) {
    const auto& step = r.nl_path.steps[t];
    return json{{"gamma", json_number(step.parameter)},
                {"error", json_number(r.nl_errors[t])},
                {"jumps", r.nl_jumps[t]},
                {"num_jumps", r.nl_jumps[t].size()}};
  };
  json nl_steps = json::array();
  for (std::size_t t = 0; t < r.nl_path.steps.size(); ++t) nl_steps.push_back(nl_pick(t));
  json report = {{"n", signal->noisy.size()},
                 {"true_jumps", signal->jumps},
                 {"ntl",
                  {{"K", s.K},
                   {"gamma", json_number(r.ntl_gamma)},
                   {"error", json_number(r.ntl_error)},
                   {"jumps", r.ntl_jumps},
                   {"exact_jump_set", r.ntl_jumps == signal->jumps},
                   {"iterations", r.ntl_iterations},
                   {"stop_reason", to_string(r.ntl_reason)}}},
                 {"nl_best_quality", nl_pick(r.best_quality)},
                 {"nl_best_cardinality", r.best_cardinality ? nl_pick(*r.best_cardinality) : json(nullptr)},
                 {"ntl_beats_best_nl", r.ntl_error <= r.nl_errors[r.best_quality]},
                 {"nl_path", nl_steps}};
  write_json(out / "piecewise.json", report);
  save_signal_csv((out / "signal.csv").string(), *signal);
  write_stream(out / "ntl.csv", [&](std::ostream& os) { write_centroids_csv(os, r.ntl_x); });
  write_stream(out / "nl_best_quality.csv",
               [&](std::ostream& os) { write_centroids_csv(os, r.nl_path.steps[r.best_quality].x); });
  if (r.best_cardinality)
    write_stream(out / "nl_best_cardinality.csv",
                 [&](std::ostream& os) { write_centroids_csv(os, r.nl_path.steps[*r.best_cardinality].x); });
  write_stream(out / "nl_path.csv", [&](std::ostream& os) { write_path_csv(os, r.nl_path); });
  return 0;
}

}  // namespace

int run_task(const json& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_json(out_dir / "config.json", cfg);
  const std::string task = cfg["task"];
  if (task == "gen-data") return cmd_gen_data(cfg, out_dir);
  if (task == "solve-nl") return cmd_solve(cfg, out_dir, false);
  if (task == "solve-ntl") return cmd_solve(cfg, out_dir, true);
  if (task == "k-path") return cmd_path(cfg, out_dir, true);
  if (task == "gamma-path") return cmd_path(cfg, out_dir, false);
  if (task == "thresholds") return cmd_thresholds(cfg, out_dir);
  if (task == "recovery-check") return cmd_recovery_check(cfg, out_dir);
  if (task == "metrics") return cmd_metrics(cfg, out_dir);
  if (task == "piecewise") return cmd_piecewise(cfg, out_dir);
  throw ConfigError("unknown task '" + task + "'");
}

}  // namespace netlasso::cli
