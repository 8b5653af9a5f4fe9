#pragma once

#include "config.hpp"

#include <netlasso/netlasso.hpp>

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace netlasso::cli {

/// Runs config["task"], writing artifacts under `out_dir`. Returns the exit code
/// for a successful run; failures surface as exceptions (see main).
int run_task(const nlohmann::json& config, const std::filesystem::path& out_dir);

struct PiecewiseSettings {
  Index K = 5;
  std::optional<double> gamma;  // NTL gamma; 3n max|xhat| 1.001 when unset
  double rho0 = 1;
  double graph_alpha = 0.5;
  std::vector<double> nl_gammas;
  int max_iters = 5000;
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  double merge_tol = 1e-6;
};

struct PiecewiseOutcome {
  double ntl_gamma = 0;
  CentroidMatrix<double> ntl_x;
  std::vector<Index> ntl_jumps;
  double ntl_error = 0;
  StopReason ntl_reason = StopReason::max_iterations;
  int ntl_iterations = 0;
  PathResult<double> nl_path;
  std::vector<double> nl_errors;
  std::vector<std::vector<Index>> nl_jumps;
  std::size_t best_quality = 0;
  std::optional<std::size_t> best_cardinality;  // smallest gamma with at most K jumps
};

/// Geometric grid start * ratio^(t-1), t = 1..steps.
std::vector<double> geometric_grid(double start, double ratio, int steps);

/// Edges k = {k, k+1} of a path whose endpoints fall in different clusters.
std::vector<Index> jump_set(const Partition& part);

/// NTL with K jumps against the NL gamma grid on a noisy piecewise-constant signal.
PiecewiseOutcome run_piecewise(const SignalInstance& signal, const PiecewiseSettings& settings);

/// Six segments of near-equal length covering n samples.
std::vector<std::pair<Index, double>> default_levels(Index n);

}  // namespace netlasso::cli
