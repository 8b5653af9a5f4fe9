#pragma once

#include <netlasso/graph.hpp>
#include <netlasso/partition.hpp>
#include <netlasso/path.hpp>
#include <netlasso/solver.hpp>
#include <netlasso/thresholds.hpp>
#include <netlasso/types.hpp>

#include <json.hpp>

#include <optional>
#include <ostream>
#include <string>

namespace netlasso {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Strict parse of a whole cell (surrounding blanks allowed); nullopt on failure.
std::optional<double> parse_double(const std::string& text);

/// JSON number, or the strings "inf" / "-inf" / "nan" for non-finite values.
nlohmann::json json_number(double v);

/// Header x0..x{p-1}, one row per node.
void write_centroids_csv(std::ostream& out, const CentroidMatrix<double>& x);
CentroidMatrix<double> read_centroids_csv(const std::string& path);

/// Columns iter, objective, augmented_lagrangian, primal_residual, x_change, rho.
void write_trace_csv(std::ostream& out, const SolverState<double>& state);

/// Whitespace-separated "i j [w]" lines (w defaults to 1); '#' starts a comment.
WeightedGraph<double> load_edge_list(const std::string& path, Index n);

nlohmann::json to_json(const Partition& p);
nlohmann::json to_json(const RecoveryReport<double>& r);
nlohmann::json to_json(const ClusteringInterval<double>& r);
nlohmann::json to_json(const PenaltyThreshold<double>& t);
nlohmann::json to_json(const ConvergenceReport<double>& r);
nlohmann::json to_json(const StationarityReport<double>& r);
nlohmann::json to_json(const PathResult<double>& path);

/// One row per path step: step, parameter, then x_{i,c} for every node i and
/// coordinate c.
void write_path_csv(std::ostream& out, const PathResult<double>& path);

}  // namespace netlasso
