#include <netlasso/datasets.hpp>
#include <netlasso/io.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace netlasso {

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do v = engine_();
  while (v >= limit);
  return v % bound;
}

LabeledPoints gen_two_line_regression(Index n, std::pair<double, double> slopes, std::pair<double, double> intercepts,
                                      std::pair<double, double> x_range, double noise_sd, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("gen_two_line_regression: n must be at least 2");
  if (!(noise_sd >= 0)) throw std::invalid_argument("gen_two_line_regression: noise_sd must be non-negative");
  if (!(x_range.first < x_range.second)) throw std::invalid_argument("gen_two_line_regression: empty x range");
  Rng rng(seed);
  LabeledPoints out;
  out.seed = seed;
  out.points.resize(n, 1);
  out.responses.resize(n);
  const Index first = (n + 1) / 2;
  std::vector<Index> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const bool line0 = i < first;
    const double a = rng.uniform(x_range.first, x_range.second);
    const double slope = line0 ? slopes.first : slopes.second;
    const double intercept = line0 ? intercepts.first : intercepts.second;
    out.points(i, 0) = a;
    out.responses(i) = intercept + slope * a + noise_sd * rng.normal();
    labels[static_cast<std::size_t>(i)] = line0 ? 0 : 1;
  }
  out.labels = Partition(labels);
  return out;
}

LabeledPoints gen_half_moons(Index n, double noise_sd, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("gen_half_moons: n must be at least 2");
  if (!(noise_sd >= 0)) throw std::invalid_argument("gen_half_moons: noise_sd must be non-negative");
  Rng rng(seed);
  const Index n_outer = n / 2, n_inner = n - n_outer;
  auto angle = [](Index t, Index count) {
    return count > 1 ? std::numbers::pi * double(t) / double(count - 1) : 0.0;
  };
  LabeledPoints out;
  out.seed = seed;
  out.points.resize(n, 2);
  std::vector<Index> labels(static_cast<std::size_t>(n));
  for (Index t = 0; t < n_outer; ++t) {
    const double th = angle(t, n_outer);
    out.points(t, 0) = std::cos(th);
    out.points(t, 1) = std::sin(th);
    labels[static_cast<std::size_t>(t)] = 0;
  }
  for (Index t = 0; t < n_inner; ++t) {
    const double th = angle(t, n_inner);
    out.points(n_outer + t, 0) = 1.0 - std::cos(th);
    out.points(n_outer + t, 1) = 0.5 - std::sin(th);
    labels[static_cast<std::size_t>(n_outer + t)] = 1;
  }
  if (noise_sd > 0)
    for (Index i = 0; i < n; ++i)
      for (Index c = 0; c < 2; ++c) out.points(i, c) += noise_sd * rng.normal();
  out.labels = Partition(labels);
  return out;
}

SignalInstance gen_piecewise_signal(Index n, const std::vector<std::pair<Index, double>>& levels, double noise_sd,
                                    std::uint64_t seed) {
  if (!(noise_sd >= 0)) throw std::invalid_argument("gen_piecewise_signal: noise_sd must be non-negative");
  Index total = 0;
  for (const auto& [len, value] : levels) {
    if (len < 1) throw std::invalid_argument("gen_piecewise_signal: segment lengths must be positive");
    total += len;
  }
  if (total != n) throw std::invalid_argument("gen_piecewise_signal: segment lengths must sum to n");
  SignalInstance s;
  s.seed = seed;
  s.noise_sd = noise_sd;
  s.original.resize(n);
  Index pos = 0;
  for (const auto& [len, value] : levels) {
    s.original.segment(pos, len).setConstant(value);
    pos += len;
  }
  for (Index k = 0; k + 1 < n; ++k)
    if (s.original(k) != s.original(k + 1)) s.jumps.push_back(k);
  Rng rng(seed);
  s.noisy = s.original;
  if (noise_sd > 0)
    for (Index i = 0; i < n; ++i) s.noisy(i) += noise_sd * rng.normal();
  return s;
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_row(const std::vector<std::string>& cells, std::vector<double>& out) {
  out.clear();
  for (const auto& c : cells) {
    const auto v = parse_double(c);
    if (!v) return false;
    out.push_back(*v);
  }
  return true;
}

}  // namespace

LabeledPoints load_csv(const std::string& path, bool has_labels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t width = 0, line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto cells = split_row(line);
    if (!parse_row(cells, values)) {
      if (line_no == 1) continue;  // header
      throw std::invalid_argument("load_csv: non-numeric cell on line " + std::to_string(line_no));
    }
    if (width == 0) width = values.size();
    if (values.size() != width) throw std::invalid_argument("load_csv: ragged row on line " + std::to_string(line_no));
    rows.push_back(values);
  }
  if (rows.empty()) throw std::invalid_argument("load_csv: no data rows in " + path);
  const Index cols = static_cast<Index>(width) - (has_labels ? 1 : 0);
  if (cols < 1) throw std::invalid_argument("load_csv: no feature columns");
  LabeledPoints out;
  out.points.resize(static_cast<Index>(rows.size()), cols);
  std::vector<Index> labels;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Index c = 0; c < cols; ++c) out.points(static_cast<Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    if (has_labels) {
      const double lab = rows[r].back();
      if (lab != std::floor(lab)) throw std::invalid_argument("load_csv: label on row " + std::to_string(r + 1) + " is not an integer");
      labels.push_back(static_cast<Index>(lab));
    }
  }
  if (has_labels) out.labels = Partition(labels);
  return out;
}

void save_csv(const std::string& path, const LabeledPoints& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  const Index p = data.points.cols();
  const bool regression = data.responses.size() == data.points.rows();
  for (Index c = 0; c < p; ++c) out << (c ? "," : "") << (regression && p == 1 ? std::string("a") : "x" + std::to_string(c));
  if (regression) out << ",b";
  if (data.labels) out << ",label";
  out << '\n';
  for (Index i = 0; i < data.points.rows(); ++i) {
    for (Index c = 0; c < p; ++c) out << (c ? "," : "") << format_double(data.points(i, c));
    if (regression) out << ',' << format_double(data.responses(i));
    if (data.labels) out << ',' << data.labels->label(i);
    out << '\n';
  }
}

LabeledPoints resample(const LabeledPoints& data, Index count, std::uint64_t seed) {
  const Index n = data.size();
  if (count < 1 || count > n) throw std::invalid_argument("resample: count must lie in [1, n]");
  Rng rng(seed);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (Index t = 0; t < count; ++t) {
    const auto j = t + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - t)));
    std::swap(idx[static_cast<std::size_t>(t)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  LabeledPoints out;
  out.seed = seed;
  out.points.resize(count, data.points.cols());
  if (data.responses.size() == n) out.responses.resize(count);
  std::vector<Index> labels;
  for (Index r = 0; r < count; ++r) {
    const Index i = idx[static_cast<std::size_t>(r)];
    out.points.row(r) = data.points.row(i);
    if (out.responses.size() == count) out.responses(r) = data.responses(i);
    if (data.labels) labels.push_back(data.labels->label(i));
  }
  if (data.labels) out.labels = Partition(labels);
  return out;
}

void save_signal_csv(const std::string& path, const SignalInstance& signal) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_signal_csv: cannot open " + path);
  out << "original,noisy\n";
  for (Index i = 0; i < signal.original.size(); ++i)
    out << format_double(signal.original(i)) << ',' << format_double(signal.noisy(i)) << '\n';
}

}  // namespace netlasso
