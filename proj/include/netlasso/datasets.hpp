#pragma once

#include <netlasso/partition.hpp>
#include <netlasso/types.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace netlasso {

/// Seeded 64-bit Mersenne Twister with distribution code of our own, so that
/// draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal by the Box-Muller transform.
  double normal();
  /// Uniform integer in [0, bound), bound > 0, without modulo bias.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct LabeledPoints {
  Matrix<double> points;            // n x p; for regression data the column of inputs a_i
  Vector<double> responses;         // b_i for regression data, empty otherwise
  std::optional<Partition> labels;  // true clusters when known
  std::uint64_t seed = 0;

  Index size() const { return points.rows(); }
};

struct SignalInstance {
  Vector<double> original;
  Vector<double> noisy;
  double noise_sd = 0;
  std::vector<Index> jumps;  // edge index k where original(k) != original(k + 1)
  std::uint64_t seed = 0;
};

/// Two latent regression lines b = intercept + slope a + noise with a uniform
/// on x_range. Line 0 receives ceil(n/2) samples, line 1 floor(n/2).
LabeledPoints gen_two_line_regression(Index n, std::pair<double, double> slopes, std::pair<double, double> intercepts,
                                      std::pair<double, double> x_range, double noise_sd, std::uint64_t seed);

/// Two interleaved half circles of radius 1: the upper arc centred at the
/// origin (label 0, floor(n/2) points) and the lower arc centred at (1, 0.5)
/// (label 1), both sampled at evenly spaced angles, plus Gaussian jitter.
LabeledPoints gen_half_moons(Index n, double noise_sd, std::uint64_t seed);

/// Constant segments given as (length, value), plus i.i.d. N(0, noise_sd^2).
SignalInstance gen_piecewise_signal(Index n, const std::vector<std::pair<Index, double>>& levels, double noise_sd,
                                    std::uint64_t seed);

/// Reads a rectangular numeric CSV. A first row that does not parse as numbers
/// is taken as a header. With `has_labels`, the last column holds integer labels.
LabeledPoints load_csv(const std::string& path, bool has_labels);

/// Writes points (and labels as a final column when present) with a header.
void save_csv(const std::string& path, const LabeledPoints& data);

/// Draws `count` distinct rows (kept in their original order).
LabeledPoints resample(const LabeledPoints& data, Index count, std::uint64_t seed);

/// Two-column CSV: original,noisy.
void save_signal_csv(const std::string& path, const SignalInstance& signal);

}  // namespace netlasso
