#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"

namespace ppx {

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t n = 0;
};

/// Empirical perplexity distribution: exact count/min/max, quartiles and a
/// log-spaced histogram. `sample` optionally carries the values the
/// quartiles were computed from (used later by calibration).
struct DistributionSummary {
  std::uint64_t count = 0;
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<HistogramBin> bins;
  std::vector<double> sample;
};

inline constexpr std::size_t kHistogramBins = 100;
inline constexpr std::size_t kDefaultMaxInMemory = 100'000;

/// Quantile q of sorted data at rank q*(n-1), linearly interpolated.
double quantile_sorted(std::span<const double> sorted, double q);

/// Index of the log-spaced bin holding `x` among `bins` bins over [lo, hi].
std::size_t log_bin_index(double x, double lo, double hi, std::size_t bins);

/// Edges lo*(hi/lo)^(i/bins); a single [lo, lo] bin when lo == hi.
std::vector<HistogramBin> log_bins(double lo, double hi, std::size_t bins);

/// Streaming estimator: exact while the stream fits in `max_in_memory`
/// values, uniform reservoir sample beyond that. Min, max and count are
/// always exact; histogram counts always sum to count.
class QuantileEstimator {
 public:
  explicit QuantileEstimator(std::size_t max_in_memory = kDefaultMaxInMemory, std::uint64_t seed = 0);

  /// Throws ArgumentError unless x is positive and finite.
  void add(double x);

  /// Union of both streams, then re-reservoir down to max_in_memory using
  /// stream-size weights.
  void merge(const QuantileEstimator& other);

  std::uint64_t count() const noexcept { return count_; }
  bool exact() const noexcept { return count_ <= capacity_; }
  std::span<const double> reservoir() const noexcept { return reservoir_; }

  DistributionSummary summary(std::size_t bins = kHistogramBins, bool include_sample = false) const;

 private:
  // Fixed log-spaced counting cells over [1e-4, 1e16). Out-of-range values
  // land in the edge cells. Only used for bins once the reservoir overflows.
  static constexpr int kCellsPerDecade = 2000;
  static constexpr int kMinDecade = -4;
  static constexpr std::size_t kCellCount = 20 * kCellsPerDecade;

  static std::size_t cell_of(double x);
  static double cell_center(std::size_t cell);


  std::size_t capacity_;
  std::mt19937_64 rng_;
  std::vector<double> reservoir_;
  std::vector<std::uint64_t> cells_;
  std::uint64_t count_ = 0;
  double min_ = 0.0;
  double max_ = 0.0;
};

/// Convenience wrapper over QuantileEstimator. Empty input -> ArgumentError.
DistributionSummary estimate_quartiles(std::span<const double> values, std::size_t max_in_memory = kDefaultMaxInMemory,
                                       std::uint64_t seed = 0);

void to_json(nlohmann::json& j, const DistributionSummary& s);
void from_json(const nlohmann::json& j, DistributionSummary& s);

}  // namespace ppx
