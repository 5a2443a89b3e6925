#include "ppx/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "ppx/error.hpp"

namespace ppx {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ArgumentError("quantile of empty data");
  const double rank = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::size_t log_bin_index(double x, double lo, double hi, std::size_t bins) {
  if (bins <= 1 || hi <= lo || x <= lo) return 0;
  if (x >= hi) return bins - 1;
  const double t = std::log(x / lo) / std::log(hi / lo);
  return std::min(bins - 1, static_cast<std::size_t>(t * static_cast<double>(bins)));
}

std::vector<HistogramBin> log_bins(double lo, double hi, std::size_t bins) {
  if (bins == 0) throw ArgumentError("histogram needs at least one bin");
  if (!(lo > 0.0) || hi < lo) throw ArgumentError("invalid histogram range");
  if (hi == lo) return {HistogramBin{lo, hi, 0}};
  std::vector<HistogramBin> out(bins);
  const double ratio = std::log(hi / lo);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i].lo = i == 0 ? lo : lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(bins));
    out[i].hi = i + 1 == bins ? hi : lo * std::exp(ratio * static_cast<double>(i + 1) / static_cast<double>(bins));
  }
  return out;
}

QuantileEstimator::QuantileEstimator(std::size_t max_in_memory, std::uint64_t seed)
    : capacity_(max_in_memory), rng_(seed), cells_(kCellCount, 0) {
  if (capacity_ == 0) throw ArgumentError("max_in_memory must be positive");
}

std::size_t QuantileEstimator::cell_of(double x) {
  const double c = std::floor((std::log10(x) - kMinDecade) * kCellsPerDecade);
  return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(kCellCount - 1)));
}

double QuantileEstimator::cell_center(std::size_t cell) {
  return std::pow(10.0, (static_cast<double>(cell) + 0.5) / kCellsPerDecade + kMinDecade);
}

void QuantileEstimator::add(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ArgumentError("perplexity values must be positive and finite");
  if (count_ == 0) {
    min_ = max_ = x;
  } else {
    min_ = std::min(min_, x);
    max_ = std::max(max_, x);
  }
  ++cells_[cell_of(x)];
  if (reservoir_.size() < capacity_) {
    reservoir_.push_back(x);
  } else {
    std::uniform_int_distribution<std::uint64_t> pick(0, count_);
    const std::uint64_t j = pick(rng_);
    if (j < capacity_) reservoir_[j] = x;
  }
  ++count_;
}

void QuantileEstimator::merge(const QuantileEstimator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    const auto cap = capacity_;
    const auto rng = rng_;
    *this = other;
    capacity_ = cap;
    rng_ = rng;
    if (reservoir_.size() <= capacity_) return;
  } else {
    min_ = std::min(min_, other.min_);
    max_ = std::max(max_, other.max_);
    for (std::size_t c = 0; c < kCellCount; ++c) cells_[c] += other.cells_[c];

    // Weighted sampling without replacement (exponential keys): each kept
    // value stands for count/|reservoir| stream items.
    const double wa = static_cast<double>(count_) / static_cast<double>(reservoir_.size());
    const double wb = static_cast<double>(other.count_) / static_cast<double>(other.reservoir_.size());
    count_ += other.count_;
    if (reservoir_.size() + other.reservoir_.size() <= capacity_ && wa == 1.0 && wb == 1.0) {
      reservoir_.insert(reservoir_.end(), other.reservoir_.begin(), other.reservoir_.end());
      return;
    }
    std::vector<std::pair<double, double>> keyed;
    keyed.reserve(reservoir_.size() + other.reservoir_.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto key = [&](double w) { return std::log(std::max(unit(rng_), 1e-300)) / w; };
    for (double v : reservoir_) keyed.emplace_back(key(wa), v);
    for (double v : other.reservoir_) keyed.emplace_back(key(wb), v);
    reservoir_.clear();
    const std::size_t keep = std::min<std::size_t>(capacity_, keyed.size());
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(keep), keyed.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < keep; ++i) reservoir_.push_back(keyed[i].second);
    return;
  }
  // Adopted a reservoir larger than our capacity: subsample uniformly.
  std::shuffle(reservoir_.begin(), reservoir_.end(), rng_);
  reservoir_.resize(capacity_);
}

DistributionSummary QuantileEstimator::summary(std::size_t bins, bool include_sample) const {
  if (count_ == 0) throw ArgumentError("distribution of an empty stream");
  DistributionSummary s;
  s.count = count_;
  s.min = min_;
  s.max = max_;
  std::vector<double> sorted(reservoir_);
  std::sort(sorted.begin(), sorted.end());
  s.q1 = std::clamp(quantile_sorted(sorted, 0.25), min_, max_);
  s.q2 = std::clamp(quantile_sorted(sorted, 0.50), s.q1, max_);
  s.q3 = std::clamp(quantile_sorted(sorted, 0.75), s.q2, max_);

  s.bins = log_bins(min_, max_, bins);
  if (exact()) {
    for (double v : reservoir_) ++s.bins[log_bin_index(v, min_, max_, s.bins.size())].n;
  } else {
    for (std::size_t c = 0; c < kCellCount; ++c) {
      if (cells_[c] == 0) continue;
      s.bins[log_bin_index(std::clamp(cell_center(c), min_, max_), min_, max_, s.bins.size())].n += cells_[c];
    }
  }
  if (include_sample) s.sample = sorted;
  return s;
}

DistributionSummary estimate_quartiles(std::span<const double> values, std::size_t max_in_memory, std::uint64_t seed) {
  if (values.empty()) throw ArgumentError("cannot estimate quartiles of an empty stream");
  QuantileEstimator est(max_in_memory, seed);
  for (double v : values) est.add(v);
  return est.summary();
}

void to_json(nlohmann::json& j, const DistributionSummary& s) {
  j = nlohmann::json{{"count", s.count}, {"q1", s.q1}, {"q2", s.q2}, {"q3", s.q3}, {"min", s.min}, {"max", s.max}};
  auto bins = nlohmann::json::array();
  for (const auto& b : s.bins) bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"n", b.n}});
  j["bins"] = std::move(bins);
  if (!s.sample.empty()) j["sample"] = s.sample;
}

void from_json(const nlohmann::json& j, DistributionSummary& s) {
  try {
    s.count = j.at("count").get<std::uint64_t>();
    s.q1 = j.at("q1").get<double>();
    s.q2 = j.at("q2").get<double>();
    s.q3 = j.at("q3").get<double>();
    s.min = j.at("min").get<double>();
    s.max = j.at("max").get<double>();
    s.bins.clear();
    for (const auto& b : j.at("bins")) s.bins.push_back({b.at("lo").get<double>(), b.at("hi").get<double>(), b.at("n").get<std::uint64_t>()});
    s.sample.clear();
    if (j.contains("sample")) s.sample = j.at("sample").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid distribution summary: ") + e.what());
  }
}

}  // namespace ppx
