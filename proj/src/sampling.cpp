#include "ppx/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ppx/error.hpp"

namespace ppx {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void check_quartiles(const Quartiles& q) {
  if (!(q.q1 > 0.0) || !(q.q1 < q.q2) || !(q.q2 < q.q3) || !std::isfinite(q.q3))
    throw ArgumentError("quartiles must be positive and strictly increasing");
}

template <class Fn>
double weighted_mean(std::span<const double> sample, std::span<const double> weights, Fn&& fn) {
  double total = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    total += w * fn(sample[i]);
    mass += w;
  }
  return total / mass;
}

/// Smallest alpha in [lo, hi] with f(alpha) >= target, for nondecreasing f.
template <class Fn>
double bisect(Fn&& f, double lo, double hi, double target) {
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace

double stepwise_weight(double pp, const Quartiles& q, double alpha) {
  check_quartiles(q);
  if (!(pp > 0.0)) throw ArgumentError("perplexity must be positive");
  if (!(alpha > 0.0)) throw ArgumentError("stepwise alpha must be positive");
  double w;
  if (pp <= q.q1)
    w = alpha / q.q1;
  else if (pp <= q.q2)
    w = alpha / (q.q2 - q.q1);
  else if (pp <= q.q3)
    w = alpha / (q.q3 - q.q2);
  else
    w = alpha / q.q3;
  return std::clamp(w, 0.0, 1.0);
}

double gaussian_weight(double pp, double median, double alpha, double beta) {
  if (!(median > 0.0)) throw ArgumentError("gaussian median must be positive");
  if (!(beta > 0.0)) throw ArgumentError("gaussian beta must be positive");
  if (!(alpha > 0.0) || alpha > 1.0) throw ArgumentError("gaussian alpha must lie in (0, 1]");
  const double z = (pp - median) / median;
  return std::clamp(alpha * std::exp(-(z * z) / beta), 0.0, 1.0);
}

void SamplerSpec::validate() const {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, RandomPolicy>) {
          if (!(p.rate >= 0.0 && p.rate <= 1.0)) throw ArgumentError("random rate must lie in [0, 1]");
        } else if constexpr (std::is_same_v<P, StepwisePolicy>) {
          if (!(p.alpha > 0.0)) throw ArgumentError("stepwise alpha must be positive");
          check_quartiles(p.quartiles);
        } else {
          if (!(p.alpha > 0.0) || p.alpha > 1.0) throw ArgumentError("gaussian alpha must lie in (0, 1]");
          if (!(p.beta > 0.0)) throw ArgumentError("gaussian beta must be positive");
          if (!(p.median > 0.0)) throw ArgumentError("gaussian median must be positive");
        }
      },
      policy);
}

double SamplerSpec::weight(double pp) const {
  return std::visit(
      [pp](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, RandomPolicy>)
          return std::clamp(p.rate, 0.0, 1.0);
        else if constexpr (std::is_same_v<P, StepwisePolicy>)
          return stepwise_weight(pp, p.quartiles, p.alpha);
        else
          return gaussian_weight(pp, p.median, p.alpha, p.beta);
      },
      policy);
}

std::string_view SamplerSpec::variant_name() const {
  switch (policy.index()) {
    case 0: return "random";
    case 1: return "stepwise";
    default: return "gaussian";
  }
}

std::uint64_t hash_doc_id(std::string_view doc_id) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

std::uint64_t keyed_bits(std::uint64_t seed, std::string_view doc_id, RandomStream stream) noexcept {
  const std::uint64_t key = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
  return splitmix64(hash_doc_id(doc_id) ^ key);
}

double keyed_uniform(std::uint64_t seed, std::string_view doc_id, RandomStream stream) noexcept {
  return static_cast<double>(keyed_bits(seed, doc_id, stream) >> 11) * 0x1.0p-53;
}

bool keep_decision(double weight, std::string_view doc_id, std::uint64_t seed) noexcept {
  return keyed_uniform(seed, doc_id, RandomStream::kKeep) < weight;
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "random") return PolicyKind::kRandom;
  if (name == "stepwise") return PolicyKind::kStepwise;
  if (name == "gaussian") return PolicyKind::kGaussian;
  throw ArgumentError("unknown policy '" + std::string(name) + "' (expected random, stepwise or gaussian)");
}

CalibrationResult calibrate(std::span<const double> sample, double target_fraction, PolicyKind policy,
                            const DistributionSummary& summary, double beta, std::span<const double> sample_weights) {
  if (sample.empty()) throw ArgumentError("calibration sample is empty");
  if (!sample_weights.empty() && sample_weights.size() != sample.size())
    throw ArgumentError("calibration weights do not match the sample");
  if (!(target_fraction > 0.0) || target_fraction > 1.0) throw ArgumentError("target fraction must lie in (0, 1]");

  CalibrationResult out;
  constexpr double kTolerance = 1e-9;
  switch (policy) {
    case PolicyKind::kRandom:
      out.spec.policy = RandomPolicy{target_fraction};
      out.expected_fraction = target_fraction;
      break;

    case PolicyKind::kStepwise: {
      const Quartiles q{summary.q1, summary.q2, summary.q3};
      check_quartiles(q);
      auto mean_weight = [&](double alpha) {
        return weighted_mean(sample, sample_weights, [&](double pp) { return stepwise_weight(pp, q, alpha); });
      };
      // At alpha = q3 every branch is clamped to 1.
      const double hi = q.q3;
      const double max_fraction = mean_weight(hi);
      if (target_fraction > max_fraction * (1.0 + kTolerance))
        throw CalibrationError("target fraction unattainable; maximum achievable is " + std::to_string(max_fraction),
                               max_fraction);
      const double alpha = bisect(mean_weight, 0.0, hi, target_fraction);
      out.spec.policy = StepwisePolicy{alpha, q};
      out.expected_fraction = mean_weight(alpha);
      break;
    }

    case PolicyKind::kGaussian: {
      const double median = summary.q2;
      if (!(median > 0.0)) throw ArgumentError("summary median must be positive");
      if (!(beta > 0.0)) throw ArgumentError("gaussian beta must be positive");
      auto mean_weight = [&](double alpha) {
        return weighted_mean(sample, sample_weights,
                             [&](double pp) { return gaussian_weight(pp, median, alpha, beta); });
      };
      const double max_fraction = mean_weight(1.0);
      if (target_fraction > max_fraction * (1.0 + kTolerance))
        throw CalibrationError("target fraction unattainable; maximum achievable is " + std::to_string(max_fraction),
                               max_fraction);
      const double alpha = std::min(1.0, bisect(mean_weight, 0.0, 1.0, target_fraction));
      out.spec.policy = GaussianPolicy{alpha, beta, median};
      out.expected_fraction = mean_weight(alpha);
      break;
    }
  }
  return out;
}

std::vector<double> calibration_points(const DistributionSummary& summary, std::vector<double>& weights) {
  weights.clear();
  if (!summary.sample.empty()) return summary.sample;
  constexpr std::uint64_t kPointsPerBin = 256;
  std::vector<double> points;
  for (const auto& bin : summary.bins) {
    if (bin.n == 0) continue;
    const std::uint64_t m = std::min(bin.n, kPointsPerBin);
    for (std::uint64_t i = 0; i < m; ++i) {
      const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
      points.push_back(bin.hi > bin.lo ? bin.lo * std::pow(bin.hi / bin.lo, t) : bin.lo);
      weights.push_back(static_cast<double>(bin.n) / static_cast<double>(m));
    }
  }
  if (points.empty()) throw DataError("summary has neither a sample nor histogram mass");
  return points;
}

void to_json(nlohmann::json& j, const SamplerSpec& spec) {
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, RandomPolicy>)
          j = {{"variant", "random"}, {"rate", p.rate}};
        else if constexpr (std::is_same_v<P, StepwisePolicy>)
          j = {{"variant", "stepwise"}, {"alpha", p.alpha}, {"q1", p.quartiles.q1}, {"q2", p.quartiles.q2}, {"q3", p.quartiles.q3}};
        else
          j = {{"variant", "gaussian"}, {"alpha", p.alpha}, {"beta", p.beta}, {"median", p.median}};
      },
      spec.policy);
  j["seed"] = spec.seed;
}

void from_json(const nlohmann::json& j, SamplerSpec& spec) {
  try {
    const auto variant = j.at("variant").get<std::string>();
    if (variant == "random") {
      spec.policy = RandomPolicy{j.at("rate").get<double>()};
    } else if (variant == "stepwise") {
      spec.policy = StepwisePolicy{j.at("alpha").get<double>(),
                                   {j.at("q1").get<double>(), j.at("q2").get<double>(), j.at("q3").get<double>()}};
    } else if (variant == "gaussian") {
      spec.policy = GaussianPolicy{j.at("alpha").get<double>(), j.at("beta").get<double>(), j.at("median").get<double>()};
    } else {
      throw DataError("unknown sampler variant '" + variant + "'");
    }
    spec.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid sampler spec: ") + e.what());
  }
  spec.validate();
}

}  // namespace ppx
