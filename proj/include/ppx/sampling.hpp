#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <variant>

#include "json.hpp"
#include "ppx/distribution.hpp"

namespace ppx {

struct Quartiles {
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
};

struct RandomPolicy {
  double rate = 1.0;
};

/// Piecewise-constant keep-probability over the four quartile regions.
struct StepwisePolicy {
  double alpha = 0.0;
  Quartiles quartiles;
};

/// Bell-shaped keep-probability centred on the median.
struct GaussianPolicy {
  double alpha = 1.0;
  double beta = 1.0;
  double median = 1.0;
};

/// Default spread for the Gaussian policy, 9 / (2 ln 10).
inline constexpr double kDefaultGaussianBeta = 9.0 / (2.0 * std::numbers::ln10);

struct SamplerSpec {
  std::variant<RandomPolicy, StepwisePolicy, GaussianPolicy> policy;
  std::uint64_t seed = 0;

  /// Throws ArgumentError when a parameter is out of its domain.
  void validate() const;

  /// Keep-probability in [0, 1] for a document with perplexity `pp`.
  double weight(double pp) const;

  std::string_view variant_name() const;
};

/// alpha/q1, alpha/(q2-q1), alpha/(q3-q2), alpha/q3 on (0,q1], (q1,q2],
/// (q2,q3], (q3,inf), each clamped to [0, 1].
double stepwise_weight(double pp, const Quartiles& quartiles, double alpha);

/// alpha * exp(-((pp - median) / median)^2 / beta).
double gaussian_weight(double pp, double median, double alpha, double beta);

/// Independent random streams derived from one seed.
enum class RandomStream : std::uint64_t {
  kKeep = 0x6b656570,
  kHoldout = 0x686f6c64,
  kSubsample = 0x73756273,
};

/// 64-bit FNV-1a of the id, finalized with a splitmix64 round.
std::uint64_t hash_doc_id(std::string_view doc_id) noexcept;

/// Counter-based draw keyed by (seed, stream, doc id): the same triple
/// always yields the same value regardless of processing order.
std::uint64_t keyed_bits(std::uint64_t seed, std::string_view doc_id, RandomStream stream = RandomStream::kKeep) noexcept;

/// keyed_bits mapped to [0, 1) with 53 bits of precision.
double keyed_uniform(std::uint64_t seed, std::string_view doc_id, RandomStream stream = RandomStream::kKeep) noexcept;

/// Bernoulli(weight) decision; deterministic in (seed, doc_id).
bool keep_decision(double weight, std::string_view doc_id, std::uint64_t seed) noexcept;

enum class PolicyKind { kRandom, kStepwise, kGaussian };

PolicyKind parse_policy_kind(std::string_view name);

struct CalibrationResult {
  SamplerSpec spec;
  /// Mean keep-probability of the calibrated spec over the calibration sample.
  double expected_fraction = 0.0;
};

/// Solves for alpha by bisection on the (weighted) sample mean of the
/// clamped weight so that it equals `target_fraction`. Quartiles and the
/// median come from `summary`; beta is fixed for the Gaussian policy.
/// Throws CalibrationError with the maximum achievable fraction when the
/// target cannot be reached.
CalibrationResult calibrate(std::span<const double> sample, double target_fraction, PolicyKind policy,
                            const DistributionSummary& summary, double beta = kDefaultGaussianBeta,
                            std::span<const double> sample_weights = {});

/// Calibration sample recovered from a summary: the stored sample when
/// present, otherwise log-uniform points inside each histogram bin
/// (`weights` receives the mass each point stands for).
std::vector<double> calibration_points(const DistributionSummary& summary, std::vector<double>& weights);

void to_json(nlohmann::json& j, const SamplerSpec& spec);
void from_json(const nlohmann::json& j, SamplerSpec& spec);

}  // namespace ppx
