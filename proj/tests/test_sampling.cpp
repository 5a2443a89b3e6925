#include <cmath>
#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "ppx/error.hpp"
#include "ppx/sampling.hpp"

using namespace ppx;

TEST_CASE("stepwise branch table") {
  const Quartiles q{2, 3, 4};
  const std::vector<double> pp{1, 2, 2.5, 3, 3.5, 4, 5};
  const std::vector<double> expect{0.2, 0.2, 0.4, 0.4, 0.4, 0.4, 0.1};
  for (std::size_t i = 0; i < pp.size(); ++i) CHECK(stepwise_weight(pp[i], q, 0.4) == expect[i]);
}

TEST_CASE("stepwise alpha at 10% of Q3 keeps 10% of the top quarter") {
  const Quartiles q{120, 200, 350};
  CHECK(stepwise_weight(1000, q, 0.1 * q.q3) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("stepwise clamp and validation") {
  CHECK(stepwise_weight(2.05, {2, 2.1, 4}, 0.4) == 1.0);
  CHECK_THROWS_AS(stepwise_weight(1, {2, 2, 4}, 0.4), ArgumentError);
  CHECK_THROWS_AS(stepwise_weight(1, {3, 2, 4}, 0.4), ArgumentError);
  CHECK_THROWS_AS(stepwise_weight(0, {1, 2, 4}, 0.4), ArgumentError);
}

TEST_CASE("stepwise is constant per region and favours the centre") {
  const Quartiles q{100, 130, 170};
  const double alpha = 0.1 * q.q3;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto region_weight = [&](double lo, double hi) {
    std::set<double> seen;
    for (int i = 0; i < 200; ++i) seen.insert(stepwise_weight(lo + (hi - lo) * (1.0 - u(rng)), q, alpha));
    CHECK(seen.size() == 1);
    return *seen.begin();
  };
  const double w1 = region_weight(1e-9, q.q1), w2 = region_weight(q.q1, q.q2), w3 = region_weight(q.q2, q.q3),
               w4 = region_weight(q.q3, 1e6);
  CHECK(std::min(w2, w3) > std::max(w1, w4));
}

TEST_CASE("gaussian anchors and shape") {
  CHECK(std::abs(gaussian_weight(500, 500, 0.7, 1.3) - 0.7) < 1e-12);
  CHECK(std::abs(gaussian_weight(2 * 500, 500, 1.0, 1.0) - std::exp(-1.0)) < 1e-9);
  CHECK(gaussian_weight(1e12, 500, 1.0, 1.0) >= 0.0);
  CHECK(gaussian_weight(1e12, 500, 1.0, 1.0) < 1e-300);
  double prev = 0.0;
  for (double pp = 10; pp < 500; pp += 10) {
    const double w = gaussian_weight(pp, 500, 0.9, 2.0);
    CHECK(w > prev);
    prev = w;
  }
  prev = gaussian_weight(500, 500, 0.9, 2.0);
  for (double pp = 510; pp < 3000; pp += 10) {
    const double w = gaussian_weight(pp, 500, 0.9, 2.0);
    CHECK(w < prev);
    prev = w;
  }
  CHECK(gaussian_weight(300, 500, 0.9, 2.0) == doctest::Approx(gaussian_weight(700, 500, 0.9, 2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(gaussian_weight(1, 0, 1, 1), ArgumentError);
  CHECK_THROWS_AS(gaussian_weight(1, 1, 1, 0), ArgumentError);
  CHECK_THROWS_AS(gaussian_weight(1, 1, 1.5, 1), ArgumentError);
}

TEST_CASE("default beta falls to 10^-0.5 of alpha at 2.5x the median") {
  CHECK(kDefaultGaussianBeta == doctest::Approx(1.9543).epsilon(1e-4));
  CHECK(gaussian_weight(2.5, 1.0, 1.0, kDefaultGaussianBeta) == doctest::Approx(std::pow(10.0, -0.5)));
}

TEST_CASE("weights stay in [0, 1]") {
  std::mt19937_64 rng(12);
  std::lognormal_distribution<double> dist(5, 2);
  const SamplerSpec specs[] = {{RandomPolicy{0.3}, 1}, {StepwisePolicy{50, {20, 30, 40}}, 1}, {GaussianPolicy{1, 0.1, 30}, 1}};
  for (int i = 0; i < 10'000; ++i) {
    const double pp = dist(rng);
    for (const auto& s : specs) {
      const double w = s.weight(pp);
      CHECK((w >= 0.0 && w <= 1.0));
    }
  }
}

TEST_CASE("keep decisions") {
  for (int i = 0; i < 1000; ++i) {
    const std::string id = "doc:" + std::to_string(i);
    CHECK_FALSE(keep_decision(0.0, id, i));
    CHECK(keep_decision(1.0, id, i));
    CHECK(keep_decision(0.37, id, 99) == keep_decision(0.37, id, 99));
  }
  std::size_t kept = 0;
  const std::size_t n = 1'000'000;
  for (std::size_t i = 0; i < n; ++i) kept += keep_decision(0.5, "doc:" + std::to_string(i), 2024);
  const double sigma = std::sqrt(n * 0.25);
  CHECK(std::abs(static_cast<double>(kept) - n * 0.5) < 3 * sigma);
  CHECK(keyed_uniform(1, "x") != keyed_uniform(2, "x"));
  CHECK(keyed_uniform(1, "x", RandomStream::kKeep) != keyed_uniform(1, "x", RandomStream::kHoldout));
}

TEST_CASE("random calibration is the target itself") {
  DistributionSummary summary;
  const std::vector<double> sample{1, 2, 3};
  const auto r = calibrate(sample, 50.0 / 416.0, PolicyKind::kRandom, summary);
  CHECK(std::get<RandomPolicy>(r.spec.policy).rate == 50.0 / 416.0);
}

TEST_CASE("stepwise calibration matches a Monte-Carlo mean") {
  DistributionSummary summary;
  summary.q1 = 1;
  summary.q2 = 2;
  summary.q3 = 3;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 12.0);
  std::vector<double> sample(200'000);
  for (auto& v : sample) v = u(rng);
  const auto r = calibrate(sample, 0.25, PolicyKind::kStepwise, summary);
  const auto& p = std::get<StepwisePolicy>(r.spec.policy);
  CHECK(std::abs(r.expected_fraction - 0.25) < 0.25 * 1e-3);

  // Independent Monte-Carlo estimate of the mean weight at the solved alpha.
  std::mt19937_64 mc_rng(78);
  double total = 0.0;
  const int draws = 1'000'000;
  for (int i = 0; i < draws; ++i) {
    double x;
    do x = u(mc_rng); while (x <= 0.0);
    total += stepwise_weight(x, p.quartiles, p.alpha);
  }
  CHECK(std::abs(total / draws / 0.25 - 1.0) < 0.005);
}

TEST_CASE("gaussian calibration saturates below 1") {
  DistributionSummary summary;
  summary.q1 = 5;
  summary.q2 = 10;
  summary.q3 = 20;
  const std::vector<double> sample{2, 5, 10, 20, 40};
  try {
    calibrate(sample, 1.0, PolicyKind::kGaussian, summary, 1.0);
    FAIL("expected calibration error");
  } catch (const CalibrationError& e) {
    CHECK(e.max_achievable() < 1.0);
    CHECK(e.max_achievable() > 0.0);
  }
  const auto r = calibrate(sample, 0.2, PolicyKind::kGaussian, summary, 1.0);
  CHECK(r.expected_fraction == doctest::Approx(0.2).epsilon(1e-3));
  CHECK(std::get<GaussianPolicy>(r.spec.policy).median == 10);
  CHECK_THROWS_AS(calibrate({}, 0.2, PolicyKind::kGaussian, summary), ArgumentError);
  CHECK_THROWS_AS(calibrate(sample, 0.0, PolicyKind::kGaussian, summary), ArgumentError);
}

TEST_CASE("calibrated spec reproduces its target on the calibration sample") {
  std::mt19937_64 rng(31);
  std::lognormal_distribution<double> dist(6.0, 0.8);
  std::vector<double> sample(200'000);
  for (auto& v : sample) v = dist(rng);
  const auto summary = estimate_quartiles(sample, sample.size());
  for (auto policy : {PolicyKind::kStepwise, PolicyKind::kGaussian}) {
    const auto r = calibrate(sample, 0.12, policy, summary);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < sample.size(); ++i)
      kept += keep_decision(r.spec.weight(sample[i]), "cal:" + std::to_string(i), 5);
    CHECK(std::abs(static_cast<double>(kept) / sample.size() / 0.12 - 1.0) < 0.01);
  }
}

TEST_CASE("calibration from a histogram-only summary") {
  std::mt19937_64 rng(32);
  std::lognormal_distribution<double> dist(6.0, 0.8);
  std::vector<double> sample(100'000);
  for (auto& v : sample) v = dist(rng);
  const auto summary = estimate_quartiles(sample, sample.size());
  std::vector<double> weights;
  const auto points = calibration_points(summary, weights);
  CHECK(points.size() == weights.size());
  const auto approx = calibrate(points, 0.12, PolicyKind::kStepwise, summary, kDefaultGaussianBeta, weights);
  const auto exact = calibrate(sample, 0.12, PolicyKind::kStepwise, summary);
  CHECK(std::get<StepwisePolicy>(approx.spec.policy).alpha ==
        doctest::Approx(std::get<StepwisePolicy>(exact.spec.policy).alpha).epsilon(0.02));
}

TEST_CASE("sampler spec json") {
  const SamplerSpec specs[] = {{RandomPolicy{0.25}, 7}, {StepwisePolicy{0.4, {2, 3, 4}}, 8}, {GaussianPolicy{0.5, 2, 30}, 9}};
  for (const auto& s : specs) {
    const nlohmann::json j = s;
    CHECK(j.at("variant").get<std::string>() == s.variant_name());
    const auto back = j.get<SamplerSpec>();
    CHECK(back.policy.index() == s.policy.index());
    CHECK(back.seed == s.seed);
    CHECK(back.weight(3.5) == s.weight(3.5));
  }
  CHECK_THROWS_AS(nlohmann::json({{"variant", "nope"}}).get<SamplerSpec>(), DataError);
  CHECK_THROWS_AS(nlohmann::json({{"variant", "random"}, {"rate", 2.0}}).get<SamplerSpec>(), ArgumentError);
}
