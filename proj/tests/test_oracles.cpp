// The oracles are checked against hand-derived values before anything else
// leans on them.

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace dpbeta;
using namespace dpbeta::oracle;

TEST(OracleQuadrature, HandValues) {
  const auto u = single(1, 1);
  const auto rising = single(2, 1);
  EXPECT_NEAR(integrate_mixture(u, 0, 1, unit_weight()), 1.0, 1e-12);
  EXPECT_NEAR(functional(Functional::kMean, u), 0.5, 1e-12);
  EXPECT_NEAR(functional(Functional::kMu2, u), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(functional(Functional::kFGT1, u, 0.5), 0.25, 1e-12);
  EXPECT_NEAR(functional(Functional::kFGT2, u, 0.5), 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(functional(Functional::kCdf, rising, 0.5), 0.25, 1e-12);
  EXPECT_NEAR(functional(Functional::kF2, rising, 0.5), 0.0625, 1e-12);
  EXPECT_NEAR(functional(Functional::kHC, rising, 0.5), 0.25, 1e-12);
}

TEST(OracleQuadrature, SingularDensities) {
  // Beta(0.3, 0.4): mean 3/7, and the density integrates to 1 despite
  // singularities at both ends.
  const auto d = single(0.3, 0.4);
  EXPECT_NEAR(integrate_mixture(d, 0, 1, unit_weight()), 1.0, 1e-9);
  EXPECT_NEAR(functional(Functional::kMean, d), 3.0 / 7.0, 1e-9);
  // Beta(0.05, 1) has cdf y^0.05.
  const auto spike = single(0.05, 1);
  EXPECT_NEAR(functional(Functional::kCdf, spike, 1e-6), std::pow(1e-6, 0.05), 1e-9);
}

TEST(OracleSampling, MomentsAndKs) {
  std::mt19937_64 rng(1);
  const auto d = single(2, 5);
  const auto x = sample_mixture(d, 10000, rng);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  EXPECT_NEAR(mean, 2.0 / 7.0, 4 * std::sqrt(10.0 / 49.0 / 8.0 / 10000.0));
  const auto ks = ks_one_sample(x, [](double y) {
    // Binomial form of the Beta(2, 5) cdf.
    const double q = 1.0 - y;
    return 1.0 - std::pow(q, 6) - 6.0 * y * std::pow(q, 5);
  });
  EXPECT_LT(ks.statistic, ks_critical_01(x.size()));
}

TEST(OracleSampling, ZeroWeightNeverPicked) {
  MixtureDraw d;
  d.components = {BetaComponent::from_shapes(50, 1), BetaComponent::from_shapes(1, 50)};
  d.weights = {1.0, 0.0};
  std::mt19937_64 rng(2);
  for (double v : sample_mixture(d, 2000, rng)) ASSERT_GT(v, 0.5);
}

TEST(OracleKs, DetectsWrongDistribution) {
  std::mt19937_64 rng(3);
  const auto x = sample_mixture(single(2, 2), 5000, rng);
  const auto ks = ks_one_sample(x, [](double y) { return y; });
  EXPECT_LT(ks.p_value, 1e-6);
  const auto y = sample_mixture(single(2, 2), 5000, rng);
  EXPECT_GT(ks_two_sample(x, y).p_value, 0.001);
  EXPECT_NEAR(kolmogorov_q(1.6276), 0.01, 1e-4);
}

TEST(OracleDominance, HandPairs) {
  auto f = dominance(single(2, 1), single(1, 2), 20000);
  EXPECT_TRUE(f.fsd);
  EXPECT_TRUE(f.ssd);
  f = dominance(single(1, 2), single(2, 1), 20000);
  EXPECT_FALSE(f.fsd);
  EXPECT_FALSE(f.ssd);
  // Same mean, the concentrated one second-order dominates but not first.
  f = dominance(single(5, 5), single(1, 1), 20000);
  EXPECT_FALSE(f.fsd);
  EXPECT_TRUE(f.ssd);
  f = dominance(single(1, 1), single(5, 5), 20000);
  EXPECT_FALSE(f.fsd);
  EXPECT_FALSE(f.ssd);
  f = dominance(single(3, 4), single(3, 4), 20000);
  EXPECT_TRUE(f.fsd);
  EXPECT_TRUE(f.ssd);
}

TEST(OracleDominance, FirstOrderImpliesSecond) {
  std::mt19937_64 rng(4);
  int fsd = 0;
  for (int i = 0; i < 40; ++i) {
    const auto a = random_mixture(rng, {1, 3});
    const auto b = random_mixture(rng, {1, 3});
    const auto f = dominance(a, b, 5000);
    if (f.fsd) {
      ++fsd;
      EXPECT_TRUE(f.ssd) << "pair " << i;
    }
  }
  RecordProperty("fsd_pairs", fsd);
}
