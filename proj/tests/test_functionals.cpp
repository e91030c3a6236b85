#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dpbeta/functionals.hpp"
#include "oracles.hpp"

using namespace dpbeta;
using oracle::single;

namespace {

MixtureDraw pair_draw(BetaComponent a, BetaComponent b, double wa = 0.5) {
  MixtureDraw d;
  d.components = {a, b};
  d.weights = {wa, 1.0 - wa};
  return d;
}

const auto kUniform = single(1, 1);
const auto kRising = single(2, 1);

}  // namespace

TEST(MixturePdf, Examples) {
  EXPECT_NEAR(mixture_pdf(0.37, kUniform), 1.0, 1e-13);
  const auto d = pair_draw(BetaComponent::from_shapes(2, 2), BetaComponent::from_shapes(1, 1));
  EXPECT_NEAR(mixture_pdf(0.5, d), 1.25, 1e-13);
  EXPECT_THROW(mixture_pdf(0.0, d), DomainError);
  EXPECT_THROW(mixture_pdf(1.0, d), DomainError);
}

TEST(PredictiveDensity, AveragesDraws) {
  const auto two = single(2, 1);  // density 2y, so 1.0 at y = 0.5
  const std::vector<MixtureDraw> one = {two};
  EXPECT_NEAR(predictive_density(0.5, one), mixture_pdf(0.5, two), 0.0);
  const std::vector<MixtureDraw> pair = {two, single(3, 1)};  // 1.0 and 0.75
  EXPECT_NEAR(predictive_density(0.5, pair), 0.875, 1e-13);
  EXPECT_THROW(predictive_density(0.5, std::vector<MixtureDraw>{}), DomainError);
}

TEST(PredictiveDensity, IntegratesToOne) {
  std::mt19937_64 rng(1);
  std::vector<MixtureDraw> draws;
  for (int i = 0; i < 5; ++i) draws.push_back(oracle::random_mixture(rng));
  double total = 0.0;
  for (const auto& d : draws) {
    total += oracle::integrate_mixture(d, 0.0, 1.0, oracle::unit_weight());
  }
  EXPECT_NEAR(total / 5.0, 1.0, 1e-9);
  // The production average at a point matches the per-draw mean.
  double manual = 0.0;
  for (const auto& d : draws) manual += mixture_pdf(0.3, d);
  EXPECT_NEAR(predictive_density(0.3, draws), manual / 5.0, 1e-12);
}

TEST(Moments, Examples) {
  EXPECT_NEAR(mixture_mean(single(2, 3)), 0.4, 1e-13);
  EXPECT_NEAR(mixture_mean(pair_draw(BetaComponent(0.5, 2), BetaComponent(0.25, 4))), 0.375,
              1e-13);
  EXPECT_NEAR(mixture_second_moment(kUniform), 1.0 / 3.0, 1e-13);
  EXPECT_NEAR(mixture_second_moment(kRising), 0.5, 1e-13);
}

TEST(MixtureCdf, Examples) {
  EXPECT_NEAR(mixture_cdf(0.5, kUniform), 0.5, 1e-13);
  const auto sym = pair_draw(BetaComponent::from_shapes(2, 1), BetaComponent::from_shapes(1, 2));
  EXPECT_NEAR(mixture_cdf(0.5, sym), 0.5, 1e-13);
  EXPECT_EQ(mixture_cdf(0.0, sym), 0.0);
  EXPECT_EQ(mixture_cdf(1.0, sym), 1.0);
}

TEST(MomentCdfs, Examples) {
  EXPECT_NEAR(first_moment_cdf(0.5, kUniform), 0.25, 1e-13);
  EXPECT_NEAR(second_moment_cdf(0.5, kUniform), 0.125, 1e-13);
  EXPECT_NEAR(second_moment_cdf(0.5, kRising), 0.0625, 1e-13);
  // Single component: the first moment cdf is the shape-shifted cdf.
  const auto c = BetaComponent::from_shapes(2.5, 4.0);
  const MixtureDraw d = single(2.5, 4.0);
  for (double y : {0.1, 0.4, 0.8}) {
    EXPECT_NEAR(first_moment_cdf(y, d), beta_cdf(y, c.alpha() + 1, c.beta()), 1e-13);
  }
  const auto sym = pair_draw(BetaComponent::from_shapes(2, 1), BetaComponent::from_shapes(1, 2));
  EXPECT_NEAR(first_moment_cdf(0.5, sym), oracle::functional(oracle::Functional::kF1, sym, 0.5),
              1e-8);
}

TEST(Poverty, AnalyticValues) {
  EXPECT_NEAR(headcount(0.5, kUniform), 0.5, 1e-13);
  EXPECT_NEAR(fgt1(0.5, kUniform), 0.25, 1e-13);
  EXPECT_NEAR(fgt2(0.5, kUniform), 1.0 / 6.0, 1e-13);
  EXPECT_NEAR(headcount(0.5, kRising), 0.25, 1e-13);
  EXPECT_NEAR(fgt1(0.5, kRising), 1.0 / 12.0, 1e-13);
  EXPECT_NEAR(fgt2(0.5, kRising), 1.0 / 24.0, 1e-13);
  EXPECT_THROW(headcount(0.0, kUniform), DomainError);
  EXPECT_THROW(fgt1(1.0, kUniform), DomainError);
}

TEST(Functionals, AgreeWithQuadratureOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.001, 0.999);
  using oracle::Functional;
  for (int i = 0; i < 20; ++i) {
    const auto d = oracle::random_mixture(rng, {3, 3});
    EXPECT_NEAR(mixture_mean(d), oracle::functional(Functional::kMean, d), 1e-8);
    EXPECT_NEAR(mixture_second_moment(d), oracle::functional(Functional::kMu2, d), 1e-8);
    for (int j = 0; j < 5; ++j) {
      const double y = unit(rng);
      EXPECT_NEAR(mixture_cdf(y, d), oracle::functional(Functional::kCdf, d, y), 1e-8);
      EXPECT_NEAR(first_moment_cdf(y, d), oracle::functional(Functional::kF1, d, y), 1e-8);
      EXPECT_NEAR(second_moment_cdf(y, d), oracle::functional(Functional::kF2, d, y), 1e-8);
      EXPECT_NEAR(fgt1(y, d), oracle::functional(Functional::kFGT1, d, y), 1e-8);
      EXPECT_NEAR(fgt2(y, d), oracle::functional(Functional::kFGT2, d, y), 1e-8);
      // mu F1(y) is the partial first moment.
      EXPECT_NEAR(mixture_mean(d) * first_moment_cdf(y, d),
                  oracle::integrate_mixture(d, 0, y, oracle::power_weight(1)), 1e-8);
    }
  }
}

TEST(Functionals, IntegrationByPartsIdentity) {
  // y F(y) - mu F1(y) equals the integral of F over [0, y], computed as
  // int_0^y (y - t) p(t) dt.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.001, 0.999);
  for (int i = 0; i < 50; ++i) {
    const auto d = oracle::random_mixture(rng);
    const double y = unit(rng);
    const double lhs = y * mixture_cdf(y, d) - mixture_mean(d) * first_moment_cdf(y, d);
    const double rhs = y * oracle::integrate_mixture(d, 0, y, oracle::shortfall_weight(y, 1));
    EXPECT_NEAR(lhs, rhs, 1e-7);
  }
}

TEST(Functionals, OrderingAndMonotonicity) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const auto d = oracle::random_mixture(rng, {1, 6, 0.01, 0.99, 0.05, 500});
    const double z = std::clamp(unit(rng), 1e-6, 1 - 1e-6);
    const double hc = headcount(z, d), f1 = fgt1(z, d), f2 = fgt2(z, d);
    ASSERT_GE(hc, 0.0);
    ASSERT_LE(hc, 1.0);
    ASSERT_LE(f1, hc);
    ASSERT_LE(f2, f1);
    ASSERT_GE(f2, 0.0);
    double prev[3] = {0, 0, 0};
    for (int h = 0; h <= 100; ++h) {
      const double y = h / 100.0;
      const double cur[3] = {mixture_cdf(y, d), first_moment_cdf(y, d), second_moment_cdf(y, d)};
      for (int q = 0; q < 3; ++q) {
        ASSERT_GE(cur[q], prev[q]);
        prev[q] = cur[q];
      }
    }
    EXPECT_NEAR(mixture_cdf(1.0, d), 1.0, 1e-10);
    EXPECT_NEAR(first_moment_cdf(1.0, d), 1.0, 1e-10);
    EXPECT_NEAR(second_moment_cdf(1.0, d), 1.0, 1e-10);
  }
}

TEST(Summarize, Examples) {
  const std::vector<MixtureDraw> two = {single(0.7 * 10, 0.3 * 10), single(0.8 * 10, 0.2 * 10)};
  const auto s = summarize(two, 0.5);
  EXPECT_NEAR(s.mu.mean, 0.75, 1e-13);
  ASSERT_TRUE(s.mu.sd.has_value());
  EXPECT_NEAR(*s.mu.sd, std::sqrt(0.005), 1e-13);
  EXPECT_EQ(s.draws, 2u);

  const std::vector<MixtureDraw> same(4, single(2, 3));
  const auto t = summarize(same, 0.5);
  EXPECT_EQ(*t.headcount.sd, 0.0);
  EXPECT_EQ(*t.fgt2.sd, 0.0);

  const auto one = summarize(std::vector<MixtureDraw>{kUniform}, 0.5);
  EXPECT_FALSE(one.mu.sd.has_value());
  EXPECT_NEAR(one.fgt2.mean, 1.0 / 6.0, 1e-13);
}

TEST(Summarize, PermutationInvariant) {
  std::mt19937_64 rng(5);
  std::vector<MixtureDraw> draws;
  for (int i = 0; i < 50; ++i) draws.push_back(oracle::random_mixture(rng));
  const auto a = summarize(draws, 0.4);
  std::shuffle(draws.begin(), draws.end(), rng);
  const auto b = summarize(draws, 0.4);
  EXPECT_EQ(a.mu.mean, b.mu.mean);
  EXPECT_EQ(*a.mu.sd, *b.mu.sd);
  EXPECT_EQ(a.fgt1.mean, b.fgt1.mean);
  EXPECT_EQ(*a.fgt2.sd, *b.fgt2.sd);
}

TEST(Functionals, ResidualComponentIsIncluded) {
  MixtureDraw d = pair_draw(BetaComponent::from_shapes(2, 1), BetaComponent::from_shapes(1, 1), 0.9);
  EXPECT_NEAR(mixture_mean(d), 0.9 * 2.0 / 3.0 + 0.1 * 0.5, 1e-13);
  EXPECT_NEAR(headcount(0.5, d), 0.9 * 0.25 + 0.1 * 0.5, 1e-13);
}
