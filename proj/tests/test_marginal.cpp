#include <gtest/gtest.h>

#include <cmath>

#include "dosm/marginal.hpp"
#include "support/brute_force.hpp"

using namespace dosm;
using dosm::testing::naive_cdf;
using dosm::testing::naive_negbin_pmf;
using dosm::testing::naive_poisson_pmf;

TEST(MarginalDist, ConstructionValidates) {
  EXPECT_THROW(MarginalDist::poisson(0.0), ArgumentError);
  EXPECT_THROW(MarginalDist::poisson(-1.0), ArgumentError);
  EXPECT_THROW(MarginalDist::negative_binomial(0.0, 0.5), ArgumentError);
  EXPECT_THROW(MarginalDist::negative_binomial(2.0, 1.0), ArgumentError);
  EXPECT_THROW(MarginalDist::geometric(0.0), ArgumentError);
  EXPECT_THROW(MarginalDist::geometric(1.5), ArgumentError);
  EXPECT_THROW(MarginalDist::finite({0.5, 0.4}), ArgumentError);
  EXPECT_THROW(MarginalDist::finite({1.2, -0.2}), ArgumentError);
  EXPECT_NO_THROW(MarginalDist::geometric(1.0));
  EXPECT_NO_THROW(MarginalDist::negative_binomial(2.5, 0.3));
}

TEST(MarginalDist, PoissonAgreesWithNaiveSums) {
  for (double lambda : {0.5, 1.0, 7.0, 30.0}) {
    const auto d = MarginalDist::poisson(lambda);
    for (int x : {0, 1, 5, 20, 40}) {
      EXPECT_NEAR(d.pmf(x), naive_poisson_pmf(lambda, x), 1e-14);
      const double cdf = naive_cdf([&](int k) { return naive_poisson_pmf(lambda, k); }, x);
      EXPECT_NEAR(d.cdf(x), cdf, 1e-13);
      EXPECT_NEAR(d.survival(x), 1.0 - cdf, 1e-13);
    }
  }
}

TEST(MarginalDist, NegBinAgreesWithNaiveSums) {
  for (double size : {2.0, 5.0, 2.5}) {
    for (double prob : {0.05, 0.25, 0.9}) {
      const auto d = MarginalDist::negative_binomial(size, prob);
      for (int x : {0, 1, 10, 60}) {
        EXPECT_NEAR(d.pmf(x), naive_negbin_pmf(size, prob, x), 1e-13);
        const double cdf = naive_cdf([&](int k) { return naive_negbin_pmf(size, prob, k); }, x);
        EXPECT_NEAR(d.cdf(x), cdf, 1e-12);
      }
    }
  }
}

TEST(MarginalDist, GeometricSurvival) {
  const auto d = MarginalDist::geometric(0.5);
  EXPECT_DOUBLE_EQ(d.survival(1), 0.25);
  EXPECT_DOUBLE_EQ(d.survival(-1), 1.0);
  EXPECT_DOUBLE_EQ(d.cdf(-1), 0.0);
  EXPECT_NEAR(d.raw_moment(1), 1.0, 1e-12);
  EXPECT_NEAR(d.raw_moment(2), 3.0, 1e-12);
  const auto degenerate = MarginalDist::geometric(1.0);
  EXPECT_EQ(degenerate.max_support(), 0);
  EXPECT_DOUBLE_EQ(degenerate.survival(0), 0.0);
}

TEST(MarginalDist, PoissonSurvivalAtZero) {
  EXPECT_NEAR(MarginalDist::poisson(1.0).survival(0), 0.6321205588285577, 1e-15);
}

TEST(MarginalDist, QuantileExamples) {
  EXPECT_EQ(MarginalDist::finite({1.0}).quantile(0.5), 0);
  EXPECT_EQ(MarginalDist::poisson(1.0).quantile(0.5), 1);
  EXPECT_EQ(MarginalDist::geometric(0.5).quantile(0.9), 3);
  EXPECT_THROW(MarginalDist::poisson(1.0).quantile(0.0), ArgumentError);
  EXPECT_THROW(MarginalDist::poisson(1.0).quantile(1.0), ArgumentError);
}

TEST(MarginalDist, QuantileBrackets) {
  const std::vector<MarginalDist> laws = {
      MarginalDist::poisson(3.0), MarginalDist::poisson(50.0), MarginalDist::negative_binomial(5.0, 0.15),
      MarginalDist::geometric(0.2), MarginalDist::finite({0.1, 0.0, 0.6, 0.3})};
  for (const auto& d : laws) {
    for (double q : {1e-6, 0.01, 0.3, 0.5, 0.77, 0.99, 0.999999}) {
      const long long x = d.quantile(q);
      EXPECT_GE(d.cdf(x), q - 1e-15) << d.describe() << " q=" << q;
      if (x > 0) {
        EXPECT_LT(d.cdf(x - 1), q) << d.describe() << " q=" << q;
      }
    }
  }
}

TEST(MarginalDist, TailQuantileMatchesQuantileAwayFromOne) {
  const auto d = MarginalDist::poisson(10.0);
  for (double tail : {0.5, 0.1, 1e-3, 1e-8}) EXPECT_EQ(d.tail_quantile(tail), d.quantile(1.0 - tail));
  const auto far = d.tail_quantile(1e-30);
  EXPECT_LE(d.survival(far), 1e-30);
  EXPECT_GT(d.survival(far - 1), 1e-30);
}

TEST(MarginalDist, TailMomentMatchesDirectSum) {
  const auto d = MarginalDist::geometric(0.5);
  double direct = 0.0;
  for (int x = 14; x < 200; ++x) direct += x * std::pow(0.5, x + 1);
  EXPECT_NEAR(d.tail_moment(1, 14), direct, 1e-16);
  EXPECT_NEAR(d.tail_moment(1, 14), 15.0 / 16384.0, 1e-16);
}

TEST(MarginalDist, FiniteTrimsTrailingZeros) {
  const auto d = MarginalDist::finite({0.5, 0.5, 0.0, 0.0});
  EXPECT_EQ(d.max_support(), 1);
  EXPECT_DOUBLE_EQ(d.raw_moment(1), 0.5);
}

TEST(MarginalDist, GeometricTailMomentsInClosedForm) {
  for (double pi : {0.03, 0.5, 0.9}) {
    const auto d = MarginalDist::geometric(pi);
    for (int p = 0; p <= 4; ++p) {
      for (long long from : {0LL, 3LL, 40LL}) {
        long double direct = 0.0L;
        for (long long x = from; x < 20000; ++x) direct += std::pow(static_cast<long double>(x), p) * d.pmf(x);
        EXPECT_NEAR(d.tail_moment(p, from), static_cast<double>(direct), 1e-11 * std::max(1.0L, direct))
            << "pi=" << pi << " p=" << p << " from=" << from;
      }
    }
  }
  EXPECT_NEAR(MarginalDist::geometric(0.25).raw_moment(2), 0.75 * 1.75 / 0.0625, 1e-12);
}
