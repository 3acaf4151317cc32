#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dosm/orderstat.hpp"
#include "support/brute_force.hpp"

using namespace dosm;

namespace {

JointModel fair_bits() {
  ExplicitFinitePmf::Builder b(2);
  b.add({0, 0}, 0.25).add({0, 1}, 0.25).add({1, 0}, 0.25).add({1, 1}, 0.25);
  return JointModel::explicit_pmf(std::move(b).build());
}

std::vector<double> ones(int n, double v) { return std::vector<double>(n, v); }

}  // namespace

TEST(SurvivalOrderstat, FairBits) {
  const auto m = fair_bits();
  EXPECT_DOUBLE_EQ(survival_orderstat(m, 1, 2, 0), 0.25);
  EXPECT_DOUBLE_EQ(survival_orderstat(m, 2, 2, 0), 0.75);
  EXPECT_DOUBLE_EQ(survival_orderstat(m, 2, 2, -1), 1.0);
  EXPECT_THROW(survival_orderstat(m, 3, 2, 0), ArgumentError);
  EXPECT_THROW(survival_orderstat(m, 0, 2, 0), ArgumentError);
}

TEST(SurvivalOrderstat, IidGeometricMinimum) {
  const double pi = 0.3;
  const auto iid = JointModel::iid(MarginalDist::geometric(pi), 10);
  const auto plain = JointModel::independent(std::vector<MarginalDist>(10, MarginalDist::geometric(pi)));
  for (long long m = 0; m < 5; ++m) {
    const double expected = std::pow(1.0 - pi, 10.0 * (m + 1));
    EXPECT_NEAR(survival_orderstat(iid, 1, 10, m), expected, 1e-15);
    EXPECT_NEAR(survival_orderstat(plain, 1, 10, m), expected, 1e-15);
  }
  EXPECT_NEAR(survival_orderstat(iid, 1, 10, 2), 2.2539340290692216e-05, 1e-18);
}

TEST(SurvivalOrderstat, FormsAgreeAndExchangeableShortcutMatches) {
  const auto iid = JointModel::iid(MarginalDist::poisson(2.0), 6);
  const auto plain = JointModel::independent(std::vector<MarginalDist>(6, MarginalDist::poisson(2.0)));
  for (int r = 1; r <= 6; ++r) {
    for (long long m = 0; m < 6; ++m) {
      const double lower = survival_orderstat(plain, r, 6, m, SurvivalForm::lower);
      EXPECT_NEAR(lower, survival_orderstat(plain, r, 6, m, SurvivalForm::upper), 1e-13);
      EXPECT_NEAR(lower, survival_orderstat(iid, r, 6, m), 1e-13);
    }
  }
}

TEST(ExactMoment, SmallExamples) {
  const auto bits = fair_bits();
  EXPECT_DOUBLE_EQ(exact_moment_finite(bits, {2, 2, 1}).value, 0.75);
  EXPECT_DOUBLE_EQ(exact_moment_finite(bits, {1, 2, 1}).value, 0.25);
  const auto single = JointModel::independent({MarginalDist::finite({0.2, 0.5, 0.3})});
  EXPECT_NEAR(exact_moment_finite(single, {1, 1, 1}).value, 1.1, 1e-15);
  EXPECT_NEAR(exact_moment_finite(single, {1, 1, 2}).value, 0.5 + 1.2, 1e-15);
  const auto res = exact_moment_finite(single, {1, 1, 3});
  EXPECT_TRUE(res.exact);
  EXPECT_FALSE(res.M0_used.has_value());
  EXPECT_FALSE(res.error_bound.has_value());
}

TEST(ExactMoment, MatchesEnumerationOnProductModel) {
  std::mt19937_64 rng(21);
  std::vector<std::vector<double>> pmfs;
  std::vector<MarginalDist> marginals;
  for (int i = 0; i < 4; ++i) {
    pmfs.push_back(dosm::testing::random_pmf(rng, 3 + i));
    marginals.push_back(MarginalDist::finite(pmfs.back()));
  }
  const auto model = JointModel::independent(marginals);
  for (int r = 1; r <= 4; ++r) {
    for (int p = 1; p <= 3; ++p) {
      double expected = 0.0;
      dosm::testing::for_each_product_point(pmfs, [&](const std::vector<int>& x, double prob) {
        expected += std::pow(dosm::testing::kth_smallest(x, r), p) * prob;
      });
      EXPECT_NEAR(exact_moment_finite(model, {r, 4, p}).value, expected, 1e-12) << "r=" << r << " p=" << p;
    }
  }
}

TEST(ExactMoment, SmallMultinomialMatchesEnumeration) {
  const std::vector<double> cells = {0.1, 0.2, 0.3, 0.4};
  const auto pmf = multinomial_pmf(7, cells);
  double expected = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    const auto pt = pmf.point(k);
    expected += dosm::testing::kth_smallest(std::vector<int>(pt.begin(), pt.end()), 2) * pmf.prob(k);
  }
  const auto model = JointModel::explicit_pmf(multinomial_pmf(7, cells));
  EXPECT_NEAR(exact_moment_finite(model, {2, 4, 1}).value, expected, 1e-13);
}

TEST(ExactMoment, RejectsInfiniteSupport) {
  const auto model = JointModel::iid(MarginalDist::poisson(1.0), 3);
  EXPECT_THROW(exact_moment_finite(model, {1, 3, 1}), UnsupportedModelError);
  EXPECT_THROW(exact_moment_finite(fair_bits(), {1, 3, 1}), ArgumentError);
}

TEST(ApproxMoment, PoissonRows) {
  const auto model = JointModel::iid(MarginalDist::poisson(1.0), 10);
  const auto min = approx_moment(model, {1, 10, 1, 0.0005}, {6, 0, 0.0});
  EXPECT_NEAR(min.value, 0.010, 0.0005);
  EXPECT_FALSE(min.exact);
  EXPECT_EQ(min.M0_used, 6);
  EXPECT_EQ(min.error_bound, 0.0005);
  EXPECT_NEAR(approx_moment(model, {10, 10, 2, 0.0005}, {10, 0, 0.0}).value, 8.319, 0.0005);
  EXPECT_DOUBLE_EQ(approx_moment(model, {3, 10, 2, 0.1}, {-1, 0, 0.0}).value, 0.0);
}

TEST(PlanPoisson, Examples) {
  EXPECT_EQ(plan_poisson(ones(10, 1.0), {1, 10, 1, 0.0005}).M0, 6);
  std::vector<double> rising(10);
  for (int i = 0; i < 10; ++i) rising[i] = i + 1;
  const auto plan = plan_poisson(rising, {10, 10, 2, 0.0005});
  EXPECT_EQ(plan.M0, 34);
  EXPECT_EQ(plan.j0, 9);
  EXPECT_EQ(plan_poisson(ones(10, 1.0), {1, 10, 2, 1e6}).M0, 0);
  EXPECT_THROW(plan_poisson(ones(10, 0.0), {1, 10, 1, 0.0005}), ArgumentError);
  EXPECT_THROW(plan_poisson(ones(10, 1.0), {1, 10, 1, 0.0}), ArgumentError);
}

TEST(PlanPoisson, TiesPickSmallestIndex) {
  EXPECT_EQ(plan_poisson(std::vector<double>{2.0, 5.0, 5.0, 1.0}, {1, 4, 1, 0.001}).j0, 1);
}

TEST(PlanNegBin, TabulatedAndCertifiedRules) {
  EXPECT_EQ(plan_negbin(2.0, ones(10, 0.25), {1, 10, 1, 0.0005}, NegBinPlanRule::tabulated).M0, 41);
  EXPECT_EQ(plan_negbin(2.0, ones(10, 0.25), {1, 10, 1, 0.0005}, NegBinPlanRule::certified).M0, 48);
  std::vector<double> ps(10);
  for (int i = 0; i < 10; ++i) ps[i] = 0.1 * (i + 1) - 0.05;
  const auto plan = plan_negbin(5.0, ps, {10, 10, 2, 0.0005}, NegBinPlanRule::tabulated);
  EXPECT_EQ(plan.M0, 695);
  EXPECT_EQ(plan.j0, 0);
  EXPECT_EQ(plan_negbin(2.0, ones(10, 0.25), {1, 10, 1, 1e9}).M0, -1);
  EXPECT_THROW(plan_negbin(0.0, ones(10, 0.25), {1, 10, 1, 0.0005}), ArgumentError);
  EXPECT_THROW(plan_negbin(2.0, ones(10, 1.0), {1, 10, 1, 0.0005}), ArgumentError);
}

TEST(PlanGeneric, GeometricTailSearch) {
  const auto geo = MarginalDist::geometric(0.5);
  auto tail = [&](long long m) { return geo.tail_moment(1, m + 2); };
  const auto plan = plan_generic(tail, {1, 1, 1, 0.001}, 0);
  EXPECT_EQ(plan.M0, 12);
  const auto model = JointModel::iid(geo, 1);
  EXPECT_NEAR(approx_moment(model, {1, 1, 1, 0.001}, plan).value, 1.0, 0.001);
}

TEST(PlanGeneric, FiniteSupportStopsBeforeTop) {
  const auto atom = MarginalDist::finite({0.0, 0.0, 0.0, 0.0, 0.0, 1.0});
  auto tail = [&](long long m) { return atom.tail_moment(2, m + 2); };
  EXPECT_LE(plan_generic(tail, {1, 3, 2, 1e-9}, 0).M0, 4);
}

TEST(PlanGeneric, NonConvergentTailReported) {
  auto stuck = [](long long) { return 1.0; };
  EXPECT_THROW(plan_generic(stuck, {1, 2, 1, 0.01}, 0), NumericError);
}

TEST(PlanGeneric, PoissonSearchCertifiesToo) {
  const auto model = JointModel::iid(MarginalDist::poisson(3.0), 5);
  const MomentRequest req{2, 5, 2, 1e-4};
  const auto pois = MarginalDist::poisson(3.0);
  const auto generic = plan_generic([&](long long m) { return pois.tail_moment(2, m + 2); }, req, 0);
  const auto closed = plan_poisson(ones(5, 3.0), req);
  const double reference = approx_moment(model, req, {4 * std::max(generic.M0, closed.M0), 0, 0.0}).value;
  for (const auto& plan : {generic, closed}) {
    const double gap = reference - approx_moment(model, req, plan).value;
    EXPECT_GE(gap, 0.0);
    EXPECT_LE(gap, req.d);
  }
}

TEST(PlanForModel, DispatchesOnMarginals) {
  const MomentRequest req{1, 10, 1, 0.0005};
  EXPECT_EQ(plan_for_model(JointModel::iid(MarginalDist::poisson(1.0), 10), req).M0, 6);
  EXPECT_EQ(plan_for_model(JointModel::iid(MarginalDist::negative_binomial(2.0, 0.25), 10), req,
                           NegBinPlanRule::tabulated).M0, 41);
  const auto geo = plan_for_model(JointModel::independent({MarginalDist::geometric(0.5), MarginalDist::geometric(0.2)}),
                                  {1, 2, 1, 0.001});
  EXPECT_EQ(geo.j0, 1);
  const auto mixed = JointModel::independent({MarginalDist::poisson(2.0), MarginalDist::geometric(0.4)});
  const MomentRequest mreq{2, 2, 1, 1e-5};
  const auto res = orderstat_moment(mixed, mreq);
  const double reference = approx_moment(mixed, mreq, {4 * *res.M0_used, 0, 0.0}).value;
  EXPECT_GE(reference - res.value, 0.0);
  EXPECT_LE(reference - res.value, mreq.d);
}
