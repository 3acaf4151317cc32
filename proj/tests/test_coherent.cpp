#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "dosm/coherent.hpp"
#include "support/brute_force.hpp"

using namespace dosm;

namespace {

std::map<std::uint32_t, long long> as_map(const SubsetCoefficients& c) {
  std::map<std::uint32_t, long long> out;
  for (const auto& [k, v] : c) out[k.bits()] = v;
  return out;
}

JointModel fair_bits() {
  ExplicitFinitePmf::Builder b(2);
  b.add({0, 0}, 0.25).add({0, 1}, 0.25).add({1, 0}, 0.25).add({1, 1}, 0.25);
  return JointModel::explicit_pmf(std::move(b).build());
}

SystemStructure two_of_three() { return SystemStructure::k_out_of_n_good(2, 3); }

std::vector<SystemStructure> dual_structures() {
  return {SystemStructure::bridge(), SystemStructure::series(3), SystemStructure::parallel(3), two_of_three()};
}

}  // namespace

TEST(SystemStructure, Validation) {
  EXPECT_THROW(SystemStructure::from_path_sets(3, {Subset::of({0, 1}), Subset::of({0})}), ArgumentError);
  EXPECT_THROW(SystemStructure::from_path_sets(3, {Subset::of({0, 1})}), ArgumentError);
  EXPECT_THROW(SystemStructure::from_path_sets(2, {Subset::of({0, 2})}), ArgumentError);
  EXPECT_THROW(SystemStructure::from_path_sets(2, {}), ArgumentError);
  EXPECT_THROW(SystemStructure::from_path_sets(2, {Subset::full(2)}, std::vector<Subset>{Subset::full(2)}), ArgumentError);
  try {
    SystemStructure::from_path_sets(3, {Subset::of({0, 1})});
    FAIL();
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("component 3"), std::string::npos);
  }
  EXPECT_FALSE(SystemStructure::from_path_sets(2, {Subset::full(2)}).has_cut_sets());
  EXPECT_THROW(beta_coefficients(SystemStructure::from_path_sets(2, {Subset::full(2)})), ArgumentError);
}

TEST(SystemStructure, DerivedCutSets) {
  EXPECT_EQ(derive_cut_sets(5, SystemStructure::bridge().path_sets()), SystemStructure::bridge().cut_sets());
  EXPECT_EQ(derive_cut_sets(3, {Subset::full(3)}), SystemStructure::series(3).cut_sets());
}

TEST(SystemStructure, Lifetime) {
  const auto b = SystemStructure::bridge();
  EXPECT_EQ(b.lifetime(std::vector<long long>{5, 1, 2, 7, 3}), 2);
  EXPECT_EQ(b.lifetime(std::vector<long long>{5, 4, 2, 7, 3}), 4);
  const auto cuts_only = SystemStructure::from_cut_sets(5, b.cut_sets());
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<long long> u(0, 9);
  for (int t = 0; t < 500; ++t) {
    std::vector<long long> x(5);
    for (auto& v : x) v = u(rng);
    EXPECT_EQ(b.lifetime(x), cuts_only.lifetime(x));
  }
}

TEST(AlphaCoefficients, SeriesAndParallel) {
  EXPECT_EQ(as_map(alpha_coefficients(SystemStructure::series(4))), (std::map<std::uint32_t, long long>{{0b1111, 1}}));
  EXPECT_EQ(as_map(alpha_coefficients(SystemStructure::parallel(2))),
            (std::map<std::uint32_t, long long>{{0b01, 1}, {0b10, 1}, {0b11, -1}}));
}

TEST(AlphaCoefficients, Bridge) {
  const auto alpha = as_map(alpha_coefficients(SystemStructure::bridge()));
  std::map<std::uint32_t, long long> expected = {
      {Subset::of({0, 1}).bits(), 1}, {Subset::of({2, 3}).bits(), 1}, {Subset::of({0, 2, 4}).bits(), 1},
      {Subset::of({1, 3, 4}).bits(), 1}, {Subset::full(5).bits(), 2}};
  for (int drop = 0; drop < 5; ++drop) expected[Subset::full(5).minus(Subset::of({drop})).bits()] = -1;
  EXPECT_EQ(alpha, expected);
}

TEST(AlphaCoefficients, CapacityCap) {
  std::vector<Subset> paths;
  for_each_subset_of_size(7, 3, [&](Subset s) { paths.push_back(s); });
  ASSERT_GT(paths.size(), 25u);
  const auto s = SystemStructure::from_path_sets(7, paths);
  EXPECT_THROW(alpha_coefficients(s), CapacityError);
}

TEST(BetaCoefficients, Examples) {
  EXPECT_EQ(as_map(beta_coefficients(SystemStructure::parallel(2))), (std::map<std::uint32_t, long long>{{0b11, 1}}));
  EXPECT_EQ(as_map(beta_coefficients(SystemStructure::series(2))),
            (std::map<std::uint32_t, long long>{{0b01, 1}, {0b10, 1}, {0b11, -1}}));
  long long total = 0;
  for (const auto& [k, c] : beta_coefficients(SystemStructure::bridge())) total += c;
  EXPECT_EQ(total, 1);
}

TEST(Signatures, Examples) {
  EXPECT_EQ(minimal_signature(SystemStructure::bridge()), (std::vector<long long>{0, 2, 2, -5, 2}));
  EXPECT_EQ(minimal_signature(SystemStructure::series(3)), (std::vector<long long>{0, 0, 1}));
  EXPECT_EQ(minimal_signature(SystemStructure::parallel(2)), (std::vector<long long>{2, -1}));
  EXPECT_EQ(minimal_signature(two_of_three()), (std::vector<long long>{0, 3, -2}));
  for (const auto& s : dual_structures()) {
    long long a = 0, b = 0;
    for (long long v : minimal_signature(s)) a += v;
    for (long long v : maximal_signature(s)) b += v;
    EXPECT_EQ(a, 1);
    EXPECT_EQ(b, 1);
  }
}

TEST(Signatures, Samaniego) {
  const auto bridge = signature_from_samaniego(std::vector<double>{0.0, 0.2, 0.6, 0.2, 0.0});
  EXPECT_EQ(integral_signature(bridge), (std::vector<long long>{0, 2, 2, -5, 2}));
  const auto series = signature_from_samaniego(std::vector<double>{1.0, 0.0, 0.0});
  EXPECT_EQ(integral_signature(series), (std::vector<long long>{0, 0, 1}));
  EXPECT_THROW(signature_from_samaniego(std::vector<double>{0.5, 0.6}), ArgumentError);
  EXPECT_THROW(signature_from_samaniego(std::vector<double>{1.5, -0.5}), ArgumentError);
}

TEST(Signatures, SamaniegoMatchesKOutOfN) {
  for (int n = 1; n <= 6; ++n) {
    for (int k = 1; k <= n; ++k) {
      std::vector<double> s(n, 0.0);
      s[n - k] = 1.0;  // lifetime X_{n-k+1:n}
      EXPECT_EQ(integral_signature(signature_from_samaniego(s)), minimal_signature(SystemStructure::k_out_of_n_good(k, n)))
          << k << "-out-of-" << n;
    }
  }
}

TEST(SystemSurvival, Examples) {
  const auto bits = fair_bits();
  EXPECT_DOUBLE_EQ(system_survival(bits, SystemStructure::parallel(2), 0), 0.75);
  const auto model = JointModel::iid(MarginalDist::poisson(2.0), 3);
  for (long long m = 0; m < 5; ++m) {
    EXPECT_NEAR(system_survival(model, SystemStructure::series(3), m), model.rect_prob({}, Subset::full(3), m), 1e-15);
  }
}

TEST(SystemSurvival, DualExpansionsAgree) {
  std::mt19937_64 rng(13);
  for (const auto& s : dual_structures()) {
    const int n = s.n();
    std::vector<MarginalDist> marginals;
    for (int i = 0; i < n; ++i) marginals.push_back(MarginalDist::finite(dosm::testing::random_pmf(rng, 4)));
    std::vector<JointModel> models = {JointModel::independent(marginals)};
    std::vector<ShockParam> shocks;
    std::uniform_real_distribution<double> u(0.6, 0.95);
    for (std::uint32_t b = 1; b < (1u << n); ++b) shocks.push_back({Subset(b), u(rng)});
    models.push_back(JointModel::mvg(MvgParams::general(n, shocks)));
    for (const auto& model : models) {
      for (long long m = 0; m < 6; ++m) {
        EXPECT_NEAR(system_survival(model, s, m, Expansion::alpha), system_survival(model, s, m, Expansion::beta), 1e-10);
      }
    }
  }
}

TEST(SystemMomentExact, Examples) {
  EXPECT_DOUBLE_EQ(system_moment_exact(fair_bits(), SystemStructure::series(2), 1).value, 0.25);
  std::mt19937_64 rng(31);
  std::vector<std::vector<double>> pmfs;
  std::vector<MarginalDist> marginals;
  for (int i = 0; i < 5; ++i) {
    pmfs.push_back(dosm::testing::random_pmf(rng, 4));
    marginals.push_back(MarginalDist::finite(pmfs.back()));
  }
  const auto model = JointModel::independent(marginals);
  const auto bridge = SystemStructure::bridge();
  for (int p = 1; p <= 2; ++p) {
    double expected = 0.0;
    dosm::testing::for_each_product_point(pmfs, [&](const std::vector<int>& x, double prob) {
      const std::vector<long long> xl(x.begin(), x.end());
      expected += std::pow(static_cast<double>(bridge.lifetime(xl)), p) * prob;
    });
    EXPECT_NEAR(system_moment_exact(model, bridge, p).value, expected, 1e-12);
  }
  EXPECT_THROW(system_moment_exact(JointModel::iid(MarginalDist::poisson(1.0), 5), bridge, 1), UnsupportedModelError);
}

TEST(SystemMomentExact, KOutOfNFailedIsOrderStatistic) {
  const auto model = JointModel::explicit_pmf(multinomial_pmf(6, std::vector<double>{0.1, 0.2, 0.3, 0.4}));
  for (int k = 1; k <= 4; ++k) {
    for (int p = 1; p <= 2; ++p) {
      EXPECT_NEAR(system_moment_exact(model, SystemStructure::k_out_of_n_failed(k, 4), p).value,
                  exact_moment_finite(model, {k, 4, p}).value, 1e-12);
    }
  }
}

TEST(SystemMomentApprox, BridgePoissonRows) {
  const auto bridge = SystemStructure::bridge();
  const auto unit = JointModel::iid(MarginalDist::poisson(1.0), 5);
  const auto res = system_moment_approx(unit, bridge, 1, 0.0005);
  EXPECT_NEAR(res.value, 0.877, 0.0005);
  EXPECT_EQ(res.M0_used, 6);
  std::vector<MarginalDist> row5;
  for (double l : {20.0, 50.0, 10.0, 20.0, 10.0}) row5.push_back(MarginalDist::poisson(l));
  const auto second = system_moment_approx(JointModel::independent(row5), bridge, 2, 0.0005);
  EXPECT_NEAR(second.value, 422.855, 0.0005);
  EXPECT_EQ(second.M0_used, 95);
  const auto loose = system_moment_approx(unit, bridge, 2, 1e9);
  EXPECT_EQ(loose.M0_used, 0);
  EXPECT_NEAR(loose.value, system_survival(unit, bridge, 0), 1e-15);
}

TEST(SystemMomentApprox, BetaFormCertifies) {
  const auto bridge = SystemStructure::bridge();
  const auto model = JointModel::iid(MarginalDist::poisson(3.0), 5);
  const auto alpha = system_moment_approx(model, bridge, 2, 1e-4);
  const auto beta = system_moment_approx_beta(model, bridge, 2, 1e-4);
  EXPECT_GE(*beta.M0_used, *alpha.M0_used);
  const double reference = system_moment_truncated(model, bridge, 2, 4 * *beta.M0_used, 0.0).value;
  for (const auto& r : {alpha, beta}) {
    EXPECT_GE(reference - r.value, -1e-12);
    EXPECT_LE(reference - r.value, 1e-4);
  }
}

TEST(SystemMomentMvg, BridgeIndependent) {
  const auto p = MvgParams::general(5, {{Subset::of({0}), 0.9}, {Subset::of({1}), 0.9}, {Subset::of({2}), 0.8},
                                        {Subset::of({3}), 0.8}, {Subset::of({4}), 0.8}});
  const auto mv = system_mean_var_mvg(p, SystemStructure::bridge());
  EXPECT_NEAR(mv.mean, 5.237, 0.0005);
  EXPECT_NEAR(mv.variance, 20.001, 0.0005);
}

TEST(SystemMomentMvg, BridgeCommonShocks) {
  const auto p = MvgParams::general(5, {{Subset::of({0}), 0.9}, {Subset::of({2}), 0.8}, {Subset::of({0, 3, 4}), 0.99},
                                        {Subset::of({1, 2, 4}), 0.99}});
  const auto mv = system_mean_var_mvg(p, SystemStructure::bridge());
  EXPECT_NEAR(mv.mean, 49.251, 0.0005);
  EXPECT_NEAR(mv.variance, 2474.938, 0.0005);
}

TEST(SystemMomentMvg, IidGeometricBridge) {
  const auto p = MvgParams::exchangeable(5, {0.5});
  EXPECT_NEAR(system_moment_mvg(p, SystemStructure::bridge(), 1), 0.6835637480798769, 1e-14);
  const auto general = MvgParams::general(5, p.expanded_shocks());
  EXPECT_NEAR(system_moment_mvg(general, SystemStructure::bridge(), 1), 0.6835637480798769, 1e-14);
}

TEST(SystemMomentMvg, DefectiveMinimumRejected) {
  const auto p = MvgParams::general(2, {{Subset::of({0}), 0.5}, {Subset::of({1}), 0.5}});
  EXPECT_NO_THROW(system_moment_mvg(p, SystemStructure::parallel(2), 1));
  EXPECT_THROW(system_moment_mvg(MvgParams::general(3, {{Subset::full(3), 0.5}}), SystemStructure::series(2), 1),
               ArgumentError);
}

TEST(SystemMomentFromMinMoments, Compositions) {
  const auto bridge = SystemStructure::bridge();
  const auto p = MvgParams::general(5, {{Subset::of({0}), 0.7}, {Subset::of({1}), 0.9}, {Subset::of({2}), 0.8},
                                        {Subset::of({3}), 0.85}, {Subset::of({4}), 0.8}, {Subset::of({1, 2}), 0.95}});
  const double via_provider = system_moment_from_min_moments(
      [&](Subset k) { return geometric_factorial_moment(mvg_min_param(p, k), 2); }, bridge);
  EXPECT_NEAR(via_provider, system_moment_mvg(p, bridge, 2), 1e-12);
  const auto series = SystemStructure::series(3);
  EXPECT_DOUBLE_EQ(system_moment_from_min_moments([](Subset k) { return k.size() == 3 ? 7.0 : 0.0; }, series), 7.0);
  EXPECT_THROW(system_moment_from_min_moments([](Subset) { return INFINITY; }, series), NumericError);
}

TEST(SystemMomentFromMinMoments, FiniteSupportProviders) {
  std::mt19937_64 rng(41);
  std::vector<MarginalDist> marginals;
  for (int i = 0; i < 4; ++i) marginals.push_back(MarginalDist::finite(dosm::testing::random_pmf(rng, 5)));
  const auto model = JointModel::independent(marginals);
  const std::vector<SystemStructure> systems = {
      SystemStructure::from_path_sets(4, {Subset::of({0, 1}), Subset::of({2, 3})}),
      SystemStructure::from_path_sets(4, {Subset::of({0}), Subset::of({1, 2}), Subset::of({1, 3})}),
      SystemStructure::k_out_of_n_good(3, 4)};
  for (const auto& s : systems) {
    const auto cuts = derive_cut_sets(4, s.path_sets());
    const auto both = SystemStructure::from_path_sets(4, s.path_sets(), cuts);
    for (int p = 1; p <= 2; ++p) {
      const double exact = system_moment_exact(model, s, p).value;
      auto min_moment = [&](Subset k) {
        double v = 0.0;
        for (long long m = 0; m < 5; ++m) v += power_increment(m, p) * model.rect_prob({}, k, m);
        return v;
      };
      auto max_moment = [&](Subset k) {
        double v = 0.0;
        for (long long m = 0; m < 5; ++m) v += power_increment(m, p) * (1.0 - model.rect_prob(k, {}, m));
        return v;
      };
      EXPECT_NEAR(system_moment_from_min_moments(min_moment, s), exact, 1e-9);
      EXPECT_NEAR(system_moment_from_max_moments(max_moment, both), exact, 1e-9);
    }
  }
}

TEST(ExchangeableSystemMoment, Examples) {
  ExplicitFinitePmf::Builder b(2);
  b.add({0, 0}, 0.25).add({0, 1}, 0.25).add({1, 0}, 0.25).add({1, 1}, 0.25);
  const auto bits = JointModel::explicit_pmf(std::move(b).build(), true);
  EXPECT_DOUBLE_EQ(exchangeable_system_moment(bits, std::vector<long long>{2, -1}, 1, 0.0).value, 0.75);
  const auto pois = JointModel::iid(MarginalDist::poisson(1.0), 5);
  const auto res = exchangeable_system_moment(pois, std::vector<long long>{0, 2, 2, -5, 2}, 1, 0.0005);
  EXPECT_NEAR(res.value, 0.877, 0.0005);
  EXPECT_EQ(res.M0_used, 6);
  const auto direct = system_moment_approx(pois, SystemStructure::bridge(), 1, 0.0005);
  EXPECT_NEAR(res.value, direct.value, 1e-12);
  const auto beta = exchangeable_system_moment(pois, maximal_signature(SystemStructure::bridge()), 1, 0.0005, true);
  EXPECT_NEAR(beta.value, direct.value, 0.0005);
  EXPECT_THROW(exchangeable_system_moment(fair_bits(), std::vector<long long>{2, -1}, 1, 0.0), ArgumentError);
}

TEST(ExchangeableSystemMoment, KOutOfNFromSamaniego) {
  for (int n = 2; n <= 6; ++n) {
    const auto model = JointModel::iid(MarginalDist::finite({0.3, 0.25, 0.25, 0.2}), n);
    for (int k = 1; k <= n; ++k) {
      std::vector<double> s(n, 0.0);
      s[n - k] = 1.0;
      const auto alpha = *integral_signature(signature_from_samaniego(s));
      EXPECT_NEAR(exchangeable_system_moment(model, alpha, 1, 0.0).value,
                  exact_moment_finite(model, {n - k + 1, n, 1}).value, 1e-12);
    }
  }
}
