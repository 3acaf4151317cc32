#pragma once

// Coherent systems given by minimal path and/or cut sets.
//
// With path sets P_1..P_s the lifetime is T = max_j min_{i in P_j} X_i and
//   P(T > m) = sum_K alpha_K P(X_i > m, i in K),
// with integer coefficients alpha_K from inclusion-exclusion over unions of
// path sets. Cut sets give the dual expansion with beta_K and maxima.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dosm/error.hpp"
#include "dosm/joint_model.hpp"
#include "dosm/mvg.hpp"
#include "dosm/numeric.hpp"
#include "dosm/orderstat.hpp"
#include "dosm/subset.hpp"

namespace dosm {

inline constexpr int kMaxInclusionExclusionSets = 25;

/// (subset, integer coefficient) pairs in increasing subset order; zero
/// coefficients are never stored.
using SubsetCoefficients = std::vector<std::pair<Subset, long long>>;

namespace detail {

inline void validate_set_family(int n, const std::vector<Subset>& sets, const char* what) {
  const Subset all = Subset::full(n);
  for (const auto& s : sets) {
    detail::require(!s.empty(), std::string(what) + " must be non-empty");
    detail::require(all.contains(s), std::string(what) + " " + s.label() + " refers to a component beyond n=" + std::to_string(n));
  }
  for (std::size_t a = 0; a < sets.size(); ++a) {
    for (std::size_t b = 0; b < sets.size(); ++b) {
      if (a == b) continue;
      if (sets[a].contains(sets[b])) {
        throw ArgumentError(std::string(what) + " are not an antichain: " + sets[b].label() + " is contained in " +
                            sets[a].label());
      }
    }
  }
  Subset covered;
  for (const auto& s : sets) covered = covered | s;
  if (covered != all) {
    const int missing = all.minus(covered).indices().front();
    throw ArgumentError("component " + std::to_string(missing + 1) + " is irrelevant: it appears in no " + what);
  }
}

inline SubsetCoefficients inclusion_exclusion(const std::vector<Subset>& sets, const char* what) {
  const int s = static_cast<int>(sets.size());
  if (s > kMaxInclusionExclusionSets) {
    throw CapacityError(std::string("inclusion-exclusion over ") + std::to_string(s) + " " + what + " exceeds the cap of " +
                        std::to_string(kMaxInclusionExclusionSets));
  }
  std::unordered_map<std::uint32_t, long long> acc;
  // Depth-first over collections; `count` is the collection size so far.
  auto recurse = [&](auto&& self, int next, Subset uni, int count) -> void {
    for (int j = next; j < s; ++j) {
      const Subset u = uni | sets[j];
      acc[u.bits()] += (count % 2 == 0) ? 1 : -1;
      self(self, j + 1, u, count + 1);
    }
  };
  recurse(recurse, 0, Subset{}, 0);
  SubsetCoefficients out;
  for (const auto& [bits, c] : acc) {
    if (c != 0) out.emplace_back(Subset(bits), c);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace detail

/// Minimal cut sets of the system with the given minimal path sets: the
/// minimal subsets meeting every path set. Brute force over 2^n.
inline std::vector<Subset> derive_cut_sets(int n, const std::vector<Subset>& path_sets) {
  require_mask_capacity(n, "deriving cut sets");
  std::vector<std::uint32_t> masks(std::size_t{1} << n);
  for (std::uint32_t b = 0; b < masks.size(); ++b) masks[b] = b;
  std::stable_sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) < std::popcount(b); });
  std::vector<Subset> cuts;
  for (std::uint32_t b : masks) {
    const Subset c(b);
    const bool blocks = std::all_of(path_sets.begin(), path_sets.end(), [&](Subset p) { return p.intersects(c); });
    if (!blocks) continue;
    const bool minimal = std::none_of(cuts.begin(), cuts.end(), [&](Subset k) { return c.contains(k); });
    if (minimal) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  return cuts;
}

class SystemStructure {
 public:
  /// Path sets required; cut sets optional and, when given, checked against
  /// the path sets for n <= 20.
  static SystemStructure from_path_sets(int n, std::vector<Subset> path_sets,
                                        std::optional<std::vector<Subset>> cut_sets = std::nullopt) {
    check_n(n);
    detail::require(!path_sets.empty(), "a system needs at least one minimal path set");
    detail::validate_set_family(n, path_sets, "path sets");
    SystemStructure s;
    s.n_ = n;
    std::sort(path_sets.begin(), path_sets.end());
    s.path_sets_ = std::move(path_sets);
    if (cut_sets) {
      detail::validate_set_family(n, *cut_sets, "cut sets");
      std::sort(cut_sets->begin(), cut_sets->end());
      if (n <= kMaxMaskComponents && derive_cut_sets(n, s.path_sets_) != *cut_sets) {
        throw ArgumentError("cut sets are not the minimal cut sets of the given path sets");
      }
      s.cut_sets_ = std::move(cut_sets);
    }
    return s;
  }

  static SystemStructure from_cut_sets(int n, std::vector<Subset> cut_sets) {
    check_n(n);
    detail::require(!cut_sets.empty(), "a system needs at least one minimal cut set");
    detail::validate_set_family(n, cut_sets, "cut sets");
    SystemStructure s;
    s.n_ = n;
    std::sort(cut_sets.begin(), cut_sets.end());
    s.cut_sets_ = std::move(cut_sets);
    return s;
  }

  int n() const { return n_; }
  bool has_path_sets() const { return !path_sets_.empty(); }
  bool has_cut_sets() const { return cut_sets_.has_value(); }
  const std::vector<Subset>& path_sets() const {
    detail::require(has_path_sets(), "structure was given by cut sets only");
    return path_sets_;
  }
  const std::vector<Subset>& cut_sets() const {
    detail::require(has_cut_sets(), "structure has no cut sets; supply them or use derive_cut_sets");
    return *cut_sets_;
  }

  /// System lifetime for component lifetimes x.
  long long lifetime(std::span<const long long> x) const {
    detail::require(static_cast<int>(x.size()) == n_, "lifetime vector length must equal n");
    if (has_path_sets()) {
      long long best = std::numeric_limits<long long>::min();
      for (const auto& p : path_sets_) {
        long long mn = std::numeric_limits<long long>::max();
        for (int i : p.indices()) mn = std::min(mn, x[i]);
        best = std::max(best, mn);
      }
      return best;
    }
    long long worst = std::numeric_limits<long long>::max();
    for (const auto& c : *cut_sets_) {
      long long mx = std::numeric_limits<long long>::min();
      for (int i : c.indices()) mx = std::max(mx, x[i]);
      worst = std::min(worst, mx);
    }
    return worst;
  }

  static SystemStructure series(int n) {
    std::vector<Subset> cuts;
    for (int i = 0; i < n; ++i) cuts.push_back(Subset::of({i}));
    return from_path_sets(n, {Subset::full(n)}, std::move(cuts));
  }
  static SystemStructure parallel(int n) {
    std::vector<Subset> paths;
    for (int i = 0; i < n; ++i) paths.push_back(Subset::of({i}));
    return from_path_sets(n, std::move(paths), std::vector<Subset>{Subset::full(n)});
  }
  /// Works while at least k of n components work.
  static SystemStructure k_out_of_n_good(int k, int n) {
    detail::require(k >= 1 && k <= n, "k-out-of-n needs 1 <= k <= n");
    std::vector<Subset> paths, cuts;
    for_each_subset_of_size(n, k, [&](Subset s) { paths.push_back(s); });
    for_each_subset_of_size(n, n - k + 1, [&](Subset s) { cuts.push_back(s); });
    return from_path_sets(n, std::move(paths), std::move(cuts));
  }
  /// Fails once k of n components have failed; lifetime X_{k:n}.
  static SystemStructure k_out_of_n_failed(int k, int n) {
    detail::require(k >= 1 && k <= n, "k-out-of-n needs 1 <= k <= n");
    return k_out_of_n_good(n - k + 1, n);
  }
  /// Five-component bridge: paths {1,2},{3,4},{1,3,5},{2,4,5}.
  static SystemStructure bridge() {
    return from_path_sets(5, {Subset::of({0, 1}), Subset::of({2, 3}), Subset::of({0, 2, 4}), Subset::of({1, 3, 4})},
                          std::vector<Subset>{Subset::of({0, 3}), Subset::of({1, 2}), Subset::of({0, 2, 4}),
                                              Subset::of({1, 3, 4})});
  }

 private:
  static void check_n(int n) {
    detail::require(n >= 1, "a system needs at least one component");
    if (n > 32) throw CapacityError("systems support at most 32 components");
  }

  int n_ = 0;
  std::vector<Subset> path_sets_;
  std::optional<std::vector<Subset>> cut_sets_;
};

inline SubsetCoefficients alpha_coefficients(const SystemStructure& s) {
  return detail::inclusion_exclusion(s.path_sets(), "path sets");
}

inline SubsetCoefficients beta_coefficients(const SystemStructure& s) {
  return detail::inclusion_exclusion(s.cut_sets(), "cut sets");
}

/// Aggregate subset coefficients by subset size: entry i-1 sums |K| = i.
inline std::vector<long long> aggregate_by_size(const SubsetCoefficients& coeffs, int n) {
  std::vector<long long> out(n, 0);
  for (const auto& [k, c] : coeffs) out[k.size() - 1] += c;
  return out;
}

inline std::vector<long long> minimal_signature(const SystemStructure& s) {
  return aggregate_by_size(alpha_coefficients(s), s.n());
}

inline std::vector<long long> maximal_signature(const SystemStructure& s) {
  return aggregate_by_size(beta_coefficients(s), s.n());
}

/// Minimal signature from a Samaniego signature (s_1..s_n):
/// alpha_i = C(n,i) sum_{r=n-i+1}^{n} s_r (-1)^{r-1-n+i} C(i-1, n-r).
/// Meaningful for exchangeable component lifetimes.
inline std::vector<double> signature_from_samaniego(std::span<const double> s) {
  const int n = static_cast<int>(s.size());
  detail::require(n >= 1, "Samaniego signature must be non-empty");
  CompensatedSum total;
  for (double v : s) {
    detail::require(std::isfinite(v) && v >= -1e-12, "Samaniego signature entries must be non-negative");
    total += v;
  }
  detail::require(std::abs(total.value() - 1.0) <= 1e-9, "Samaniego signature must sum to 1");
  std::vector<double> alpha(n);
  for (int i = 1; i <= n; ++i) {
    CompensatedSum acc;
    for (int r = n - i + 1; r <= n; ++r) {
      const double sign = ((r - 1 - n + i) % 2 == 0) ? 1.0 : -1.0;
      acc += s[r - 1] * sign * binomial(i - 1, n - r);
    }
    alpha[i - 1] = binomial(n, i) * acc.value();
  }
  return alpha;
}

/// Rounds a signature that is integral up to tol; nullopt otherwise.
inline std::optional<std::vector<long long>> integral_signature(std::span<const double> v, double tol = 1e-9) {
  std::vector<long long> out;
  for (double x : v) {
    const double r = std::round(x);
    if (std::abs(x - r) > tol) return std::nullopt;
    out.push_back(static_cast<long long>(r));
  }
  return out;
}

struct SignatureSet {
  SubsetCoefficients alpha_subsets;
  SubsetCoefficients beta_subsets;  // empty without cut sets
  std::vector<long long> alpha;
  std::vector<long long> beta;  // empty without cut sets
  std::optional<std::vector<double>> samaniego;
};

inline SignatureSet signature_set(const SystemStructure& s, std::optional<std::vector<double>> samaniego = std::nullopt) {
  SignatureSet out;
  if (s.has_path_sets()) {
    out.alpha_subsets = alpha_coefficients(s);
    out.alpha = aggregate_by_size(out.alpha_subsets, s.n());
  }
  if (s.has_cut_sets()) {
    out.beta_subsets = beta_coefficients(s);
    out.beta = aggregate_by_size(out.beta_subsets, s.n());
  }
  if (samaniego) {
    detail::require(static_cast<int>(samaniego->size()) == s.n(), "Samaniego signature length must equal n");
    signature_from_samaniego(*samaniego);
  }
  out.samaniego = std::move(samaniego);
  return out;
}

/// Which inclusion-exclusion expansion evaluates the system survival.
enum class Expansion { automatic, alpha, beta };

namespace detail {

struct SystemExpansion {
  bool alpha = true;
  SubsetCoefficients coeffs;

  static SystemExpansion make(const SystemStructure& s, Expansion e) {
    const bool use_alpha = e == Expansion::alpha || (e == Expansion::automatic && s.has_path_sets());
    return {use_alpha, use_alpha ? alpha_coefficients(s) : beta_coefficients(s)};
  }

  double survival(const JointModel::Slice& slice) const {
    CompensatedSum acc;
    for (const auto& [k, c] : coeffs) {
      acc += static_cast<double>(c) * (alpha ? slice.rect_prob({}, k) : slice.rect_prob(k, {}));
    }
    return std::clamp(alpha ? acc.value() : 1.0 - acc.value(), 0.0, 1.0);
  }

  // Positive coefficient mass entering the truncation condition.
  double mass(int n) const {
    double pos = 0.0;
    for (const auto& [k, c] : coeffs) pos += static_cast<double>(std::max(c, 0LL));
    return alpha ? pos : pos * (std::ldexp(1.0, n) - 1.0);
  }
};

inline void check_system_model(const JointModel& model, const SystemStructure& s) {
  detail::require(model.n() == s.n(), "model dimension " + std::to_string(model.n()) + " does not match system size " +
                                          std::to_string(s.n()));
}

template <class SurvivalAt>
double system_tail_sum(int p, long long last_m, SurvivalAt&& survival_at) {
  if (last_m < 0) return 0.0;
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(last_m) + 1);
  for (long long m = 0; m <= last_m; ++m) terms.push_back(power_increment(m, p) * survival_at(m));
  return pairwise_sum(terms);
}

// Truncation index for the mass-scaled tail condition.
inline TruncationPlan system_plan(const JointModel& model, int p, double d, double mass) {
  detail::require(d > 0.0 && std::isfinite(d), "error bound d must be positive");
  if (auto pois = uniform_laws<Poisson>(model)) {
    std::vector<double> lambdas;
    for (const auto& l : *pois) lambdas.push_back(l.lambda);
    const int j0 = argmax_index(lambdas);
    return poisson_plan_for_mass(lambdas[j0], j0, p, d, mass);
  }
  auto src = tail_source(model, p);
  return plan_from_tail(src.tail, p, d / mass, src.j0);
}

}  // namespace detail

/// P(T > m).
inline double system_survival(const JointModel& model, const SystemStructure& s, long long m,
                              Expansion e = Expansion::automatic) {
  detail::check_system_model(model, s);
  return detail::SystemExpansion::make(s, e).survival(model.slice(m));
}

inline MomentResult system_moment_exact(const JointModel& model, const SystemStructure& s, int p,
                                        Expansion e = Expansion::automatic) {
  detail::check_system_model(model, s);
  detail::require(p >= 1, "moment order p must be positive");
  const auto top = model.max_support();
  if (!top) throw UnsupportedModelError("model has infinite support; use system_moment_approx");
  const auto ex = detail::SystemExpansion::make(s, e);
  const double v = detail::system_tail_sum(p, *top - 1, [&](long long m) { return ex.survival(model.slice(m)); });
  return {v, true, std::nullopt, std::nullopt};
}

/// Truncated sum with an explicit M0.
inline MomentResult system_moment_truncated(const JointModel& model, const SystemStructure& s, int p, long long M0,
                                            double d, Expansion e = Expansion::automatic) {
  detail::check_system_model(model, s);
  detail::require(p >= 1, "moment order p must be positive");
  detail::require(M0 >= -1, "truncation index M0 must be >= -1");
  const auto ex = detail::SystemExpansion::make(s, e);
  const double v = detail::system_tail_sum(p, M0, [&](long long m) { return ex.survival(model.slice(m)); });
  return {v, false, M0, d};
}

/// Truncation plan for system moments: tail condition scaled by the positive
/// alpha mass, or by (2^n - 1) times the positive beta mass.
inline TruncationPlan system_truncation_plan(const JointModel& model, const SystemStructure& s, int p, double d,
                                             Expansion e = Expansion::alpha) {
  detail::check_system_model(model, s);
  detail::require(p >= 1, "moment order p must be positive");
  const auto ex = detail::SystemExpansion::make(s, e);
  return detail::system_plan(model, p, d, ex.mass(s.n()));
}

inline MomentResult system_moment_approx(const JointModel& model, const SystemStructure& s, int p, double d) {
  const auto plan = system_truncation_plan(model, s, p, d, Expansion::alpha);
  return system_moment_truncated(model, s, p, plan.M0, d, Expansion::alpha);
}

inline MomentResult system_moment_approx_beta(const JointModel& model, const SystemStructure& s, int p, double d) {
  const auto plan = system_truncation_plan(model, s, p, d, Expansion::beta);
  return system_moment_truncated(model, s, p, plan.M0, d, Expansion::beta);
}

/// Exact for finite supports, truncated otherwise.
inline MomentResult system_moment(const JointModel& model, const SystemStructure& s, int p, double d) {
  if (model.finite_support()) return system_moment_exact(model, s, p);
  return system_moment_approx(model, s, p, d);
}

/// Factorial moment E(T)_p = p! sum_K alpha_K (theta(K) / (1 - theta(K)))^p
/// for MVG component lifetimes.
inline double system_moment_mvg(const MvgParams& params, const SystemStructure& s, int p) {
  detail::require(params.n() == s.n(), "MVG dimension does not match system size");
  detail::require(p >= 1, "moment order p must be positive");
  CompensatedSum acc;
  if (params.is_exchangeable()) {
    const auto alpha = minimal_signature(s);
    for (int i = 1; i <= s.n(); ++i) {
      if (alpha[i - 1] == 0) continue;
      acc += static_cast<double>(alpha[i - 1]) * geometric_factorial_moment(mvg_min_param_exchangeable(params, i), p);
    }
    return acc.value();
  }
  for (const auto& [k, c] : alpha_coefficients(s)) {
    const double theta = mvg_min_param(params, k);
    if (theta >= 1.0) {
      throw NumericError("minimum over " + k.label() + " has theta = 1 (defective); E(T)_p is infinite");
    }
    acc += static_cast<double>(c) * geometric_factorial_moment(theta, p);
  }
  return acc.value();
}

inline MeanVariance system_mean_var_mvg(const MvgParams& params, const SystemStructure& s) {
  return mean_variance_from_factorial(system_moment_mvg(params, s, 1), system_moment_mvg(params, s, 2));
}

/// E T^p (or E(T)_p) from moments of subset minima (alpha form) or subset
/// maxima (beta form); provider(K) returns the moment for subset K.
inline double system_moment_from_subset_moments(const std::function<double(Subset)>& provider, const SystemStructure& s,
                                                Expansion e = Expansion::alpha) {
  detail::require(static_cast<bool>(provider), "moment provider must be callable");
  const auto ex = detail::SystemExpansion::make(s, e == Expansion::automatic ? Expansion::alpha : e);
  CompensatedSum acc;
  for (const auto& [k, c] : ex.coeffs) {
    const double v = provider(k);
    if (!std::isfinite(v)) throw NumericError("subset moment for " + k.label() + " is infinite");
    acc += static_cast<double>(c) * v;
  }
  return acc.value();
}

inline double system_moment_from_min_moments(const std::function<double(Subset)>& provider, const SystemStructure& s) {
  return system_moment_from_subset_moments(provider, s, Expansion::alpha);
}

inline double system_moment_from_max_moments(const std::function<double(Subset)>& provider, const SystemStructure& s) {
  return system_moment_from_subset_moments(provider, s, Expansion::beta);
}

/// Signature-form system moment for an exchangeable model. With `use_beta`
/// the vector is read as a maximal signature.
inline MomentResult exchangeable_system_moment(const JointModel& model, std::span<const long long> signature, int p,
                                               double d, bool use_beta = false) {
  detail::require(model.exchangeable(), "signature-form system moments need a model declared exchangeable");
  const int n = model.n();
  detail::require(static_cast<int>(signature.size()) == n, "signature length must equal n");
  detail::require(p >= 1, "moment order p must be positive");
  auto survival_at = [&](long long m) {
    const auto slice = model.slice(m);
    CompensatedSum acc;
    for (int i = 1; i <= n; ++i) {
      if (signature[i - 1] == 0) continue;
      const Subset first((i == 32) ? ~std::uint32_t{0} : (std::uint32_t{1} << i) - 1);
      acc += static_cast<double>(signature[i - 1]) * (use_beta ? slice.rect_prob(first, {}) : slice.rect_prob({}, first));
    }
    return std::clamp(use_beta ? 1.0 - acc.value() : acc.value(), 0.0, 1.0);
  };
  if (auto top = model.max_support()) {
    return {detail::system_tail_sum(p, *top - 1, survival_at), true, std::nullopt, std::nullopt};
  }
  double mass = 0.0;
  for (long long c : signature) mass += static_cast<double>(std::max(c, 0LL));
  if (use_beta) mass *= std::ldexp(1.0, n) - 1.0;
  const auto plan = detail::system_plan(model, p, d, mass);
  return {detail::system_tail_sum(p, plan.M0, survival_at), false, plan.M0, d};
}

}  // namespace dosm
