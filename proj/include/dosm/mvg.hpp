#pragma once

// Multivariate geometric (common-shock) lifetimes.
//
// X_i = min{M_I : I contains i} with independent shock times
// M_I ~ ge(1 - theta_I). Only shocks with theta_I < 1 are stored; every absent
// subset has theta_I = 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dosm/error.hpp"
#include "dosm/numeric.hpp"
#include "dosm/subset.hpp"

namespace dosm {

struct ShockParam {
  Subset set;
  double theta;
};

class MvgParams {
 public:
  /// General parametrization: (I, theta_I) pairs, I non-empty subsets of
  /// {0..n-1}. Repeated subsets are rejected.
  static MvgParams general(int n, std::vector<ShockParam> shocks) {
    detail::require(n >= 1, "MVG needs at least one component");
    if (n > 32) throw CapacityError("general MVG parameters support at most 32 components");
    MvgParams p;
    p.n_ = n;
    std::sort(shocks.begin(), shocks.end(), [](const ShockParam& a, const ShockParam& b) { return a.set < b.set; });
    for (std::size_t i = 0; i < shocks.size(); ++i) {
      const auto& s = shocks[i];
      detail::require(!s.set.empty(), "MVG shock subsets must be non-empty");
      detail::require(Subset::full(n).contains(s.set), "MVG shock subset " + s.set.label() + " has an index beyond n");
      detail::require(s.theta >= 0.0 && s.theta <= 1.0,
                      "theta for " + s.set.label() + " must lie in [0,1], got " + std::to_string(s.theta));
      detail::require(i == 0 || shocks[i - 1].set != s.set, "duplicate MVG shock subset " + s.set.label());
      if (s.theta < 1.0) p.shocks_.push_back(s);
    }
    for (int i = 0; i < n; ++i) {
      const bool hit = std::any_of(p.shocks_.begin(), p.shocks_.end(), [i](const ShockParam& s) { return s.set.contains(i); });
      if (!hit) {
        throw ArgumentError("defective MVG: component " + std::to_string(i + 1) +
                            " is not covered by any shock with theta < 1");
      }
    }
    return p;
  }

  /// Exchangeable parametrization theta_I = levels[|I| - 1]. Missing trailing
  /// levels default to 1.
  static MvgParams exchangeable(int n, std::vector<double> levels) {
    detail::require(n >= 1, "MVG needs at least one component");
    detail::require(static_cast<int>(levels.size()) <= n, "more exchangeable levels than components");
    levels.resize(n, 1.0);
    for (std::size_t s = 0; s < levels.size(); ++s) {
      detail::require(levels[s] >= 0.0 && levels[s] <= 1.0,
                      "exchangeable level theta_" + std::to_string(s + 1) + " must lie in [0,1]");
    }
    detail::require(std::any_of(levels.begin(), levels.end(), [](double t) { return t < 1.0; }),
                    "defective MVG: every exchangeable level equals 1");
    MvgParams p;
    p.n_ = n;
    p.levels_ = std::move(levels);
    return p;
  }

  int n() const { return n_; }
  bool is_exchangeable() const { return levels_.has_value(); }
  const std::vector<double>& levels() const { return *levels_; }
  const std::vector<ShockParam>& shocks() const { return shocks_; }

  /// theta_I for a non-empty subset.
  double theta(Subset set) const {
    if (levels_) return set.empty() ? 1.0 : (*levels_)[set.size() - 1];
    for (const auto& s : shocks_) {
      if (s.set == set) return s.theta;
    }
    return 1.0;
  }

  /// Expanded (I, theta_I) list; materializes all 2^n - 1 subsets in the
  /// exchangeable case.
  std::vector<ShockParam> expanded_shocks() const {
    if (!levels_) return shocks_;
    require_mask_capacity(n_, "expanding exchangeable MVG parameters");
    std::vector<ShockParam> out;
    for (std::uint32_t b = 1; b <= Subset::full(n_).bits(); ++b) {
      const Subset s(b);
      const double t = (*levels_)[s.size() - 1];
      if (t < 1.0) out.push_back({s, t});
    }
    return out;
  }

  bool has_tiny_theta() const {
    if (levels_) return std::any_of(levels_->begin(), levels_->end(), [](double t) { return t < 1e-3; });
    return std::any_of(shocks_.begin(), shocks_.end(), [](const ShockParam& s) { return s.theta < 1e-3; });
  }

 private:
  int n_ = 0;
  std::vector<ShockParam> shocks_;
  std::optional<std::vector<double>> levels_;
};

namespace detail {

// Product of theta^exponent factors, switching to log space when some theta
// is small enough to threaten underflow.
class ThetaProduct {
 public:
  explicit ThetaProduct(bool log_space) : log_space_(log_space) {}
  void multiply(double theta, double exponent) {
    if (exponent == 0.0 || theta == 1.0) return;
    if (theta == 0.0) {
      zero_ = true;
      return;
    }
    if (log_space_) {
      log_ += exponent * std::log(theta);
    } else {
      value_ *= exponent == 1.0 ? theta : std::pow(theta, exponent);
    }
  }
  double value() const {
    if (zero_) return 0.0;
    return log_space_ ? std::exp(log_) : value_;
  }

 private:
  bool log_space_;
  bool zero_ = false;
  double value_ = 1.0;
  double log_ = 0.0;
};

// prod_{s} theta_s^(C(n,s) - C(n-size,s)): the shock survival product of any
// `size`-element subset under the exchangeable parametrization.
inline double exchangeable_min_param(const std::vector<double>& levels, int n, int size) {
  const bool log_space = std::any_of(levels.begin(), levels.end(), [](double t) { return t < 1e-3; }) || n > 30;
  ThetaProduct prod(log_space);
  for (int s = 1; s <= n; ++s) {
    const double e = binomial(n, s) - binomial(n - size, s);
    prod.multiply(levels[s - 1], e);
  }
  return prod.value();
}

}  // namespace detail

/// P(X_1 > k_1, ..., X_n > k_n) for k_i >= -1.
inline double mvg_joint_survival(const MvgParams& params, std::span<const long long> k) {
  detail::require(static_cast<int>(k.size()) == params.n(), "threshold vector length must equal n");
  for (long long v : k) detail::require(v >= -1, "survival thresholds must be >= -1");
  detail::ThetaProduct prod(params.has_tiny_theta());
  if (params.is_exchangeable()) {
    // The number of s-subsets whose largest threshold is the j-th smallest
    // value is C(j-1, s-1).
    std::vector<long long> sorted(k.begin(), k.end());
    std::sort(sorted.begin(), sorted.end());
    const int n = params.n();
    for (int s = 1; s <= n; ++s) {
      double exponent = 0.0;
      for (int j = s; j <= n; ++j) exponent += binomial(j - 1, s - 1) * static_cast<double>(sorted[j - 1] + 1);
      prod.multiply(params.levels()[s - 1], exponent);
    }
    return prod.value();
  }
  for (const auto& shock : params.shocks()) {
    long long mx = -1;
    for (int i : shock.set.indices()) mx = std::max(mx, k[i]);
    prod.multiply(shock.theta, static_cast<double>(mx + 1));
  }
  return prod.value();
}

/// Parameters of the sub-vector (X_l)_{l in keep}, relabelled 0..|keep|-1 in
/// increasing index order.
inline MvgParams mvg_marginal(const MvgParams& params, Subset keep) {
  detail::require(!keep.empty(), "marginal subset must be non-empty");
  detail::require(Subset::full(params.n()).contains(keep), "marginal subset has an index beyond n");
  const int s = keep.size();
  const int dropped = params.n() - s;
  if (params.is_exchangeable()) {
    // theta_hat_t = prod_u theta_{t+u}^C(dropped, u).
    std::vector<double> levels(s, 1.0);
    for (int t = 1; t <= s; ++t) {
      detail::ThetaProduct prod(true);
      for (int u = 0; u <= dropped; ++u) prod.multiply(params.levels()[t + u - 1], binomial(dropped, u));
      levels[t - 1] = prod.value();
    }
    return MvgParams::exchangeable(s, std::move(levels));
  }
  const auto kept = keep.indices();
  auto relabel = [&](Subset set) {
    std::uint32_t bits = 0;
    for (int j = 0; j < s; ++j) {
      if (set.contains(kept[j])) bits |= std::uint32_t{1} << j;
    }
    return Subset(bits);
  };
  std::vector<ShockParam> merged;
  for (const auto& shock : params.shocks()) {
    const Subset inside = shock.set & keep;
    if (inside.empty()) continue;
    const Subset label = relabel(inside);
    auto it = std::find_if(merged.begin(), merged.end(), [&](const ShockParam& m) { return m.set == label; });
    if (it == merged.end()) {
      merged.push_back({label, shock.theta});
    } else {
      it->theta *= shock.theta;
    }
  }
  return MvgParams::general(s, std::move(merged));
}

/// theta = prod_{I : I meets subset} theta_I; min over `subset` is ge(1 - theta).
inline double mvg_min_param(const MvgParams& params, Subset subset) {
  detail::require(!subset.empty(), "minimum subset must be non-empty");
  detail::require(Subset::full(params.n()).contains(subset), "minimum subset has an index beyond n");
  if (params.is_exchangeable()) return detail::exchangeable_min_param(params.levels(), params.n(), subset.size());
  detail::ThetaProduct prod(params.has_tiny_theta());
  for (const auto& shock : params.shocks()) {
    if (shock.set.intersects(subset)) prod.multiply(shock.theta, 1.0);
  }
  return prod.value();
}

/// Size-only form of mvg_min_param for exchangeable parameters of any n.
inline double mvg_min_param_exchangeable(const MvgParams& params, int size) {
  detail::require(params.is_exchangeable(), "size-indexed minimum parameter needs exchangeable levels");
  detail::require(size >= 1 && size <= params.n(), "subset size out of range");
  return detail::exchangeable_min_param(params.levels(), params.n(), size);
}

/// E(Y)_p = p! (theta / (1 - theta))^p for Y ~ ge(1 - theta).
inline double geometric_factorial_moment(double theta, int p) {
  detail::require(p >= 1, "moment order must be positive");
  detail::require(theta >= 0.0, "geometric survival parameter must be non-negative");
  if (theta >= 1.0) throw NumericError("defective geometric law (theta = 1): factorial moments are infinite");
  return factorial(p) * std::pow(theta / (1.0 - theta), p);
}

/// Subset sums of the order-statistic factorial moment expansion, with the
/// signed combination and a cancellation diagnostic.
struct FactorialMomentTerms {
  std::vector<double> subset_sums;  // S_{j,p}, j = 0..r-1
  double value = 0.0;               // E(X_{r:n})_p
  /// max |signed term| / |value|; large values flag cancellation.
  double cancellation_ratio = 1.0;
};

inline FactorialMomentTerms mvg_orderstat_factorial_terms(const MvgParams& params, int r, int p) {
  const int n = params.n();
  detail::require(r >= 1 && r <= n, "rank r must satisfy 1 <= r <= n");
  detail::require(p >= 1, "moment order must be positive");
  if (!params.is_exchangeable()) require_mask_capacity(n, "MVG order-statistic moments");

  auto ratio_power = [p](double theta) {
    if (theta >= 1.0) throw NumericError("defective subset minimum (theta = 1)");
    return std::pow(theta / (1.0 - theta), p);
  };

  FactorialMomentTerms out;
  out.subset_sums.resize(r);
  for (int j = 0; j < r; ++j) {
    if (params.is_exchangeable()) {
      out.subset_sums[j] = binomial(n, j) * ratio_power(detail::exchangeable_min_param(params.levels(), n, n - j));
    } else {
      // S_{j,p} sums over the j-subsets A removed; the remaining minimum runs
      // over the complement of A.
      CompensatedSum s;
      for_each_subset_of_size(n, j, [&](Subset removed) {
        s += ratio_power(mvg_min_param(params, removed.complement(n)));
      });
      out.subset_sums[j] = s.value();
    }
  }

  CompensatedSum total;
  double largest = 0.0;
  const double pf = factorial(p);
  for (int j = 0; j < r; ++j) {
    const double sign = ((r - 1 - j) % 2 == 0) ? 1.0 : -1.0;
    const double term = pf * sign * binomial(n - j - 1, n - r) * out.subset_sums[j];
    largest = std::max(largest, std::abs(term));
    total += term;
  }
  out.value = total.value();
  out.cancellation_ratio = out.value != 0.0 ? largest / std::abs(out.value) : (largest == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  return out;
}

inline double mvg_orderstat_factorial_moment(const MvgParams& params, int r, int p) {
  return mvg_orderstat_factorial_terms(params, r, p).value;
}

struct MeanVariance {
  double mean;
  double variance;
};

/// Var = E(X)_2 + mean (1 - mean).
inline MeanVariance mean_variance_from_factorial(double first, double second) {
  return {first, second + first * (1.0 - first)};
}

inline MeanVariance mvg_orderstat_mean_var(const MvgParams& params, int r) {
  return mean_variance_from_factorial(mvg_orderstat_factorial_moment(params, r, 1),
                                      mvg_orderstat_factorial_moment(params, r, 2));
}

/// Raw moments E X^1..E X^p from factorial moments E(X)_1..E(X)_p via
/// E X^q = sum_k S2(q, k) E(X)_k.
inline std::vector<double> factorial_to_raw(std::span<const double> factorials) {
  const int p = static_cast<int>(factorials.size());
  detail::require(p >= 1, "need at least one factorial moment");
  const auto s2 = stirling2_table(p);
  std::vector<double> raw(p);
  for (int q = 1; q <= p; ++q) {
    CompensatedSum s;
    for (int k = 1; k <= q; ++k) s += static_cast<double>(s2[q][k]) * factorials[k - 1];
    raw[q - 1] = s.value();
  }
  return raw;
}

}  // namespace dosm
