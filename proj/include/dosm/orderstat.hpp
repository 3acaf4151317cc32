#pragma once

// Moments of order statistics X_{r:n} through the tail-sum identity
//   E X_{r:n}^p = sum_{m >= 0} ((m+1)^p - m^p) P(X_{r:n} > m),
// exactly for finite supports and with a certified truncation otherwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dosm/error.hpp"
#include "dosm/joint_model.hpp"
#include "dosm/marginal.hpp"
#include "dosm/numeric.hpp"
#include "dosm/subset.hpp"

namespace dosm {

struct MomentRequest {
  int r = 1;
  int n = 1;
  int p = 1;
  double d = 0.0;

  void validate() const {
    detail::require(n >= 1, "sample size n must be positive");
    detail::require(r >= 1 && r <= n, "rank r must satisfy 1 <= r <= n (got r=" + std::to_string(r) + ", n=" + std::to_string(n) + ")");
    detail::require(p >= 1, "moment order p must be positive");
    detail::require(d >= 0.0 && std::isfinite(d), "error bound d must be non-negative");
  }
  void validate_with_bound() const {
    validate();
    detail::require(d > 0.0, "error bound d must be positive for truncated evaluation");
  }
};

struct TruncationPlan {
  long long M0 = -1;
  int j0 = 0;  // 0-based
  double threshold = 0.0;
};

struct MomentResult {
  double value = 0.0;
  bool exact = true;
  std::optional<long long> M0_used;
  std::optional<double> error_bound;
};

/// Which partition classes are summed for P(X_{r:n} > m).
enum class SurvivalForm {
  automatic,  // lower when r <= (n+1)/2, upper otherwise
  lower,      // sum_{s<r} P(exactly s coordinates <= m)
  upper,      // 1 - sum_{s>=r} P(exactly s coordinates <= m)
};

namespace detail {

inline bool use_lower_form(int r, int n, SurvivalForm form) {
  if (form == SurvivalForm::lower) return true;
  if (form == SurvivalForm::upper) return false;
  return 2 * r <= n + 1;
}

// P(exactly s coordinates <= m) summed over the requested class range, using a
// prepared slice.
inline double orderstat_survival_on_slice(const JointModel& model, const JointModel::Slice& slice, int r, SurvivalForm form) {
  const int n = model.n();
  const bool lower = use_lower_form(r, n, form);
  const int s_begin = lower ? 0 : r;
  const int s_end = lower ? r : n + 1;
  const Subset all = Subset::full(n);
  CompensatedSum acc;
  if (model.exchangeable()) {
    for (int s = s_begin; s < s_end; ++s) {
      const Subset low(s == 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << s) - 1);
      acc += binomial(n, s) * slice.rect_prob(low, all.minus(low));
    }
  } else {
    require_mask_capacity(n, "order-statistic survival over subsets");
    for (int s = s_begin; s < s_end; ++s) {
      for_each_subset_of_size(n, s, [&](Subset low) { acc += slice.rect_prob(low, all.minus(low)); });
    }
  }
  const double v = lower ? acc.value() : 1.0 - acc.value();
  return std::clamp(v, 0.0, 1.0);
}

inline double orderstat_mass(int r, int n) {
  CompensatedSum s;
  for (int k = 0; k < r; ++k) s += binomial(n, k);
  return s.value();
}

inline void check_model_request(const JointModel& model, const MomentRequest& req) {
  req.validate();
  detail::require(req.n == model.n(), "request n=" + std::to_string(req.n) + " does not match model dimension " + std::to_string(model.n()));
}

inline double tail_sum(const JointModel& model, int r, int p, long long last_m, SurvivalForm form) {
  if (last_m < 0) return 0.0;
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(last_m) + 1);
  for (long long m = 0; m <= last_m; ++m) {
    const auto slice = model.slice(m);
    const double sf = orderstat_survival_on_slice(model, slice, r, form);
    terms.push_back(power_increment(m, p) * sf);
  }
  return pairwise_sum(terms);
}

}  // namespace detail

/// P(X_{r:n} > m); ranks are 1-based.
inline double survival_orderstat(const JointModel& model, int r, int n, long long m,
                                 SurvivalForm form = SurvivalForm::automatic) {
  detail::require(n == model.n(), "n does not match model dimension");
  detail::require(r >= 1 && r <= n, "rank r must satisfy 1 <= r <= n");
  detail::require(m >= -1, "threshold m must be >= -1");
  const auto slice = model.slice(m);
  return detail::orderstat_survival_on_slice(model, slice, r, form);
}

inline MomentResult exact_moment_finite(const JointModel& model, const MomentRequest& req,
                                        SurvivalForm form = SurvivalForm::automatic) {
  detail::check_model_request(model, req);
  const auto top = model.max_support();
  if (!top) throw UnsupportedModelError("model has infinite support; use approx_moment with a truncation plan");
  return {detail::tail_sum(model, req.r, req.p, *top - 1, form), true, std::nullopt, std::nullopt};
}

/// Partial sum up to plan.M0; underestimates the true moment by at most req.d
/// when the plan certifies it.
inline MomentResult approx_moment(const JointModel& model, const MomentRequest& req, const TruncationPlan& plan,
                                  SurvivalForm form = SurvivalForm::automatic) {
  detail::check_model_request(model, req);
  detail::require(plan.M0 >= -1, "truncation index M0 must be >= -1");
  return {detail::tail_sum(model, req.r, req.p, plan.M0, form), false, plan.M0, req.d};
}

namespace detail {

inline int argmax_index(std::span<const double> xs) {
  return static_cast<int>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}
inline int argmin_index(std::span<const double> xs) {
  return static_cast<int>(std::min_element(xs.begin(), xs.end()) - xs.begin());
}

// Poisson bound with the combinatorial mass made explicit so the system-level
// planner can reuse it.
inline TruncationPlan poisson_plan_for_mass(double lambda, int j0, int p, double d, double mass) {
  const double tail = d * std::pow(2.0, -0.5 * p * (p - 1)) * std::pow(lambda, -p) / mass;
  TruncationPlan plan{p - 2, j0, 1.0 - tail};
  if (tail >= 1.0) return plan;
  plan.M0 = MarginalDist::poisson(lambda).tail_quantile(tail) + p - 1;
  return plan;
}

}  // namespace detail

inline TruncationPlan plan_poisson(std::span<const double> lambdas, const MomentRequest& req) {
  req.validate_with_bound();
  detail::require(static_cast<int>(lambdas.size()) == req.n, "need one Poisson rate per component");
  for (double l : lambdas) detail::require(std::isfinite(l) && l > 0.0, "Poisson rates must be positive");
  const int j0 = detail::argmax_index(lambdas);
  return detail::poisson_plan_for_mass(lambdas[j0], j0, req.p, req.d, detail::orderstat_mass(req.r, req.n));
}

/// certified: auxiliary NBin(R+p, p_j0) quantile shifted by p-1, which carries
/// the proof of the error bound. tabulated: NBin(R, p_j0) quantile without the
/// shift; it gives smaller M0 but its error can exceed d slightly.
enum class NegBinPlanRule { certified, tabulated };

namespace detail {

inline TruncationPlan negbin_plan_for_mass(double size, double prob, int j0, int p, double d, double mass,
                                           NegBinPlanRule rule) {
  double denom = std::pow(2.0, 0.5 * p * (p - 1)) * mass;
  for (int i = 0; i < p; ++i) denom *= size + i;
  const double tail = d / denom * std::pow(prob / (1.0 - prob), p);
  TruncationPlan plan{p - 2, j0, 1.0 - tail};
  if (tail >= 1.0) return plan;
  if (rule == NegBinPlanRule::certified) {
    plan.M0 = MarginalDist::negative_binomial(size + p, prob).tail_quantile(tail) + p - 1;
  } else {
    plan.M0 = MarginalDist::negative_binomial(size, prob).tail_quantile(tail);
  }
  return plan;
}

}  // namespace detail

inline TruncationPlan plan_negbin(double size, std::span<const double> probs, const MomentRequest& req,
                                  NegBinPlanRule rule = NegBinPlanRule::certified) {
  req.validate_with_bound();
  detail::require(std::isfinite(size) && size > 0.0, "negative binomial size R must be positive");
  detail::require(static_cast<int>(probs.size()) == req.n, "need one success probability per component");
  for (double q : probs) detail::require(q > 0.0 && q < 1.0, "negative binomial probabilities must lie in (0,1)");
  const int j0 = detail::argmin_index(probs);
  return detail::negbin_plan_for_mass(size, probs[j0], j0, req.p, req.d, detail::orderstat_mass(req.r, req.n), rule);
}

/// Tail oracle: m -> sum_{x >= m+2} x^p P(X_j0 = x).
using TailOracle = std::function<double(long long)>;

inline constexpr long long kMaxTruncationIndex = 1'000'000;

/// Smallest M0 >= p-2 with tail(M0) <= threshold, by doubling then bisection.
inline TruncationPlan plan_from_tail(const TailOracle& tail, int p, double threshold, int j0) {
  detail::require(static_cast<bool>(tail), "tail oracle must be callable");
  detail::require(threshold > 0.0, "tail threshold must be positive");
  auto ok = [&](long long m) { return tail(m) <= threshold; };
  long long lo = p - 2;
  if (ok(lo)) return {lo, j0, threshold};
  long long step = 1;
  long long hi = lo + step;
  while (!ok(hi)) {
    lo = hi;
    step *= 2;
    hi = lo + step;
    if (hi > kMaxTruncationIndex) {
      throw NumericError("truncation search: tail did not fall below " + std::to_string(threshold) +
                         " before M0 = " + std::to_string(kMaxTruncationIndex));
    }
  }
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return {hi, j0, threshold};
}

inline TruncationPlan plan_generic(const TailOracle& tail, const MomentRequest& req, int j0) {
  req.validate_with_bound();
  detail::require(j0 >= 0 && j0 < req.n, "j0 out of range");
  return plan_from_tail(tail, req.p, req.d / detail::orderstat_mass(req.r, req.n), j0);
}

namespace detail {

// Tail oracle and j0 for a model whose marginals are known. When all marginals
// are geometric (independent or MVG) the largest survival parameter dominates
// stochastically; otherwise the summed marginal tails bound every max_j.
struct TailSource {
  TailOracle tail;
  int j0 = 0;
};

inline TailSource tail_source(const JointModel& model, int p) {
  std::vector<MarginalDist> marginals;
  marginals.reserve(model.n());
  for (int j = 0; j < model.n(); ++j) marginals.push_back(model.marginal(j));
  const bool all_geometric = std::all_of(marginals.begin(), marginals.end(),
                                         [](const MarginalDist& d) { return std::holds_alternative<Geometric>(d.law()); });
  if (all_geometric) {
    std::vector<double> pis;
    for (const auto& d : marginals) pis.push_back(std::get<Geometric>(d.law()).pi);
    const int j0 = argmin_index(pis);
    const MarginalDist dom = marginals[j0];
    return {[dom, p](long long m) { return dom.tail_moment(p, m + 2); }, j0};
  }
  std::vector<double> means;
  for (const auto& d : marginals) means.push_back(d.raw_moment(1));
  const int j0 = argmax_index(means);
  return {[marginals, p](long long m) {
            CompensatedSum s;
            for (const auto& d : marginals) s += d.tail_moment(p, m + 2);
            return s.value();
          },
          j0};
}

template <class Law>
std::optional<std::vector<Law>> uniform_laws(const JointModel& model) {
  const auto* ind = model.as_independent();
  if (!ind) return std::nullopt;
  std::vector<Law> out;
  for (const auto& d : *ind) {
    const auto* law = std::get_if<Law>(&d.law());
    if (!law) return std::nullopt;
    out.push_back(*law);
  }
  return out;
}

}  // namespace detail

/// Truncation plan chosen from the model's marginals: closed-form Poisson or
/// negative binomial (common R) bounds when they apply, tail search otherwise.
inline TruncationPlan plan_for_model(const JointModel& model, const MomentRequest& req,
                                     NegBinPlanRule rule = NegBinPlanRule::certified) {
  detail::check_model_request(model, req);
  req.validate_with_bound();
  if (auto pois = detail::uniform_laws<Poisson>(model)) {
    std::vector<double> lambdas;
    for (const auto& l : *pois) lambdas.push_back(l.lambda);
    return plan_poisson(lambdas, req);
  }
  if (auto nb = detail::uniform_laws<NegativeBinomial>(model)) {
    const double size = nb->front().size;
    if (std::all_of(nb->begin(), nb->end(), [size](const NegativeBinomial& x) { return x.size == size; })) {
      std::vector<double> probs;
      for (const auto& x : *nb) probs.push_back(x.prob);
      return plan_negbin(size, probs, req, rule);
    }
  }
  auto src = detail::tail_source(model, req.p);
  return plan_generic(src.tail, req, src.j0);
}

/// Exact for finite supports, planned truncation otherwise.
inline MomentResult orderstat_moment(const JointModel& model, const MomentRequest& req,
                                     NegBinPlanRule rule = NegBinPlanRule::certified) {
  if (model.finite_support()) return exact_moment_finite(model, req);
  return approx_moment(model, req, plan_for_model(model, req, rule));
}

}  // namespace dosm
