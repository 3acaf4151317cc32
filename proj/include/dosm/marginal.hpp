#pragma once

// Univariate discrete laws on the non-negative integers: Poisson, negative
// binomial, geometric and explicit finite pmfs.
//
// pmf values of the infinite-support laws are evaluated through log-gamma and
// exponentiated; cdf/survival use the regularized incomplete gamma and beta
// functions so that tiny upper tails stay accurate.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "dosm/error.hpp"
#include "dosm/numeric.hpp"

namespace dosm {

struct Poisson {
  double lambda;
};

/// P(X = x) = Gamma(x + R) / (x! Gamma(R)) (1 - p)^x p^R; R need not be an integer.
struct NegativeBinomial {
  double size;
  double prob;
};

/// ge(pi): P(X > k) = (1 - pi)^(k + 1).
struct Geometric {
  double pi;
};

/// Explicit probabilities over {0, ..., K}.
struct FinitePmf {
  std::vector<double> probs;
};

class MarginalDist {
 public:
  using Variant = std::variant<Poisson, NegativeBinomial, Geometric, FinitePmf>;

  static MarginalDist poisson(double lambda) {
    detail::require(std::isfinite(lambda) && lambda > 0.0, "Poisson rate must be positive");
    return MarginalDist(Poisson{lambda});
  }
  static MarginalDist negative_binomial(double size, double prob) {
    detail::require(std::isfinite(size) && size > 0.0, "negative binomial size R must be positive");
    detail::require(prob > 0.0 && prob < 1.0, "negative binomial success probability must lie in (0,1)");
    return MarginalDist(NegativeBinomial{size, prob});
  }
  static MarginalDist geometric(double pi) {
    detail::require(pi >= 0.0 && pi <= 1.0, "geometric parameter must lie in [0,1]");
    if (pi == 0.0) throw ArgumentError("geometric parameter 0 is a defective law (all mass at infinity)");
    return MarginalDist(Geometric{pi});
  }
  static MarginalDist finite(std::vector<double> probs) {
    detail::require(!probs.empty(), "finite pmf needs at least one probability");
    CompensatedSum total;
    for (double q : probs) {
      detail::require(std::isfinite(q) && q >= 0.0, "finite pmf entries must be non-negative");
      total += q;
    }
    detail::require(std::abs(total.value() - 1.0) <= 1e-12, "finite pmf must sum to 1 within 1e-12");
    while (probs.size() > 1 && probs.back() == 0.0) probs.pop_back();
    return MarginalDist(FinitePmf{std::move(probs)});
  }

  const Variant& law() const { return law_; }

  bool finite_support() const { return max_support().has_value(); }

  /// Largest support point when the support is finite.
  std::optional<long long> max_support() const {
    if (const auto* f = std::get_if<FinitePmf>(&law_)) return static_cast<long long>(f->probs.size()) - 1;
    if (const auto* g = std::get_if<Geometric>(&law_); g && g->pi == 1.0) return 0;
    return std::nullopt;
  }

  double log_pmf(long long x) const {
    if (x < 0) return -std::numeric_limits<double>::infinity();
    const double xd = static_cast<double>(x);
    return std::visit(
        [&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Poisson>) {
            return xd * std::log(d.lambda) - d.lambda - std::lgamma(xd + 1.0);
          } else if constexpr (std::is_same_v<T, NegativeBinomial>) {
            return std::lgamma(xd + d.size) - std::lgamma(xd + 1.0) - std::lgamma(d.size) +
                   xd * std::log1p(-d.prob) + d.size * std::log(d.prob);
          } else if constexpr (std::is_same_v<T, Geometric>) {
            if (d.pi == 1.0) return x == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
            return std::log(d.pi) + xd * std::log1p(-d.pi);
          } else {
            if (x >= static_cast<long long>(d.probs.size())) return -std::numeric_limits<double>::infinity();
            return std::log(d.probs[x]);
          }
        },
        law_);
  }

  double pmf(long long x) const {
    if (const auto* f = std::get_if<FinitePmf>(&law_)) {
      return x < 0 || x >= static_cast<long long>(f->probs.size()) ? 0.0 : f->probs[x];
    }
    return std::exp(log_pmf(x));
  }

  /// P(X <= m); 0 for m < 0.
  double cdf(long long m) const {
    if (m < 0) return 0.0;
    return std::visit(
        [&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          const double md = static_cast<double>(m);
          if constexpr (std::is_same_v<T, Poisson>) {
            return boost::math::gamma_q(md + 1.0, d.lambda);
          } else if constexpr (std::is_same_v<T, NegativeBinomial>) {
            return boost::math::ibeta(d.size, md + 1.0, d.prob);
          } else if constexpr (std::is_same_v<T, Geometric>) {
            return -std::expm1((md + 1.0) * std::log1p(-d.pi));
          } else {
            if (m + 1 >= static_cast<long long>(d.probs.size())) return 1.0;
            CompensatedSum s;
            for (long long x = 0; x <= m; ++x) s += d.probs[x];
            return std::min(1.0, s.value());
          }
        },
        law_);
  }

  /// P(X > m); 1 for m < 0.
  double survival(long long m) const {
    if (m < 0) return 1.0;
    return std::visit(
        [&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          const double md = static_cast<double>(m);
          if constexpr (std::is_same_v<T, Poisson>) {
            return boost::math::gamma_p(md + 1.0, d.lambda);
          } else if constexpr (std::is_same_v<T, NegativeBinomial>) {
            return boost::math::ibetac(d.size, md + 1.0, d.prob);
          } else if constexpr (std::is_same_v<T, Geometric>) {
            if (d.pi == 1.0) return 0.0;
            return std::exp((md + 1.0) * std::log1p(-d.pi));
          } else {
            const auto k = static_cast<long long>(d.probs.size());
            if (m + 1 >= k) return 0.0;
            CompensatedSum s;
            for (long long x = m + 1; x < k; ++x) s += d.probs[x];
            return std::max(0.0, s.value());
          }
        },
        law_);
  }

  /// F^{<-}(q) = min{x : P(X <= x) >= q} by cumulative pmf summation.
  long long quantile(double q) const {
    detail::require(q > 0.0 && q < 1.0, "quantile level must lie in (0,1)");
    CompensatedSum cum;
    const long long cap = search_cap();
    for (long long x = 0; x <= cap; ++x) {
      cum += pmf(x);
      if (cum.value() >= q) return x;
    }
    throw NumericError("quantile search did not reach the requested level");
  }

  /// min{x : P(X > x) <= tail}. Equals quantile(1 - tail) but stays exact
  /// when tail is far below double resolution near 1.
  long long tail_quantile(double tail) const {
    detail::require(tail > 0.0 && tail < 1.0, "tail level must lie in (0,1)");
    if (survival(0) <= tail) return 0;
    long long lo = 0;  // survival(lo) > tail
    long long hi = 1;
    const long long cap = search_cap();
    while (survival(hi) > tail) {
      lo = hi;
      hi *= 2;
      if (hi > cap) throw NumericError("tail quantile search exceeded its cap");
    }
    while (hi - lo > 1) {
      const long long mid = lo + (hi - lo) / 2;
      (survival(mid) > tail ? lo : hi) = mid;
    }
    return hi;
  }

  /// sum_{x >= from} x^p P(X = x).
  double tail_moment(int p, long long from) const {
    from = std::max<long long>(from, 0);
    if (const auto* g = std::get_if<Geometric>(&law_)) return geometric_tail_moment(g->pi, p, from);
    if (auto k = max_support()) {
      CompensatedSum s;
      for (long long x = from; x <= *k; ++x) s += std::pow(static_cast<double>(x), p) * pmf(x);
      return s.value();
    }
    CompensatedSum s;
    double prev = -1.0;
    const long long cap = search_cap() + from;
    for (long long x = from; x <= cap; ++x) {
      const double lt = (x == 0 ? (p == 0 ? 0.0 : -std::numeric_limits<double>::infinity()) : p * std::log(static_cast<double>(x))) +
                        log_pmf(x);
      const double t = std::exp(lt);
      s += t;
      const bool decreasing = prev >= 0.0 && t <= prev;
      if (decreasing && t <= 1e-18 * s.value()) return s.value();
      if (decreasing && t == 0.0) return s.value();
      prev = t;
    }
    throw NumericError("tail moment did not converge");
  }

  double raw_moment(int p) const { return tail_moment(p, 0); }

  std::string describe() const {
    std::ostringstream os;
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Poisson>) {
            os << "Pois(" << d.lambda << ")";
          } else if constexpr (std::is_same_v<T, NegativeBinomial>) {
            os << "NBin(" << d.size << "," << d.prob << ")";
          } else if constexpr (std::is_same_v<T, Geometric>) {
            os << "ge(" << d.pi << ")";
          } else {
            os << "Finite{0.." << d.probs.size() - 1 << "}";
          }
        },
        law_);
    return os.str();
  }

 private:
  explicit MarginalDist(Variant law) : law_(std::move(law)) {}

  // sum_{x >= from} x^p P(X = x) = (1-pi)^from E (from + X)^p by memorylessness,
  // with E X^j from the factorial moments j! ((1-pi)/pi)^j.
  static double geometric_tail_moment(double pi, int p, long long from) {
    if (pi == 1.0) return from == 0 && p == 0 ? 1.0 : 0.0;
    const double ratio = (1.0 - pi) / pi;
    const auto s2 = stirling2_table(std::max(p, 1));
    const double f = static_cast<double>(from);
    CompensatedSum acc;
    for (int j = 0; j <= p; ++j) {
      double raw = j == 0 ? 1.0 : 0.0;
      for (int k = 1; k <= j; ++k) raw += static_cast<double>(s2[j][k]) * factorial(k) * std::pow(ratio, k);
      acc += binomial(p, j) * std::pow(f, p - j) * raw;
    }
    return std::exp(f * std::log1p(-pi)) * acc.value();
  }

  // Generous upper bound on where searches may have to look.
  long long search_cap() const {
    return std::visit(
        [](const auto& d) -> long long {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Poisson>) {
            return static_cast<long long>(d.lambda + 60.0 * std::sqrt(d.lambda) + 2000.0);
          } else if constexpr (std::is_same_v<T, NegativeBinomial>) {
            const double mean = d.size * (1.0 - d.prob) / d.prob;
            return static_cast<long long>(200.0 * (mean + 1.0) / d.prob + 2000.0);
          } else if constexpr (std::is_same_v<T, Geometric>) {
            return static_cast<long long>(2000.0 / d.pi + 2000.0);
          } else {
            return static_cast<long long>(d.probs.size());
          }
        },
        law_);
  }

  Variant law_;
};

}  // namespace dosm
