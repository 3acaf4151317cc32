#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dosm/error.hpp"

namespace dosm {

/// Neumaier-compensated running sum. Deterministic for a fixed add order.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Fixed-shape pairwise reduction: the result depends only on the input
/// order, never on how the terms were produced.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const auto half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// Binomial coefficient C(n, k) as a double; 0 when k < 0 or k > n.
/// Exact while the value fits in 53 bits.
inline double binomial(long long n, long long k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (long long i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return r < 9.0e15 ? std::round(r) : r;
}

/// Exact C(n, k) for small arguments.
inline std::int64_t binomial_int(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double factorial(int p) {
  double r = 1.0;
  for (int i = 2; i <= p; ++i) r *= i;
  return r;
}

/// (m+1)^p - m^p, the weight of P(X > m) in the tail-sum moment identity.
inline double power_increment(long long m, int p) {
  const double a = static_cast<double>(m);
  if (p == 1) return 1.0;
  if (p == 2) return 2.0 * a + 1.0;
  // sum_{k<p} C(p,k) m^k avoids cancellation for large m.
  double s = 0.0;
  double mk = 1.0;
  for (int k = 0; k < p; ++k) {
    s += binomial(p, k) * mk;
    mk *= a;
  }
  return s;
}

/// Stirling numbers of the second kind S2(q, k) for 0 <= k <= q <= p_max.
inline std::vector<std::vector<std::int64_t>> stirling2_table(int p_max) {
  std::vector<std::vector<std::int64_t>> s(p_max + 1, std::vector<std::int64_t>(p_max + 1, 0));
  s[0][0] = 1;
  for (int q = 1; q <= p_max; ++q) {
    for (int k = 1; k <= q; ++k) s[q][k] = k * s[q - 1][k] + s[q - 1][k - 1];
  }
  return s;
}

}  // namespace dosm
