#pragma once

// Dependent discrete random vectors on the non-negative integers.
//
// Every moment formula in this library consumes one query:
//   P(X_i <= m for i in low, X_j > m for j in up),
// exposed as JointModel::rect_prob and, for many queries at a fixed m, via
// JointModel::Slice.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dosm/error.hpp"
#include "dosm/marginal.hpp"
#include "dosm/mvg.hpp"
#include "dosm/numeric.hpp"
#include "dosm/subset.hpp"

namespace dosm {

/// Explicit joint pmf over finitely many integer vectors. Coordinates are
/// stored flat; for n <= 20 the probabilities of the 2^n "which coordinates
/// are <= m" patterns are accumulated for every m in one pass at build time.
class ExplicitFinitePmf {
 public:
  class Builder {
   public:
    explicit Builder(int n) : n_(n) {
      detail::require(n >= 1, "explicit pmf needs at least one coordinate");
      if (n > 32) throw CapacityError("explicit pmf supports at most 32 coordinates");
    }
    void reserve(std::size_t points) {
      coords_.reserve(points * n_);
      probs_.reserve(points);
    }
    Builder& add(std::span<const int> point, double prob) {
      detail::require(static_cast<int>(point.size()) == n_, "support point has the wrong length");
      detail::require(std::isfinite(prob) && prob >= 0.0, "explicit pmf probabilities must be non-negative");
      for (int v : point) detail::require(v >= 0, "support coordinates must be non-negative integers");
      coords_.insert(coords_.end(), point.begin(), point.end());
      probs_.push_back(prob);
      return *this;
    }
    Builder& add(std::initializer_list<int> point, double prob) {
      return add(std::span<const int>(point.begin(), point.size()), prob);
    }
    ExplicitFinitePmf build() && { return ExplicitFinitePmf(n_, std::move(coords_), std::move(probs_)); }

   private:
    int n_;
    std::vector<int> coords_;
    std::vector<double> probs_;
  };

  int n() const { return n_; }
  std::size_t size() const { return probs_.size(); }
  std::span<const int> point(std::size_t i) const { return {coords_.data() + i * n_, static_cast<std::size_t>(n_)}; }
  double prob(std::size_t i) const { return probs_[i]; }
  long long max_value() const { return max_value_; }

  /// Pattern table at threshold m: entry M is P({i : X_i <= m} == M).
  /// Empty span when m is outside [0, max_value) or the table was not built.
  std::span<const double> pattern_table(long long m) const {
    if (tables_.empty() || m < 0 || m >= max_value_) return {};
    const std::size_t width = std::size_t{1} << n_;
    return {tables_.data() + static_cast<std::size_t>(m) * width, width};
  }

  double rect_prob(Subset low, Subset up, long long m) const {
    if (m < 0) return low.empty() ? 1.0 : 0.0;
    if (m >= max_value_) return up.empty() ? 1.0 : 0.0;
    if (auto table = pattern_table(m); !table.empty()) {
      const Subset free = Subset::full(n_).minus(low | up);
      CompensatedSum s;
      for_each_submask(free, [&](Subset extra) { s += table[(low | extra).bits()]; });
      return s.value();
    }
    CompensatedSum s;
    for (std::size_t k = 0; k < probs_.size(); ++k) {
      const int* x = coords_.data() + k * n_;
      bool ok = true;
      for (std::uint32_t b = low.bits(); ok && b; b &= b - 1) ok = x[std::countr_zero(b)] <= m;
      for (std::uint32_t b = up.bits(); ok && b; b &= b - 1) ok = x[std::countr_zero(b)] > m;
      if (ok) s += probs_[k];
    }
    return s.value();
  }

  /// Marginal pmf of coordinate j.
  MarginalDist marginal(int j) const {
    std::vector<CompensatedSum> acc(static_cast<std::size_t>(max_value_) + 1);
    for (std::size_t k = 0; k < probs_.size(); ++k) acc[coords_[k * n_ + j]] += probs_[k];
    std::vector<double> probs(acc.size());
    for (std::size_t x = 0; x < acc.size(); ++x) probs[x] = acc[x].value();
    // Renormalize away the summation residue.
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (double& q : probs) q /= total;
    return MarginalDist::finite(std::move(probs));
  }

 private:
  static constexpr std::size_t kMaxTableEntries = std::size_t{1} << 24;

  ExplicitFinitePmf(int n, std::vector<int> coords, std::vector<double> probs)
      : n_(n), coords_(std::move(coords)), probs_(std::move(probs)) {
    detail::require(!probs_.empty(), "explicit pmf needs at least one support point");
    CompensatedSum total;
    for (double q : probs_) total += q;
    detail::require(std::abs(total.value() - 1.0) <= 1e-12, "explicit pmf probabilities must sum to 1 within 1e-12");
    max_value_ = *std::max_element(coords_.begin(), coords_.end());
    check_duplicates();
    build_tables();
  }

  void check_duplicates() const {
    const std::size_t count = probs_.size();
    // Mixed-radix keys when the box fits in 63 bits, lexicographic sort otherwise.
    const double radix = static_cast<double>(max_value_) + 1.0;
    if (n_ * std::log2(radix) < 63.0) {
      std::vector<std::uint64_t> keys(count);
      const auto base = static_cast<std::uint64_t>(max_value_) + 1;
      for (std::size_t k = 0; k < count; ++k) {
        std::uint64_t key = 0;
        for (int i = 0; i < n_; ++i) key = key * base + static_cast<std::uint64_t>(coords_[k * n_ + i]);
        keys[k] = key;
      }
      std::sort(keys.begin(), keys.end());
      if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
        throw ArgumentError("explicit pmf has duplicate support points");
      }
      return;
    }
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(coords_.begin() + a * n_, coords_.begin() + (a + 1) * n_,
                                          coords_.begin() + b * n_, coords_.begin() + (b + 1) * n_);
    };
    std::sort(order.begin(), order.end(), less);
    for (std::size_t k = 1; k < count; ++k) {
      if (!less(order[k - 1], order[k])) throw ArgumentError("explicit pmf has duplicate support points");
    }
  }

  void build_tables() {
    if (n_ > kMaxMaskComponents || max_value_ == 0) return;
    const std::size_t width = std::size_t{1} << n_;
    const auto levels = static_cast<std::size_t>(max_value_);
    if (width * levels > kMaxTableEntries) return;
    std::vector<CompensatedSum> acc(width * levels);
    std::vector<std::uint32_t> bits_at(levels + 1);
    for (std::size_t k = 0; k < probs_.size(); ++k) {
      const int* x = coords_.data() + k * n_;
      std::fill(bits_at.begin(), bits_at.end(), 0u);
      for (int i = 0; i < n_; ++i) bits_at[x[i]] |= std::uint32_t{1} << i;
      std::uint32_t mask = 0;
      for (std::size_t m = 0; m < levels; ++m) {
        mask |= bits_at[m];
        acc[m * width + mask] += probs_[k];
      }
    }
    tables_.resize(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) tables_[i] = acc[i].value();
  }

  int n_;
  std::vector<int> coords_;
  std::vector<double> probs_;
  long long max_value_ = 0;
  std::vector<double> tables_;
};

/// Mult(trials, probs) as an explicit pmf over all compositions of `trials`.
inline ExplicitFinitePmf multinomial_pmf(int trials, std::span<const double> probs) {
  const int n = static_cast<int>(probs.size());
  detail::require(trials >= 0, "multinomial trial count must be non-negative");
  detail::require(n >= 1, "multinomial needs at least one cell");
  CompensatedSum total;
  for (double q : probs) {
    detail::require(q > 0.0, "multinomial cell probabilities must be positive");
    total += q;
  }
  detail::require(std::abs(total.value() - 1.0) <= 1e-12, "multinomial probabilities must sum to 1");

  std::vector<double> log_p(n);
  for (int i = 0; i < n; ++i) log_p[i] = std::log(probs[i]);
  ExplicitFinitePmf::Builder builder(n);
  builder.reserve(static_cast<std::size_t>(binomial(trials + n - 1, n - 1)));
  std::vector<int> x(n, 0);
  const double log_fact_trials = std::lgamma(trials + 1.0);
  // Depth-first over compositions; `acc` carries sum_i (x_i log p_i - log x_i!).
  auto recurse = [&](auto&& self, int i, int left, double acc) -> void {
    if (i == n - 1) {
      x[i] = left;
      const double lp = log_fact_trials + acc + left * log_p[i] - std::lgamma(left + 1.0);
      builder.add(x, std::exp(lp));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      x[i] = v;
      self(self, i + 1, left - v, acc + v * log_p[i] - std::lgamma(v + 1.0));
    }
  };
  recurse(recurse, 0, trials, 0.0);
  return std::move(builder).build();
}

class JointModel {
 public:
  enum class Kind { explicit_pmf, independent, mvg };

  static JointModel explicit_pmf(ExplicitFinitePmf pmf, bool exchangeable = false) {
    JointModel jm;
    jm.n_ = pmf.n();
    jm.exchangeable_ = exchangeable;
    jm.data_ = std::make_shared<const Data>(std::move(pmf));
    return jm;
  }

  static JointModel independent(std::vector<MarginalDist> marginals, bool exchangeable = false) {
    detail::require(!marginals.empty(), "independent model needs at least one marginal");
    if (marginals.size() > 32) throw CapacityError("independent models support at most 32 coordinates");
    JointModel jm;
    jm.n_ = static_cast<int>(marginals.size());
    jm.exchangeable_ = exchangeable;
    jm.data_ = std::make_shared<const Data>(std::move(marginals));
    return jm;
  }

  /// n independent copies of one marginal; declared exchangeable.
  static JointModel iid(const MarginalDist& marginal, int n) {
    detail::require(n >= 1, "iid model needs n >= 1");
    return independent(std::vector<MarginalDist>(n, marginal), true);
  }

  static JointModel mvg(MvgParams params) {
    if (params.n() > 32) throw CapacityError("MVG joint models support at most 32 coordinates");
    JointModel jm;
    jm.n_ = params.n();
    jm.exchangeable_ = params.is_exchangeable();
    jm.data_ = std::make_shared<const Data>(MvgData::make(std::move(params)));
    return jm;
  }

  int n() const { return n_; }
  bool exchangeable() const { return exchangeable_; }
  Kind kind() const { return static_cast<Kind>(data_->index()); }

  const ExplicitFinitePmf* as_explicit() const { return std::get_if<ExplicitFinitePmf>(data_.get()); }
  const std::vector<MarginalDist>* as_independent() const { return std::get_if<std::vector<MarginalDist>>(data_.get()); }
  const MvgParams* as_mvg() const {
    const auto* m = std::get_if<MvgData>(data_.get());
    return m ? &m->params : nullptr;
  }

  /// Largest support point over all coordinates, when finite.
  std::optional<long long> max_support() const {
    if (const auto* e = as_explicit()) return e->max_value();
    if (const auto* ind = as_independent()) {
      long long mx = 0;
      for (const auto& d : *ind) {
        auto k = d.max_support();
        if (!k) return std::nullopt;
        mx = std::max(mx, *k);
      }
      return mx;
    }
    return std::nullopt;
  }
  bool finite_support() const { return max_support().has_value(); }

  /// Law of coordinate j (0-based). MVG coordinates are geometric.
  MarginalDist marginal(int j) const {
    check_index(j);
    if (const auto* e = as_explicit()) return e->marginal(j);
    if (const auto* ind = as_independent()) return (*ind)[j];
    const double theta = mvg_min_param(*as_mvg(), Subset::of({j}));
    return MarginalDist::geometric(1.0 - theta);
  }

  /// Evaluator for a fixed threshold m; amortizes per-m work across queries.
  class Slice {
   public:
    double rect_prob(Subset low, Subset up) const {
      const auto& data = *model_->data_;
      if (const auto* e = std::get_if<ExplicitFinitePmf>(&data)) return e->rect_prob(low, up, m_);
      if (std::holds_alternative<std::vector<MarginalDist>>(data)) {
        double prod = 1.0;
        for (std::uint32_t b = low.bits(); b; b &= b - 1) prod *= cdf_[std::countr_zero(b)];
        for (std::uint32_t b = up.bits(); b; b &= b - 1) prod *= sf_[std::countr_zero(b)];
        return prod;
      }
      // Inclusion-exclusion over the "<= m" coordinates:
      // sum_{A subset low} (-1)^|A| P(min over A u up > m).
      CompensatedSum s;
      for_each_submask(low, [&](Subset a) {
        const double v = min_survival(a | up);
        s += (a.size() % 2 == 0) ? v : -v;
      });
      return s.value();
    }

    long long threshold() const { return m_; }

   private:
    friend class JointModel;
    Slice(const JointModel& model, long long m) : model_(&model), m_(m) {
      const auto& data = *model.data_;
      if (const auto* ind = std::get_if<std::vector<MarginalDist>>(&data)) {
        cdf_.reserve(ind->size());
        sf_.reserve(ind->size());
        for (const auto& d : *ind) {
          cdf_.push_back(d.cdf(m));
          sf_.push_back(d.survival(m));
        }
      } else if (const auto* mv = std::get_if<MvgData>(&data)) {
        if (!mv->min_theta.empty() && model.n_ <= 12) {
          powered_.resize(mv->min_theta.size());
          for (std::size_t k = 0; k < powered_.size(); ++k) powered_[k] = power(mv->min_theta[k]);
        }
      }
    }

    double power(double theta) const {
      if (m_ < 0) return 1.0;
      return std::pow(theta, static_cast<double>(m_ + 1));
    }

    // P(X_i > m for all i in k).
    double min_survival(Subset k) const {
      if (k.empty()) return 1.0;
      if (!powered_.empty()) return powered_[k.bits()];
      const auto& mv = std::get<MvgData>(*model_->data_);
      if (!mv.min_theta.empty()) return power(mv.min_theta[k.bits()]);
      return power(mvg_min_param(mv.params, k));
    }

    const JointModel* model_;
    long long m_;
    std::vector<double> cdf_, sf_, powered_;
  };

  /// The returned slice borrows this model and must not outlive it.
  Slice slice(long long m) const {
    detail::require(m >= -1, "threshold m must be >= -1");
    return Slice(*this, m);
  }

  /// P(X_i <= m, i in low; X_j > m, j in up).
  double rect_prob(Subset low, Subset up, long long m) const {
    check_sets(low, up);
    return slice(m).rect_prob(low, up);
  }

  /// P(X_j > m), j 0-based.
  double marginal_survival(int j, long long m) const {
    check_index(j);
    detail::require(m >= -1, "threshold m must be >= -1");
    return rect_prob(Subset{}, Subset::of({j}), m);
  }

  void check_sets(Subset low, Subset up) const {
    detail::require(!low.intersects(up), "low and up index sets overlap");
    detail::require(Subset::full(n_).contains(low | up), "index set refers to a component beyond n");
  }

 private:
  struct MvgData {
    MvgParams params;
    std::vector<double> min_theta;  // theta(K) for every mask K when n <= 20

    static MvgData make(MvgParams params) {
      MvgData d{std::move(params), {}};
      const int n = d.params.n();
      if (n <= kMaxMaskComponents) {
        const std::size_t width = std::size_t{1} << n;
        d.min_theta.assign(width, 1.0);
        if (d.params.is_exchangeable()) {
          std::vector<double> by_size(n + 1, 1.0);
          for (int s = 1; s <= n; ++s) by_size[s] = mvg_min_param_exchangeable(d.params, s);
          for (std::size_t k = 1; k < width; ++k) d.min_theta[k] = by_size[std::popcount(static_cast<std::uint32_t>(k))];
        } else {
          for (std::size_t k = 1; k < width; ++k) d.min_theta[k] = mvg_min_param(d.params, Subset(static_cast<std::uint32_t>(k)));
        }
      }
      return d;
    }
  };
  using Data = std::variant<ExplicitFinitePmf, std::vector<MarginalDist>, MvgData>;

  void check_index(int j) const {
    detail::require(j >= 0 && j < n_, "component index " + std::to_string(j) + " out of range");
  }

  int n_ = 0;
  bool exchangeable_ = false;
  std::shared_ptr<const Data> data_;
};

}  // namespace dosm
