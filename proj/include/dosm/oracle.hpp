#pragma once

// Ground truth independent of the tail-sum machinery: exhaustive enumeration
// of finite supports and seeded Monte Carlo.
//
// Streams: samples are drawn in chunks of kMcChunk; chunk c uses an
// mt19937_64 seeded with splitmix64(seed + (c + 1) * 0x9E3779B97F4A7C15).
// Chunk statistics are merged in chunk order, so estimates depend only on
// (seed, n_samples).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "dosm/coherent.hpp"
#include "dosm/error.hpp"
#include "dosm/joint_model.hpp"
#include "dosm/marginal.hpp"
#include "dosm/mvg.hpp"
#include "dosm/numeric.hpp"

namespace dosm {

inline constexpr const char* kRngName = "mt19937_64/splitmix64-chunked";
inline constexpr std::size_t kMcChunk = 65536;
inline constexpr double kMaxEnumerationPoints = 16777216.0;  // 2^24

struct RankStatistic {
  int r;  // 1-based
};

/// r-th smallest coordinate, or a system lifetime.
class Statistic {
 public:
  Statistic(RankStatistic r) : v_(r) {}  // NOLINT(google-explicit-constructor)
  Statistic(SystemStructure s) : v_(std::move(s)) {}  // NOLINT(google-explicit-constructor)

  long long operator()(std::span<const long long> x) const {
    if (const auto* r = std::get_if<RankStatistic>(&v_)) {
      scratch_.assign(x.begin(), x.end());
      std::nth_element(scratch_.begin(), scratch_.begin() + (r->r - 1), scratch_.end());
      return scratch_[r->r - 1];
    }
    return std::get<SystemStructure>(v_).lifetime(x);
  }

  void check(int n) const {
    if (const auto* r = std::get_if<RankStatistic>(&v_)) {
      detail::require(r->r >= 1 && r->r <= n, "rank r must satisfy 1 <= r <= n");
    } else {
      detail::require(std::get<SystemStructure>(v_).n() == n, "system size does not match model dimension");
    }
  }

 private:
  std::variant<RankStatistic, SystemStructure> v_;
  mutable std::vector<long long> scratch_;
};

/// sum over the support of statistic(x)^p P(x).
inline double enumerate_moment(const JointModel& model, const Statistic& stat, int p) {
  const int n = model.n();
  stat.check(n);
  detail::require(p >= 1, "moment order p must be positive");
  CompensatedSum acc;
  std::vector<long long> x(n);
  if (const auto* e = model.as_explicit()) {
    if (static_cast<double>(e->size()) > kMaxEnumerationPoints) throw CapacityError("support exceeds 2^24 points");
    for (std::size_t k = 0; k < e->size(); ++k) {
      const auto pt = e->point(k);
      std::copy(pt.begin(), pt.end(), x.begin());
      acc += std::pow(static_cast<double>(stat(x)), p) * e->prob(k);
    }
    return acc.value();
  }
  const auto* ind = model.as_independent();
  if (!ind || !model.finite_support()) throw UnsupportedModelError("enumeration needs a finite-support model");
  std::vector<std::vector<double>> pmfs;
  double points = 1.0;
  for (const auto& d : *ind) {
    const auto top = *d.max_support();
    std::vector<double> pmf(static_cast<std::size_t>(top) + 1);
    for (long long v = 0; v <= top; ++v) pmf[v] = d.pmf(v);
    points *= static_cast<double>(pmf.size());
    pmfs.push_back(std::move(pmf));
  }
  if (points > kMaxEnumerationPoints) throw CapacityError("support exceeds 2^24 points");
  std::fill(x.begin(), x.end(), 0);
  while (true) {
    double prob = 1.0;
    for (int i = 0; i < n; ++i) prob *= pmfs[i][x[i]];
    if (prob > 0.0) acc += std::pow(static_cast<double>(stat(x)), p) * prob;
    int i = 0;
    while (i < n && ++x[i] == static_cast<long long>(pmfs[i].size())) x[i++] = 0;
    if (i == n) break;
  }
  return acc.value();
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(seed + (stream + 1) * 0x9E3779B97F4A7C15ULL));
}

/// Uniform on (0, 1], 53-bit resolution.
inline double uniform_open0(std::mt19937_64& rng) { return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53; }

/// Number of survived cycles of ge(1 - theta): P(M > k) = theta^(k+1).
inline long long geometric_by_theta(double theta, std::mt19937_64& rng) {
  if (theta <= 0.0) return 0;
  if (theta >= 1.0) return std::numeric_limits<long long>::max();
  const double v = std::floor(std::log(uniform_open0(rng)) / std::log(theta));
  return v >= 9.0e18 ? std::numeric_limits<long long>::max() : static_cast<long long>(v);
}

// Inversion through a cdf table covering all but ~1e-16 of the mass; the rare
// draws beyond it continue by sequential pmf accumulation.
class MarginalSampler {
 public:
  explicit MarginalSampler(MarginalDist d) : dist_(std::move(d)) {
    if (const auto* g = std::get_if<Geometric>(&dist_.law())) {
      theta_ = 1.0 - g->pi;
      return;
    }
    const long long top = dist_.max_support() ? *dist_.max_support() : dist_.tail_quantile(1e-16);
    CompensatedSum cum;
    for (long long x = 0; x <= top; ++x) {
      cum += dist_.pmf(x);
      cdf_.push_back(cum.value());
    }
    if (dist_.max_support()) cdf_.back() = 1.0;
  }

  long long operator()(std::mt19937_64& rng) const {
    if (theta_) return geometric_by_theta(*theta_, rng);
    const double u = 1.0 - uniform_open0(rng);  // [0, 1)
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it != cdf_.end()) return it - cdf_.begin();
    long long x = static_cast<long long>(cdf_.size());
    double cum = cdf_.back();
    while (true) {
      cum += dist_.pmf(x);
      if (cum > u || dist_.pmf(x) == 0.0) return x;
      ++x;
    }
  }

 private:
  MarginalDist dist_;
  std::optional<double> theta_;
  std::vector<double> cdf_;
};

}  // namespace detail

/// Draws from X_i = min{M_I : I contains i} with independent M_I ~ ge(1 - theta_I).
class MvgSampler {
 public:
  explicit MvgSampler(const MvgParams& params) : n_(params.n()), shocks_(params.expanded_shocks()) {}

  void operator()(std::mt19937_64& rng, std::span<long long> out) const {
    std::fill(out.begin(), out.end(), std::numeric_limits<long long>::max());
    for (const auto& s : shocks_) {
      const long long m = detail::geometric_by_theta(s.theta, rng);
      for (std::uint32_t b = s.set.bits(); b; b &= b - 1) {
        long long& x = out[std::countr_zero(b)];
        x = std::min(x, m);
      }
    }
  }

  /// Cycle-by-cycle shock process: in every cycle each shock whose set still
  /// has working members strikes with probability 1 - theta_I and destroys
  /// them. Returns the number of cycles each component survived.
  void cycles(std::mt19937_64& rng, std::span<long long> out) const {
    Subset alive = Subset::full(n_);
    for (long long t = 0; !alive.empty(); ++t) {
      Subset killed;
      for (const auto& s : shocks_) {
        if (!s.set.intersects(alive)) continue;
        if (detail::uniform_open0(rng) > s.theta) killed = killed | (s.set & alive);
      }
      for (int i : killed.indices()) out[i] = t;
      alive = alive.minus(killed);
    }
  }

  int n() const { return n_; }

 private:
  int n_;
  std::vector<ShockParam> shocks_;
};

/// One MVG draw from its own seeded stream.
inline std::vector<long long> sample_mvg(const MvgParams& params, std::uint64_t seed, bool use_cycles = false) {
  MvgSampler sampler(params);
  auto rng = detail::stream_rng(seed, 0);
  std::vector<long long> x(params.n());
  if (use_cycles) {
    sampler.cycles(rng, x);
  } else {
    sampler(rng, x);
  }
  return x;
}

/// Draws full vectors from any JointModel.
class JointSampler {
 public:
  explicit JointSampler(const JointModel& model) : model_(&model) {
    if (const auto* e = model.as_explicit()) {
      CompensatedSum cum;
      cdf_.reserve(e->size());
      for (std::size_t k = 0; k < e->size(); ++k) {
        cum += e->prob(k);
        cdf_.push_back(cum.value());
      }
      cdf_.back() = 1.0;
    } else if (const auto* ind = model.as_independent()) {
      for (const auto& d : *ind) marginals_.emplace_back(d);
    } else {
      mvg_.emplace(*model.as_mvg());
    }
  }

  void operator()(std::mt19937_64& rng, std::span<long long> out) const {
    if (mvg_) {
      (*mvg_)(rng, out);
    } else if (!marginals_.empty()) {
      for (std::size_t i = 0; i < marginals_.size(); ++i) out[i] = marginals_[i](rng);
    } else {
      const double u = 1.0 - detail::uniform_open0(rng);
      const std::size_t k = std::min<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin(), cdf_.size() - 1);
      const auto pt = model_->as_explicit()->point(k);
      std::copy(pt.begin(), pt.end(), out.begin());
    }
  }

 private:
  const JointModel* model_;
  std::vector<double> cdf_;
  std::vector<detail::MarginalSampler> marginals_;
  std::optional<MvgSampler> mvg_;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Sample mean of statistic(X)^p with its standard error.
inline McEstimate mc_moment(const JointModel& model, const Statistic& stat, int p, std::size_t n_samples,
                            std::uint64_t seed) {
  stat.check(model.n());
  detail::require(p >= 1, "moment order p must be positive");
  detail::require(n_samples >= 1000, "Monte Carlo needs at least 1000 samples");
  const JointSampler sampler(model);
  std::vector<long long> x(model.n());
  // Chan et al. pairwise merge of (count, mean, M2) per chunk.
  double count = 0.0, mean = 0.0, m2 = 0.0;
  const std::size_t chunks = (n_samples + kMcChunk - 1) / kMcChunk;
  for (std::size_t c = 0; c < chunks; ++c) {
    auto rng = detail::stream_rng(seed, c);
    const std::size_t size = std::min(kMcChunk, n_samples - c * kMcChunk);
    double cm = 0.0, cm2 = 0.0;
    for (std::size_t k = 0; k < size; ++k) {
      sampler(rng, x);
      const double v = std::pow(static_cast<double>(stat(x)), p);
      const double delta = v - cm;
      cm += delta / static_cast<double>(k + 1);
      cm2 += delta * (v - cm);
    }
    const double cs = static_cast<double>(size);
    const double total = count + cs;
    const double delta = cm - mean;
    mean += delta * cs / total;
    m2 += cm2 + delta * delta * count * cs / total;
    count = total;
  }
  const double variance = count > 1.0 ? m2 / (count - 1.0) : 0.0;
  return {mean, std::sqrt(variance / count), n_samples};
}

}  // namespace dosm
