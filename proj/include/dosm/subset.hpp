#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "dosm/error.hpp"

namespace dosm {

/// Largest index set handled through bitmask enumeration.
inline constexpr int kMaxMaskComponents = 20;

/// A subset of component indices {0, ..., n-1} stored as a bitmask.
/// Indices are 0-based in the API; configs and reports use 1-based labels.
class Subset {
 public:
  constexpr Subset() = default;
  constexpr explicit Subset(std::uint32_t bits) : bits_(bits) {}

  static Subset of(std::initializer_list<int> indices) {
    return of(std::span<const int>(indices.begin(), indices.size()));
  }
  static Subset of(std::span<const int> indices) {
    std::uint32_t bits = 0;
    for (int i : indices) {
      detail::require(i >= 0 && i < 32, "component index out of range: " + std::to_string(i));
      bits |= std::uint32_t{1} << i;
    }
    return Subset(bits);
  }
  static constexpr Subset full(int n) {
    return Subset(n >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << n) - 1);
  }

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool contains(int i) const { return (bits_ >> i) & 1u; }
  constexpr bool contains(Subset other) const { return (other.bits_ & ~bits_) == 0; }
  constexpr bool intersects(Subset other) const { return (bits_ & other.bits_) != 0; }

  constexpr Subset operator|(Subset o) const { return Subset(bits_ | o.bits_); }
  constexpr Subset operator&(Subset o) const { return Subset(bits_ & o.bits_); }
  constexpr Subset minus(Subset o) const { return Subset(bits_ & ~o.bits_); }
  constexpr Subset complement(int n) const { return full(n).minus(*this); }

  constexpr auto operator<=>(const Subset&) const = default;

  std::vector<int> indices() const {
    std::vector<int> out;
    for (std::uint32_t b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b));
    return out;
  }

  /// "{1,3,5}" with 1-based labels.
  std::string label() const {
    std::string s = "{";
    bool first = true;
    for (int i : indices()) {
      if (!first) s += ',';
      s += std::to_string(i + 1);
      first = false;
    }
    return s + "}";
  }

 private:
  std::uint32_t bits_ = 0;
};

inline void require_mask_capacity(int n, const char* what) {
  if (n > kMaxMaskComponents) {
    throw CapacityError(std::string(what) + ": n = " + std::to_string(n) + " exceeds the subset-enumeration cap of " +
                        std::to_string(kMaxMaskComponents));
  }
}

/// Calls f(Subset) for every k-element subset of {0..n-1} in increasing
/// bitmask order (Gosper's hack).
template <typename F>
void for_each_subset_of_size(int n, int k, F&& f) {
  if (k < 0 || k > n) return;
  if (k == 0) {
    f(Subset{});
    return;
  }
  const std::uint64_t limit = std::uint64_t{1} << n;
  std::uint64_t v = (std::uint64_t{1} << k) - 1;
  while (v < limit) {
    f(Subset(static_cast<std::uint32_t>(v)));
    const std::uint64_t t = v | (v - 1);
    v = (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
  }
}

/// Calls f(Subset) for every subset of `set` (including the empty set and
/// `set` itself), in decreasing bitmask order.
template <typename F>
void for_each_submask(Subset set, F&& f) {
  std::uint32_t s = set.bits();
  for (std::uint32_t sub = s;; sub = (sub - 1) & s) {
    f(Subset(sub));
    if (sub == 0) break;
  }
}

}  // namespace dosm
