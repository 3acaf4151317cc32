#pragma once

#include <stdexcept>
#include <string>

namespace dosm {

/// Invalid arguments or violated preconditions (overlapping index sets,
/// out-of-range ranks, malformed distributions).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A combinatorial size limit was exceeded (too many components, path sets,
/// or support points).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// The requested operation needs a model feature this model does not have,
/// e.g. exact evaluation on an infinite support.
class UnsupportedModelError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical failure: non-convergent tail search, defective distribution
/// reached at evaluation time, infinite moments.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError(what);
}

}  // namespace detail
}  // namespace dosm
