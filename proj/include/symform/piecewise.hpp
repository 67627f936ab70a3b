#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "symform/error.hpp"

namespace symform {

template <class T>
T zero_value() {
  if constexpr (std::is_arithmetic_v<T>)
    return T{0};
  else
    return T::Zero();
}

/// Right-continuous piecewise-constant signal given by breakpoint lists.
/// Value is zero before the first breakpoint; the last value holds forever.
template <class T>
class PiecewiseConstant {
 public:
  PiecewiseConstant() = default;

  PiecewiseConstant(std::vector<double> starts, std::vector<T> values)
      : starts_(std::move(starts)), values_(std::move(values)) {
    detail::require(starts_.size() == values_.size(), ErrorCode::ShapeError,
                    "PiecewiseConstant: breakpoint and value counts differ");
    for (std::size_t k = 1; k < starts_.size(); ++k)
      detail::require(starts_[k] > starts_[k - 1], ErrorCode::InvalidValue,
                      "PiecewiseConstant: breakpoints must be strictly increasing");
  }

  static PiecewiseConstant constant(T value) { return PiecewiseConstant({0.0}, {std::move(value)}); }

  T at(double t) const {
    const auto it = std::upper_bound(starts_.begin(), starts_.end(), t);
    if (it == starts_.begin()) return zero_;
    return values_[static_cast<std::size_t>(it - starts_.begin() - 1)];
  }

  /// Exact integral over [a, b], a <= b.
  T integral(double a, double b) const {
    T acc = zero_;
    double lo = a;
    while (lo < b) {
      const auto it = std::upper_bound(starts_.begin(), starts_.end(), lo);
      const double hi = it == starts_.end() ? b : std::min(b, *it);
      acc = acc + at(lo) * (hi - lo);
      lo = hi;
    }
    return acc;
  }

  const std::vector<double>& breakpoints() const { return starts_; }
  const std::vector<T>& values() const { return values_; }
  bool empty() const { return starts_.empty(); }

 private:
  std::vector<double> starts_;
  std::vector<T> values_;
  T zero_ = zero_value<T>();
};

}  // namespace symform
