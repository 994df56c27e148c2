#pragma once

#include <cmath>

namespace blevy {

// Kahan-Babuska-Neumaier compensated accumulator. The running compensation
// captures the rounding error of every addition exactly (TwoSum), so the
// result does not depend on magnitude ordering of the inputs.
class CompensatedSum {
 public:
  constexpr CompensatedSum() noexcept = default;

  constexpr void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  constexpr CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  constexpr double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace blevy
