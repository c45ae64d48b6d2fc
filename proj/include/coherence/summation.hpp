#pragma once

#include <cmath>

namespace coherence {

// Neumaier-compensated accumulator in extended precision. Reduction order is
// the caller's loop order, so results are run-to-run identical.
class CompensatedSum {
 public:
  void add(long double x) {
    const long double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      carry_ += (sum_ - t) + x;
    else
      carry_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(long double x) {
    add(x);
    return *this;
  }
  double value() const { return static_cast<double>(sum_ + carry_); }

 private:
  long double sum_ = 0.0L;
  long double carry_ = 0.0L;
};

}  // namespace coherence
