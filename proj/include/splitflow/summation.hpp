#pragma once

#include <cmath>

namespace splitflow {

// Neumaier-compensated accumulator. Reductions over modes are specified to
// run in ascending mode order with compensation so that results do not depend
// on how work was scheduled.
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

    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace splitflow
