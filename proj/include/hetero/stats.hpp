#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace hetero {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  void add(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double mean(std::span<const double> v);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sample_sd(std::span<const double> v);

/// Linear-interpolation quantile (R type 7) of unsorted data, p in [0, 1].
double quantile(std::vector<double> v, double p);

}  // namespace hetero
