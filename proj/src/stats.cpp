#include "hetero/stats.hpp"

#include <algorithm>
#include <stdexcept>

namespace hetero {

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  CompensatedSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return std::sqrt(s.value() / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace hetero
