#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hetero/rng.hpp"

namespace hetero {

/// Distribution of the treatment value a stochastic intervention assigns.
struct BaseLaw {
  enum class Kind { kDirac, kUniform, kNormal, kEmpirical };
  Kind kind = Kind::kDirac;
  double a = 0.0;  // dirac point, uniform lo, normal mean
  double b = 0.0;  // uniform hi, normal sd
  std::vector<double> support;  // empirical: observed treatment values

  static BaseLaw dirac(double x) { return {Kind::kDirac, x, 0.0, {}}; }
  static BaseLaw uniform(double lo, double hi);
  static BaseLaw normal(double mean, double sd);
  static BaseLaw empirical(std::vector<double> values);

  double sample(Rng& rng) const;
  std::string describe() const;
};

/// pi(x | w): a base draw shifted by a fixed offset.
struct InterventionPolicy {
  BaseLaw base;
  double offset = 0.0;

  static InterventionPolicy dirac(double x) { return {BaseLaw::dirac(x), 0.0}; }
  double sample(Rng& rng) const { return base.sample(rng) + offset; }
};

/// (pi0, pi1) together with how their draws are joined. Coupled pairs share
/// one base draw (x0 = b + offset0, x1 = b + offset1), which is the
/// "(X, X + d)" construction of shift interventions. Uncoupled pairs draw
/// independently from pi0 x pi1.
struct PolicyPair {
  InterventionPolicy pi0;
  InterventionPolicy pi1;
  bool coupled = false;

  static PolicyPair dirac(double x0, double x1);
  static PolicyPair single_shift(BaseLaw base, double d);
  static PolicyPair double_shift(BaseLaw base, double d);
  static PolicyPair independent(InterventionPolicy pi0, InterventionPolicy pi1);

  /// Swaps the roles of pi0 and pi1.
  PolicyPair swapped() const { return {pi1, pi0, coupled}; }

  std::pair<double, double> sample(Rng& rng) const;
  std::string describe() const;
};

/// N1 joint draws (x0_j, x1_j).
struct PolicyPairSample {
  std::vector<double> x0;
  std::vector<double> x1;
  std::size_t size() const { return x0.size(); }
};

PolicyPairSample draw_policy_pairs(const PolicyPair& pair, std::size_t n1,
                                   std::uint64_t seed);

/// Parses a policy pair:
///   dirac:X0:X1
///   single_shift:BASE:D        (X, X + D)
///   double_shift:BASE:D        (X - D, X + D)
///   independent:BASE0:BASE1
/// where BASE is uniform(lo,hi), normal(mean,sd), dirac(x) or empirical.
/// An empirical base takes its support from `empirical_support`.
PolicyPair parse_policy_pair(std::string_view text,
                             const std::vector<double>& empirical_support = {});

}  // namespace hetero
