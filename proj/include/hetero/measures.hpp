#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hetero/cdf.hpp"
#include "hetero/dataset.hpp"
#include "hetero/policy.hpp"

namespace hetero {

enum class YSampling {
  kUniformRandom,        // i.i.d. U[a, b]
  kStratifiedMidpoints,  // midpoints of n2 equal cells
};

/// Monte Carlo settings: n1 policy draws, n2 outcome draws on [a, b].
struct McConfig {
  std::size_t n1 = 10;
  std::size_t n2 = 100;
  YBounds bounds;
  std::uint64_t seed = 0;
  YSampling sampling = YSampling::kUniformRandom;

  void validate() const;
};

/// Outcome points y_1..y_n2, shared by every estimator run with this config.
std::vector<double> draw_y(const McConfig& cfg);
/// Policy draws (x0_j, x1_j), j = 1..n1, from the config's policy stream.
PolicyPairSample draw_policy_sample(const PolicyPair& pair, const McConfig& cfg);

/// alpha(y_k; x0_j, w) and alpha(y_k; x1_j, w) on the shared y-draws.
struct ArmCurves {
  double width = 0.0;  // b - a
  std::vector<double> y;
  std::vector<std::vector<double>> f0;  // [j][k]
  std::vector<std::vector<double>> f1;

  std::size_t n1() const { return f0.size(); }
  std::size_t n2() const { return y.size(); }
};

ArmCurves arm_curves(const CdfModel& model, std::span<const double> w,
                     const PolicyPairSample& draws, const McConfig& cfg);

/// (b - a) / (n1 n2) * sum_j sum_k g(f0[j][k], f1[j][k]), summed in a fixed
/// order so that pointwise-ordered integrands give ordered results.
double integrate(const ArmCurves& curves, const std::function<double(double, double)>& g);

struct EffectEstimate {
  double total = 0.0;
  double positive = 0.0;
  double negative = 0.0;
};

/// CACE, P-CACE and N-CACE at w for the switch x0 -> x1 (default 0 -> 1),
/// all on one set of y-draws:
///   P = (b-a)/n2 sum_k max{alpha(y_k; x0, w) - alpha(y_k; x1, w), 0}.
EffectEstimate estimate_cace_parts(const CdfModel& model, std::span<const double> w,
                                   const McConfig& cfg, double x0 = 0.0, double x1 = 1.0);
double estimate_cace(const CdfModel& model, std::span<const double> w, const McConfig& cfg,
                     double x0 = 0.0, double x1 = 1.0);
double estimate_p_cace(const CdfModel& model, std::span<const double> w, const McConfig& cfg,
                       double x0 = 0.0, double x1 = 1.0);
double estimate_n_cace(const CdfModel& model, std::span<const double> w, const McConfig& cfg,
                       double x0 = 0.0, double x1 = 1.0);

/// CPICE family under stochastic interventions, averaged over n1 policy draws.
EffectEstimate estimate_cpice_parts(const CdfModel& model, std::span<const double> w,
                                    const PolicyPair& policies, const McConfig& cfg);
double estimate_cpice(const CdfModel& model, std::span<const double> w,
                      const PolicyPair& policies, const McConfig& cfg);
double estimate_p_cpice(const CdfModel& model, std::span<const double> w,
                        const PolicyPair& policies, const McConfig& cfg);
double estimate_n_cpice(const CdfModel& model, std::span<const double> w,
                        const PolicyPair& policies, const McConfig& cfg);

/// Effect parts from precomputed curves.
EffectEstimate effect_parts(const ArmCurves& curves);

}  // namespace hetero
