#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "hetero/cdf.hpp"
#include "hetero/measures.hpp"
#include "hetero/policy.hpp"

namespace hetero {

enum class BoundKind { kGeneral, kBinaryTreatment, kStochastic };

std::string to_string(BoundKind kind);

/// Which pointwise upper envelope to integrate.
enum class UpperForm {
  kSharp,      // min{1 - alpha(y; x1), alpha(y; x0)}
  kMax,  // max{1 - alpha(y; x1), alpha(y; x0)}
};

UpperForm parse_upper_form(std::string_view name);
std::string to_string(UpperForm form);

struct BoundPair {
  double lower = 0.0;
  double upper = 0.0;
  BoundKind kind = BoundKind::kGeneral;
};

/// General bounds for P-CACE and N-CACE. The lower bound is the point
/// estimate itself (same draws, same arithmetic).
BoundPair bound_p_cace(const CdfModel& model, std::span<const double> w, const McConfig& cfg,
                       double x0 = 0.0, double x1 = 1.0, UpperForm form = UpperForm::kSharp);
BoundPair bound_n_cace(const CdfModel& model, std::span<const double> w, const McConfig& cfg,
                       double x0 = 0.0, double x1 = 1.0, UpperForm form = UpperForm::kSharp);

struct BinaryBounds {
  BoundPair positive;
  BoundPair negative;
};

/// Tighter bounds for a binary treatment. With p1 = P(X = 1 | W = w) and
/// F = alpha0 (1 - p1) + alpha1 p1, J0 = alpha0 (1 - p1), J1 = alpha1 p1:
///   l_P = max{0, alpha0 - alpha1, alpha0 - F, F - alpha1}
///   u_P = min{1 - alpha1, alpha0, 1 - J1 + J0, alpha0 - alpha1 + J1 + 1 - J0}
/// and the mirror image for N. Each bound lies inside the general one.
BinaryBounds bound_cace_binary(const CdfModel& model, const PropensityModel& propensity,
                               std::span<const double> w, const McConfig& cfg);

/// Pointwise envelopes of the binary-treatment bounds.
struct BinaryEnvelope {
  double lower_p, upper_p, lower_n, upper_n;
};
BinaryEnvelope binary_envelope(double alpha0, double alpha1, double p1);

/// Bounds for P-CPICE and N-CPICE under a policy pair.
BoundPair bound_p_cpice(const CdfModel& model, std::span<const double> w,
                        const PolicyPair& policies, const McConfig& cfg,
                        UpperForm form = UpperForm::kSharp);
BoundPair bound_n_cpice(const CdfModel& model, std::span<const double> w,
                        const PolicyPair& policies, const McConfig& cfg,
                        UpperForm form = UpperForm::kSharp);

/// Bound pairs (positive, negative) from precomputed curves.
std::pair<BoundPair, BoundPair> bounds_from_curves(const ArmCurves& curves, UpperForm form,
                                                   BoundKind kind);

}  // namespace hetero
