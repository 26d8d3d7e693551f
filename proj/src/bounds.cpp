#include "hetero/bounds.hpp"

#include <algorithm>

#include "hetero/error.hpp"

namespace hetero {

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::kGeneral: return "general";
    case BoundKind::kBinaryTreatment: return "binary";
    case BoundKind::kStochastic: return "stochastic";
  }
  return "general";
}

UpperForm parse_upper_form(std::string_view name) {
  if (name == "sharp") return UpperForm::kSharp;
  if (name == "max") return UpperForm::kMax;
  throw InvalidArgument("unknown upper-bound form: " + std::string(name));
}

std::string to_string(UpperForm form) {
  return form == UpperForm::kSharp ? "sharp" : "max";
}

namespace {

double upper_envelope(double hi_arm_cdf, double lo_arm_cdf, UpperForm form) {
  // Positive part uses (alpha(x0), alpha(x1)); the caller swaps for negative.
  return form == UpperForm::kSharp ? std::min(1.0 - lo_arm_cdf, hi_arm_cdf)
                                   : std::max(1.0 - lo_arm_cdf, hi_arm_cdf);
}

}  // namespace

std::pair<BoundPair, BoundPair> bounds_from_curves(const ArmCurves& curves, UpperForm form,
                                                   BoundKind kind) {
  const EffectEstimate parts = effect_parts(curves);
  BoundPair p{parts.positive,
              integrate(curves, [form](double c, double d) { return upper_envelope(c, d, form); }),
              kind};
  BoundPair n{parts.negative,
              integrate(curves, [form](double c, double d) { return upper_envelope(d, c, form); }),
              kind};
  return {p, n};
}

BoundPair bound_p_cace(const CdfModel& model, std::span<const double> w, const McConfig& cfg,
                       double x0, double x1, UpperForm form) {
  McConfig single = cfg;
  single.n1 = 1;
  const auto curves = arm_curves(model, w, PolicyPairSample{{x0}, {x1}}, single);
  return bounds_from_curves(curves, form, BoundKind::kGeneral).first;
}

BoundPair bound_n_cace(const CdfModel& model, std::span<const double> w, const McConfig& cfg,
                       double x0, double x1, UpperForm form) {
  McConfig single = cfg;
  single.n1 = 1;
  const auto curves = arm_curves(model, w, PolicyPairSample{{x0}, {x1}}, single);
  return bounds_from_curves(curves, form, BoundKind::kGeneral).second;
}

BinaryEnvelope binary_envelope(double a0, double a1, double p1) {
  const double f = a0 * (1.0 - p1) + a1 * p1;
  const double j0 = a0 * (1.0 - p1);
  const double j1 = a1 * p1;
  BinaryEnvelope e{};
  e.lower_p = std::max({0.0, a0 - a1, a0 - f, f - a1});
  e.upper_p = std::min({1.0 - a1, a0, 1.0 - j1 + j0, a0 - a1 + j1 + 1.0 - j0});
  e.lower_n = std::max({0.0, a1 - a0, a1 - f, f - a0});
  e.upper_n = std::min({1.0 - a0, a1, 1.0 - j0 + j1, a1 - a0 + j0 + 1.0 - j1});
  return e;
}

BinaryBounds bound_cace_binary(const CdfModel& model, const PropensityModel& propensity,
                               std::span<const double> w, const McConfig& cfg) {
  McConfig single = cfg;
  single.n1 = 1;
  const auto curves = arm_curves(model, w, PolicyPairSample{{0.0}, {1.0}}, single);
  const double p1 = propensity.treated(w);
  auto pick = [&](auto member) {
    return integrate(curves, [&](double c, double d) { return binary_envelope(c, d, p1).*member; });
  };
  BinaryBounds out;
  out.positive = {pick(&BinaryEnvelope::lower_p), pick(&BinaryEnvelope::upper_p),
                  BoundKind::kBinaryTreatment};
  out.negative = {pick(&BinaryEnvelope::lower_n), pick(&BinaryEnvelope::upper_n),
                  BoundKind::kBinaryTreatment};
  return out;
}

BoundPair bound_p_cpice(const CdfModel& model, std::span<const double> w,
                        const PolicyPair& policies, const McConfig& cfg, UpperForm form) {
  const auto curves = arm_curves(model, w, draw_policy_sample(policies, cfg), cfg);
  return bounds_from_curves(curves, form, BoundKind::kStochastic).first;
}

BoundPair bound_n_cpice(const CdfModel& model, std::span<const double> w,
                        const PolicyPair& policies, const McConfig& cfg, UpperForm form) {
  const auto curves = arm_curves(model, w, draw_policy_sample(policies, cfg), cfg);
  return bounds_from_curves(curves, form, BoundKind::kStochastic).second;
}

}  // namespace hetero
