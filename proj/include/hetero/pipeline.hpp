#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hetero/bounds.hpp"
#include "hetero/cdf.hpp"
#include "hetero/dataset.hpp"
#include "hetero/inference.hpp"
#include "hetero/measures.hpp"
#include "hetero/policy.hpp"

namespace hetero {

enum class Measure { kCace, kPCace, kNCace, kCpice, kPCpice, kNCpice };

Measure parse_measure(std::string_view name);
std::string to_string(Measure m);
std::vector<Measure> all_measures();
std::vector<Measure> parse_measure_list(std::string_view csv);
bool is_policy_measure(Measure m);

/// Everything needed to go from a dataset to the six measures at one w.
struct EstimationPlan {
  std::vector<double> w;
  double x0 = 0.0;
  double x1 = 1.0;
  std::optional<PolicyPair> policy;  // required for the CPICE family
  McConfig mc;                        // mc.bounds is overwritten by y_bounds
  std::optional<YBounds> y_bounds;    // observed outcome range if unset

  KernelFamily family = KernelFamily::kEpanechnikov;
  std::vector<double> candidates{1.0, 0.1, 0.01, 0.001};
  std::size_t folds = 5;
  std::optional<double> fixed_h;
  CvOptions cv;

  bool with_bounds = true;
  UpperForm upper_form = UpperForm::kSharp;
  bool binary_bounds = false;  // tighter bounds for a binary treatment
};

struct EstimationResult {
  double h = 0.0;
  std::optional<BandwidthSelection> selection;
  YBounds bounds;
  EffectEstimate cace;
  std::optional<EffectEstimate> cpice;
  std::optional<BoundPair> p_cace_bounds;
  std::optional<BoundPair> n_cace_bounds;
  std::optional<BinaryBounds> binary;
  std::optional<BoundPair> p_cpice_bounds;
  std::optional<BoundPair> n_cpice_bounds;
  ArmCurves arm_curves;                    // x0 -> x1
  std::optional<ArmCurves> policy_curves;  // policy draws

  double value(Measure m) const;
  /// General or stochastic bounds, or the binary-treatment ones when present.
  std::optional<BoundPair> bounds_for(Measure m) const;
};

/// Treatment values at which the plan evaluates the conditional CDF.
std::vector<double> query_treatments(const EstimationPlan& plan);

/// Cross-validated h, moved down the ranking until every query point of the
/// plan has local data. Uses plan.fixed_h when set.
/// Plan randomness (folds, y-draws, policy draws) comes from plan.mc.seed.
double choose_bandwidth(const Dataset& data, const EstimationPlan& plan,
                        std::optional<BandwidthSelection>* selection = nullptr);

EstimationResult run_estimation(const Dataset& data, const EstimationPlan& plan);

struct ReportOptions {
  std::vector<Measure> measures = all_measures();
  std::size_t replicates = 0;  // 0 skips the bootstrap
  bool reselect_h = false;
  std::uint64_t seed = 0;  // resampling stream
  std::string w_label;  // defaults to the w coordinates
};

/// Point estimates, bounds and bootstrap summaries, one row per measure.
std::vector<MeasureReport> estimate_reports(const Dataset& data, const EstimationPlan& plan,
                                            const ReportOptions& options);

std::string format_point(const std::vector<double>& w);

}  // namespace hetero
