#include "hetero/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "hetero/error.hpp"
#include "hetero/rng.hpp"

namespace hetero {

namespace {

struct MeasureName {
  Measure m;
  const char* name;
};

constexpr MeasureName kNames[] = {
    {Measure::kCace, "cace"},   {Measure::kPCace, "p_cace"},   {Measure::kNCace, "n_cace"},
    {Measure::kCpice, "cpice"}, {Measure::kPCpice, "p_cpice"}, {Measure::kNCpice, "n_cpice"},
};

}  // namespace

Measure parse_measure(std::string_view name) {
  for (const auto& e : kNames) {
    if (name == e.name) return e.m;
  }
  throw InvalidArgument("unknown measure: " + std::string(name));
}

std::string to_string(Measure m) {
  for (const auto& e : kNames) {
    if (e.m == m) return e.name;
  }
  return "cace";
}

std::vector<Measure> all_measures() {
  std::vector<Measure> out;
  for (const auto& e : kNames) out.push_back(e.m);
  return out;
}

std::vector<Measure> parse_measure_list(std::string_view csv) {
  std::vector<Measure> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t end = std::min(csv.find(',', start), csv.size());
    auto item = csv.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item == "all") {
      for (Measure m : all_measures()) out.push_back(m);
    } else if (!item.empty()) {
      out.push_back(parse_measure(item));
    }
    start = end + 1;
  }
  if (out.empty()) throw InvalidArgument("empty measure list");
  return out;
}

bool is_policy_measure(Measure m) {
  return m == Measure::kCpice || m == Measure::kPCpice || m == Measure::kNCpice;
}

double EstimationResult::value(Measure m) const {
  if (is_policy_measure(m) && !cpice) {
    throw InvalidArgument(to_string(m) + " requires a policy pair");
  }
  switch (m) {
    case Measure::kCace: return cace.total;
    case Measure::kPCace: return cace.positive;
    case Measure::kNCace: return cace.negative;
    case Measure::kCpice: return cpice->total;
    case Measure::kPCpice: return cpice->positive;
    case Measure::kNCpice: return cpice->negative;
  }
  return 0.0;
}

std::optional<BoundPair> EstimationResult::bounds_for(Measure m) const {
  switch (m) {
    case Measure::kPCace: return binary ? std::optional(binary->positive) : p_cace_bounds;
    case Measure::kNCace: return binary ? std::optional(binary->negative) : n_cace_bounds;
    case Measure::kPCpice: return p_cpice_bounds;
    case Measure::kNCpice: return n_cpice_bounds;
    default: return std::nullopt;
  }
}

std::vector<double> query_treatments(const EstimationPlan& plan) {
  std::vector<double> xs{plan.x0, plan.x1};
  if (plan.policy) {
    const auto draws = draw_policy_sample(*plan.policy, plan.mc);
    xs.insert(xs.end(), draws.x0.begin(), draws.x0.end());
    xs.insert(xs.end(), draws.x1.begin(), draws.x1.end());
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

namespace {

bool covers(const CdfModel& model, std::span<const double> w, const std::vector<double>& xs) {
  try {
    for (double x : xs) model.local_fit(x, w);
  } catch (const NoLocalData&) {
    return false;
  }
  return true;
}

YBounds plan_bounds(const Dataset& data, const EstimationPlan& plan) {
  return plan.y_bounds ? *plan.y_bounds : infer_y_bounds(data);
}

}  // namespace

double choose_bandwidth(const Dataset& data, const EstimationPlan& plan,
                        std::optional<BandwidthSelection>* selection) {
  if (plan.fixed_h) {
    KernelSpec{plan.family, *plan.fixed_h}.validate();
    return *plan.fixed_h;
  }
  McConfig mc = plan.mc;
  mc.bounds = plan_bounds(data, plan);
  EstimationPlan resolved = plan;
  resolved.mc = mc;

  CvOptions cv = plan.cv;
  cv.family = plan.family;
  cv.bounds = mc.bounds;
  auto sel = select_bandwidth(data, plan.candidates, plan.folds,
                              derive_seed(plan.mc.seed, "cv"), cv);
  const auto xs = query_treatments(resolved);
  for (double h : sel.ranked()) {
    if (covers(CdfModel(data, KernelSpec{plan.family, h}, cv.cdf), plan.w, xs)) {
      sel.h = h;
      if (selection) *selection = sel;
      return h;
    }
  }
  throw NoLocalData("no bandwidth candidate has local data at every query point");
}

EstimationResult run_estimation(const Dataset& data, const EstimationPlan& plan) {
  if (plan.w.size() != data.d()) {
    throw InvalidArgument("query point has " + std::to_string(plan.w.size()) +
                          " coordinates, data has " + std::to_string(data.d()));
  }
  EstimationResult r;
  r.bounds = plan_bounds(data, plan);
  McConfig mc = plan.mc;
  mc.bounds = r.bounds;
  mc.validate();

  r.h = choose_bandwidth(data, plan, &r.selection);
  const KernelSpec kernel{plan.family, r.h};
  const CdfModel model(data, kernel, plan.cv.cdf);

  McConfig single = mc;
  single.n1 = 1;
  r.arm_curves = arm_curves(model, plan.w, PolicyPairSample{{plan.x0}, {plan.x1}}, single);
  const ArmCurves& arms = r.arm_curves;
  r.cace = effect_parts(arms);
  if (plan.with_bounds) {
    const auto [p, n] = bounds_from_curves(arms, plan.upper_form, BoundKind::kGeneral);
    r.p_cace_bounds = p;
    r.n_cace_bounds = n;
    if (plan.binary_bounds) {
      if (plan.x0 != 0.0 || plan.x1 != 1.0) {
        throw InvalidArgument("binary-treatment bounds need arms 0 and 1");
      }
      const PropensityModel propensity(data, kernel, plan.cv.cdf);
      r.binary = bound_cace_binary(model, propensity, plan.w, mc);
    }
  }

  if (plan.policy) {
    r.policy_curves = arm_curves(model, plan.w, draw_policy_sample(*plan.policy, mc), mc);
    const ArmCurves& curves = *r.policy_curves;
    r.cpice = effect_parts(curves);
    if (plan.with_bounds) {
      const auto [p, n] = bounds_from_curves(curves, plan.upper_form, BoundKind::kStochastic);
      r.p_cpice_bounds = p;
      r.n_cpice_bounds = n;
    }
  }
  return r;
}

std::string format_point(const std::vector<double>& w) {
  std::ostringstream os;
  os.precision(10);
  for (std::size_t i = 0; i < w.size(); ++i) os << (i ? ";" : "") << w[i];
  return os.str();
}

std::vector<MeasureReport> estimate_reports(const Dataset& data, const EstimationPlan& plan,
                                            const ReportOptions& options) {
  for (Measure m : options.measures) {
    if (is_policy_measure(m) && !plan.policy) {
      throw InvalidArgument(to_string(m) + " requires a policy pair");
    }
  }
  const EstimationResult full = run_estimation(data, plan);

  std::vector<MeasureReport> rows;
  for (Measure m : options.measures) {
    MeasureReport r;
    r.measure = to_string(m);
    r.w = options.w_label.empty() ? format_point(plan.w) : options.w_label;
    r.point = full.value(m);
    if (const auto b = full.bounds_for(m)) {
      r.lower_bound = b->lower;
      r.upper_bound = b->upper;
      r.bound_kind = to_string(b->kind);
    }
    r.boot_mean = r.point;
    r.ci_low = r.point;
    r.ci_high = r.point;
    r.h = full.h;
    r.seed = plan.mc.seed;
    rows.push_back(std::move(r));
  }
  if (options.replicates == 0) return rows;

  EstimationPlan fixed = plan;
  fixed.y_bounds = full.bounds;
  if (!options.reselect_h) fixed.fixed_h = full.h;
  const Statistic statistic = [&](const Dataset& resample) {
    const auto res = run_estimation(resample, fixed);
    std::vector<double> out;
    for (Measure m : options.measures) out.push_back(res.value(m));
    return out;
  };
  const auto summary =
      bootstrap(data, statistic, BootstrapOptions{options.replicates, options.seed, 0.95});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k].boot_mean = summary.mean[k];
    rows[k].ci_low = summary.ci_low[k];
    rows[k].ci_high = summary.ci_high[k];
    rows[k].replicates = summary.effective();
    rows[k].failed = summary.failed;
  }
  return rows;
}

}  // namespace hetero
