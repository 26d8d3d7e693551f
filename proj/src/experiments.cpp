#include "hetero/experiments.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "hetero/error.hpp"
#include "hetero/parallel.hpp"
#include "hetero/rng.hpp"
#include "hetero/stats.hpp"

namespace hetero {

EstimationPlan simulation_plan(std::uint64_t seed) {
  EstimationPlan plan;
  plan.w = {0.5};
  plan.x0 = 0.0;
  plan.x1 = 2.0;
  plan.policy = PolicyPair::single_shift(BaseLaw::uniform(0.0, 0.1), 1.9);
  plan.mc.n1 = 10;
  plan.mc.n2 = 100;
  plan.mc.seed = seed;
  plan.with_bounds = true;
  return plan;
}

std::map<std::string, double> study_truths(const ScmSpec& scm, const EstimationPlan& plan,
                                           std::size_t n_mc, std::uint64_t seed) {
  std::map<std::string, double> t;
  const auto c = oracle_cace_parts(scm, plan.w, plan.x0, plan.x1, n_mc, seed);
  t["cace"] = c.total.value;
  t["p_cace"] = c.positive.value;
  t["n_cace"] = c.negative.value;
  if (plan.policy) {
    const auto p = oracle_cpice_parts(scm, plan.w, *plan.policy, n_mc, seed);
    t["cpice"] = p.total.value;
    t["p_cpice"] = p.positive.value;
    t["n_cpice"] = p.negative.value;
  }
  return t;
}

std::map<std::string, double> simulate_once(const ScmSpec& scm, std::size_t n,
                                            const EstimationPlan& plan, std::uint64_t seed) {
  const Dataset data = sample_observational(scm, n, derive_seed(seed, "study.data"));
  EstimationPlan p = plan;
  p.mc.seed = derive_seed(seed, "study.mc");
  p.upper_form = UpperForm::kSharp;
  const EstimationResult r = run_estimation(data, p);

  std::map<std::string, double> v;
  v["h"] = r.h;
  auto put = [&](const std::string& name, double value, const std::optional<BoundPair>& b) {
    v[name] = value;
    if (b) {
      v[name + "_lower"] = b->lower;
      v[name + "_upper"] = b->upper;
    }
  };
  put("cace", r.cace.total, std::nullopt);
  put("p_cace", r.cace.positive, r.p_cace_bounds);
  put("n_cace", r.cace.negative, r.n_cace_bounds);
  if (p.with_bounds) {
    const auto [pp, nn] =
        bounds_from_curves(r.arm_curves, UpperForm::kMax, BoundKind::kGeneral);
    v["p_cace_upper_max"] = pp.upper;
    v["n_cace_upper_max"] = nn.upper;
  }
  if (r.cpice) {
    put("cpice", r.cpice->total, std::nullopt);
    put("p_cpice", r.cpice->positive, r.p_cpice_bounds);
    put("n_cpice", r.cpice->negative, r.n_cpice_bounds);
    if (p.with_bounds) {
      const auto [pp, nn] =
          bounds_from_curves(*r.policy_curves, UpperForm::kMax, BoundKind::kStochastic);
      v["p_cpice_upper_max"] = pp.upper;
      v["n_cpice_upper_max"] = nn.upper;
    }
  }
  return v;
}

std::vector<StudyCell> run_study(const StudyConfig& config) {
  if (config.sims < 1) throw InvalidArgument("study needs at least one simulation");
  const ScmSpec scm = find_scm(config.scm);
  const auto truths =
      study_truths(scm, config.plan, config.oracle_draws, derive_seed(config.seed, "study.truth"));

  std::vector<StudyCell> cells;
  for (std::size_t n : config.sizes) {
    std::vector<std::optional<std::map<std::string, double>>> runs(config.sims);
    par::parallel_for(config.sims, [&](std::size_t s) {
      try {
        runs[s] = simulate_once(scm, n, config.plan, derive_seed(config.seed, "study.sim", n * 1'000'003 + s));
      } catch (const NoLocalData&) {
        runs[s].reset();
      }
    });

    std::map<std::string, std::vector<double>> columns;
    std::size_t failed = 0;
    for (const auto& run : runs) {
      if (!run) {
        ++failed;
        continue;
      }
      for (const auto& [name, value] : *run) columns[name].push_back(value);
    }
    for (const auto& [name, values] : columns) {
      StudyCell cell;
      cell.scm = config.scm;
      cell.n = n;
      cell.quantity = name;
      cell.sims = values.size();
      cell.failed = failed;
      cell.mean = mean(values);
      cell.band_low = quantile(values, 0.025);
      cell.band_high = quantile(values, 0.975);
      if (const auto it = truths.find(name); it != truths.end()) {
        cell.has_truth = true;
        cell.truth = it->second;
        CompensatedSum abs_err;
        for (double x : values) abs_err.add(std::abs(x - cell.truth));
        cell.mean_abs_error = abs_err.value() / static_cast<double>(values.size());
      }
      cell.values = values;
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

const StudyCell* find_cell(const std::vector<StudyCell>& cells, std::size_t n,
                           const std::string& quantity) {
  for (const auto& c : cells) {
    if (c.n == n && c.quantity == quantity) return &c;
  }
  return nullptr;
}

void write_study_csv(std::ostream& out, const std::vector<StudyCell>& cells) {
  const auto saved = out.precision(std::numeric_limits<double>::max_digits10);
  out << "scm,n,quantity,truth,mean,band_low,band_high,mean_abs_error,sims,failed\n";
  for (const auto& c : cells) {
    out << c.scm << ',' << c.n << ',' << c.quantity << ',';
    if (c.has_truth) out << c.truth;
    out << ',' << c.mean << ',' << c.band_low << ',' << c.band_high << ',';
    if (c.has_truth) out << c.mean_abs_error;
    out << ',' << c.sims << ',' << c.failed << '\n';
  }
  out.precision(saved);
}

}  // namespace hetero
