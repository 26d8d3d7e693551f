#include "hetero/measures.hpp"

#include <algorithm>

#include "hetero/error.hpp"
#include "hetero/parallel.hpp"
#include "hetero/rng.hpp"

namespace hetero {

void McConfig::validate() const {
  if (n1 < 1 || n2 < 1) throw InvalidArgument("Monte Carlo draw counts must be >= 1");
  if (!(bounds.a < bounds.b)) throw InvalidArgument("Monte Carlo range requires a < b");
}

std::vector<double> draw_y(const McConfig& cfg) {
  cfg.validate();
  std::vector<double> y(cfg.n2);
  if (cfg.sampling == YSampling::kStratifiedMidpoints) {
    const double step = cfg.bounds.width() / static_cast<double>(cfg.n2);
    for (std::size_t k = 0; k < cfg.n2; ++k) {
      y[k] = cfg.bounds.a + (static_cast<double>(k) + 0.5) * step;
    }
    return y;
  }
  Rng rng(derive_seed(cfg.seed, "mc.y"));
  for (auto& v : y) v = uniform(rng, cfg.bounds.a, cfg.bounds.b);
  return y;
}

PolicyPairSample draw_policy_sample(const PolicyPair& pair, const McConfig& cfg) {
  cfg.validate();
  return draw_policy_pairs(pair, cfg.n1, derive_seed(cfg.seed, "mc.pi"));
}

ArmCurves arm_curves(const CdfModel& model, std::span<const double> w,
                     const PolicyPairSample& draws, const McConfig& cfg) {
  cfg.validate();
  ArmCurves c;
  c.width = cfg.bounds.width();
  c.y = draw_y(cfg);

  // One local fit per distinct treatment value.
  std::vector<double> xs(draws.x0.begin(), draws.x0.end());
  xs.insert(xs.end(), draws.x1.begin(), draws.x1.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  const auto values = par::parallel_map<std::vector<double>>(xs.size(), [&](std::size_t i) {
    const auto fit = model.local_fit(xs[i], w);
    std::vector<double> v(c.y.size());
    for (std::size_t k = 0; k < c.y.size(); ++k) v[k] = fit(c.y[k]);
    return v;
  });
  auto lookup = [&](double x) -> const std::vector<double>& {
    const auto it = std::lower_bound(xs.begin(), xs.end(), x);
    return values[static_cast<std::size_t>(it - xs.begin())];
  };
  for (std::size_t j = 0; j < draws.size(); ++j) {
    c.f0.push_back(lookup(draws.x0[j]));
    c.f1.push_back(lookup(draws.x1[j]));
  }
  return c;
}

double integrate(const ArmCurves& curves, const std::function<double(double, double)>& g) {
  double sum = 0.0;
  for (std::size_t j = 0; j < curves.n1(); ++j) {
    for (std::size_t k = 0; k < curves.n2(); ++k) sum += g(curves.f0[j][k], curves.f1[j][k]);
  }
  return curves.width * sum / static_cast<double>(curves.n1() * curves.n2());
}

EffectEstimate effect_parts(const ArmCurves& curves) {
  return {integrate(curves, [](double c, double d) { return c - d; }),
          integrate(curves, [](double c, double d) { return std::max(c - d, 0.0); }),
          integrate(curves, [](double c, double d) { return std::max(d - c, 0.0); })};
}

EffectEstimate estimate_cace_parts(const CdfModel& model, std::span<const double> w,
                                   const McConfig& cfg, double x0, double x1) {
  McConfig single = cfg;
  single.n1 = 1;
  return effect_parts(arm_curves(model, w, PolicyPairSample{{x0}, {x1}}, single));
}

double estimate_cace(const CdfModel& model, std::span<const double> w, const McConfig& cfg,
                     double x0, double x1) {
  return estimate_cace_parts(model, w, cfg, x0, x1).total;
}

double estimate_p_cace(const CdfModel& model, std::span<const double> w, const McConfig& cfg,
                       double x0, double x1) {
  return estimate_cace_parts(model, w, cfg, x0, x1).positive;
}

double estimate_n_cace(const CdfModel& model, std::span<const double> w, const McConfig& cfg,
                       double x0, double x1) {
  return estimate_cace_parts(model, w, cfg, x0, x1).negative;
}

EffectEstimate estimate_cpice_parts(const CdfModel& model, std::span<const double> w,
                                    const PolicyPair& policies, const McConfig& cfg) {
  return effect_parts(arm_curves(model, w, draw_policy_sample(policies, cfg), cfg));
}

double estimate_cpice(const CdfModel& model, std::span<const double> w,
                      const PolicyPair& policies, const McConfig& cfg) {
  return estimate_cpice_parts(model, w, policies, cfg).total;
}

double estimate_p_cpice(const CdfModel& model, std::span<const double> w,
                        const PolicyPair& policies, const McConfig& cfg) {
  return estimate_cpice_parts(model, w, policies, cfg).positive;
}

double estimate_n_cpice(const CdfModel& model, std::span<const double> w,
                        const PolicyPair& policies, const McConfig& cfg) {
  return estimate_cpice_parts(model, w, policies, cfg).negative;
}

}  // namespace hetero
