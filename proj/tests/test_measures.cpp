#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hetero/error.hpp"
#include "hetero/measures.hpp"
#include "hetero/scm.hpp"
#include "oracles.hpp"

using namespace hetero;

namespace {

ArmCurves curves_from(double a, double b, std::size_t n2, double (*f0)(double),
                      double (*f1)(double)) {
  ArmCurves c;
  c.width = b - a;
  std::vector<double> r0, r1;
  for (std::size_t k = 0; k < n2; ++k) {
    const double y = a + (static_cast<double>(k) + 0.5) * (b - a) / static_cast<double>(n2);
    c.y.push_back(y);
    r0.push_back(f0(y));
    r1.push_back(f1(y));
  }
  c.f0.push_back(r0);
  c.f1.push_back(r1);
  return c;
}

McConfig appc_config(std::uint64_t seed) {
  McConfig cfg;
  cfg.n1 = 10;
  cfg.n2 = 100;
  cfg.bounds = {-1.05, 1.05};
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("integration of hand-built curves") {
  const auto c = curves_from(0.0, 1.0, 2000, [](double y) { return y; },
                             [](double y) { return y * y; });
  const auto parts = effect_parts(c);
  CHECK(parts.positive == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
  CHECK(parts.negative == 0.0);
  CHECK(parts.total == doctest::Approx(1.0 / 6.0).epsilon(1e-6));

  // Crossing curves on [0, 2]: positive and negative areas are both 1/8.
  const auto x = curves_from(0.0, 2.0, 4000, [](double y) { return y / 2.0; },
                             [](double y) { return std::clamp(y - 0.5, 0.0, 1.0); });
  const auto px = effect_parts(x);
  CHECK(px.positive == doctest::Approx(0.125).epsilon(1e-5));
  CHECK(px.negative == doctest::Approx(0.125).epsilon(1e-5));

  const auto same = curves_from(0.0, 1.0, 100, [](double y) { return y; },
                                [](double y) { return y; });
  const auto ps = effect_parts(same);
  CHECK(ps.total == 0.0);
  CHECK(ps.positive == 0.0);
  CHECK(ps.negative == 0.0);
}

TEST_CASE("draws") {
  McConfig cfg = appc_config(3);
  const auto a = draw_y(cfg);
  CHECK(a == draw_y(cfg));
  for (double v : a) {
    CHECK(v >= -1.05);
    CHECK(v <= 1.05);
  }
  cfg.sampling = YSampling::kStratifiedMidpoints;
  cfg.n2 = 4;
  cfg.bounds = {0.0, 2.0};
  CHECK(draw_y(cfg) == std::vector<double>{0.25, 0.75, 1.25, 1.75});
  cfg.n2 = 0;
  CHECK_THROWS_AS(draw_y(cfg), InvalidArgument);
  cfg.n2 = 5;
  cfg.bounds = {1.0, 1.0};
  CHECK_THROWS_AS(draw_y(cfg), InvalidArgument);
}

TEST_CASE("estimator equals a brute-force local-linear computation") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<oracle::Row> rows;
  DatasetColumns cols;
  cols.d = 1;
  cols.covariate_names = {"w"};
  for (int i = 0; i < 60; ++i) {
    const double w = u(rng), x = 2.0 * u(rng);
    const double y = (0.5 * x + 0.1 * w + 1.0) * (0.5 - u(rng));
    rows.push_back({x, y, {w}});
    cols.x.push_back(x);
    cols.y.push_back(y);
    cols.w.push_back(w);
  }
  const Dataset data(cols);
  const double h = 1.2;
  const CdfModel model(data, KernelSpec{KernelFamily::kEpanechnikov, h});
  McConfig cfg = appc_config(1);
  cfg.n2 = 40;
  cfg.sampling = YSampling::kStratifiedMidpoints;
  const double x0 = 0.4, x1 = 1.6, wq = 0.5;
  double p = 0.0, n = 0.0, t = 0.0;
  for (std::size_t k = 0; k < cfg.n2; ++k) {
    const double y = -1.05 + (k + 0.5) * 2.1 / 40.0;
    const double a0 = std::clamp(oracle::local_linear(oracle::epanechnikov, h, rows, y, x0, {wq}), 0.0, 1.0);
    const double a1 = std::clamp(oracle::local_linear(oracle::epanechnikov, h, rows, y, x1, {wq}), 0.0, 1.0);
    t += a0 - a1;
    p += std::max(a0 - a1, 0.0);
    n += std::max(a1 - a0, 0.0);
  }
  const double scale = 2.1 / 40.0;
  const std::vector<double> w{wq};
  const auto parts = estimate_cace_parts(model, w, cfg, x0, x1);
  CHECK(parts.total == doctest::Approx(t * scale).epsilon(1e-10));
  CHECK(parts.positive == doctest::Approx(p * scale).epsilon(1e-10));
  CHECK(parts.negative == doctest::Approx(n * scale).epsilon(1e-10));
}

TEST_CASE("structural identities on appc data") {
  const auto data = sample_observational(find_scm("appc_main"), 3000, 5);
  const CdfModel model(data, KernelSpec{KernelFamily::kEpanechnikov, 0.3});
  const std::vector<double> w{0.5};
  const auto cfg = appc_config(11);

  const auto c = estimate_cace_parts(model, w, cfg, 0.0, 2.0);
  CHECK(std::abs(c.positive - c.negative - c.total) <= 1e-12);
  CHECK(c.positive >= 0.0);
  CHECK(c.negative >= 0.0);
  CHECK(estimate_cace(model, w, cfg, 0.0, 2.0) == c.total);
  CHECK(estimate_p_cace(model, w, cfg, 0.0, 2.0) == c.positive);
  CHECK(estimate_n_cace(model, w, cfg, 0.0, 2.0) == c.negative);

  const auto swapped = estimate_cace_parts(model, w, cfg, 2.0, 0.0);
  CHECK(swapped.positive == c.negative);
  CHECK(swapped.negative == c.positive);
  CHECK(swapped.total == -c.total);

  const auto same = estimate_cace_parts(model, w, cfg, 0.7, 0.7);
  CHECK(same.total == 0.0);
  CHECK(same.positive == 0.0);
  CHECK(same.negative == 0.0);

  const auto pair = PolicyPair::single_shift(BaseLaw::uniform(0.0, 0.1), 1.9);
  const auto p = estimate_cpice_parts(model, w, pair, cfg);
  CHECK(std::abs(p.positive - p.negative - p.total) <= 1e-12);
  CHECK(estimate_cpice(model, w, pair, cfg) == p.total);
  CHECK(estimate_p_cpice(model, w, pair, cfg) == p.positive);
  CHECK(estimate_n_cpice(model, w, pair, cfg) == p.negative);

  const auto coupled = estimate_cpice_parts(model, w, PolicyPair::single_shift(BaseLaw::uniform(0.2, 1.5), 0.0), cfg);
  CHECK(coupled.positive == 0.0);
  CHECK(coupled.negative == 0.0);

  McConfig one = cfg;
  one.n1 = 1;
  const auto dirac = estimate_cpice_parts(model, w, PolicyPair::dirac(0.0, 2.0), one);
  CHECK(dirac.total == c.total);
  CHECK(dirac.positive == c.positive);
  CHECK(dirac.negative == c.negative);
  const auto dirac10 = estimate_cpice_parts(model, w, PolicyPair::dirac(0.0, 2.0), cfg);
  CHECK(dirac10.positive == doctest::Approx(c.positive).epsilon(1e-12));
}

TEST_CASE("affine outcome maps and treatment relabelling") {
  const auto data = sample_observational(find_scm("appc_main"), 3000, 6);
  const std::vector<double> w{0.5};
  const KernelSpec kernel{KernelFamily::kEpanechnikov, 0.3};
  const CdfModel model(data, kernel);
  auto cfg = appc_config(4);
  const auto base = estimate_cace_parts(model, w, cfg, 0.0, 2.0);

  const double alpha = 3.0, beta = -7.0;
  std::vector<double> y2;
  for (double v : data.y()) y2.push_back(alpha * v + beta);
  const CdfModel scaled(data.with_outcome(y2, std::nullopt), kernel);
  auto cfg2 = cfg;
  cfg2.bounds = {alpha * cfg.bounds.a + beta, alpha * cfg.bounds.b + beta};
  const auto s = estimate_cace_parts(scaled, w, cfg2, 0.0, 2.0);
  CHECK(s.total == doctest::Approx(alpha * base.total).epsilon(1e-9));
  CHECK(s.positive == doctest::Approx(alpha * base.positive).epsilon(1e-9));
  CHECK(s.negative == doctest::Approx(alpha * base.negative).epsilon(1e-9));

  std::vector<double> x2;
  for (double v : data.x()) x2.push_back(5.0 - v);
  const CdfModel flipped(data.with_treatment(x2), kernel);
  const auto f = estimate_cace_parts(flipped, w, cfg, 5.0, 3.0);
  CHECK(f.positive == doctest::Approx(base.positive).epsilon(1e-9));
  CHECK(f.negative == doctest::Approx(base.negative).epsilon(1e-9));
}

TEST_CASE("Monte Carlo variance falls like 1 / n2") {
  const auto data = sample_observational(find_scm("appc_main"), 2000, 7);
  const CdfModel model(data, KernelSpec{KernelFamily::kEpanechnikov, 0.3});
  const std::vector<double> w{0.5};
  std::vector<double> lx, ly;
  for (std::size_t n2 : {25u, 100u, 400u, 1600u}) {
    double s = 0.0, s2 = 0.0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
      auto cfg = appc_config(1000 + r);
      cfg.n2 = n2;
      const double v = estimate_p_cace(model, w, cfg, 0.0, 2.0);
      s += v;
      s2 += v * v;
    }
    const double mean = s / reps;
    const double var = (s2 - reps * mean * mean) / (reps - 1);
    lx.push_back(std::log(static_cast<double>(n2)));
    ly.push_back(std::log(var));
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4.0;
  const double my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4.0;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 4; ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = num / den;
  MESSAGE("log-log slope " << slope);
  CHECK(std::abs(slope + 1.0) <= 0.3);
}

TEST_CASE("stratified outcome points converge to the same target") {
  const auto data = sample_observational(find_scm("appc_main"), 3000, 9);
  const CdfModel model(data, KernelSpec{KernelFamily::kEpanechnikov, 0.3});
  const std::vector<double> w{0.5};
  auto cfg = appc_config(2);
  cfg.n2 = 20000;
  const double random = estimate_p_cace(model, w, cfg, 0.0, 2.0);
  cfg.sampling = YSampling::kStratifiedMidpoints;
  const double strat = estimate_p_cace(model, w, cfg, 0.0, 2.0);
  CHECK(std::abs(random - strat) < 0.005);
}
