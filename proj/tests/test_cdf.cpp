#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <omp.h>

#include "hetero/cdf.hpp"
#include "hetero/error.hpp"
#include "hetero/scm.hpp"
#include "oracles.hpp"

using namespace hetero;

namespace {

Dataset to_dataset(const std::vector<oracle::Row>& rows) {
  DatasetColumns c;
  c.d = rows.front().w.size();
  for (std::size_t j = 0; j < c.d; ++j) c.covariate_names.push_back("w" + std::to_string(j));
  for (const auto& r : rows) {
    c.x.push_back(r.x);
    c.y.push_back(r.y);
    c.w.insert(c.w.end(), r.w.begin(), r.w.end());
  }
  return Dataset(std::move(c));
}

std::vector<oracle::Row> random_rows(std::size_t n, std::size_t d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<oracle::Row> rows(n);
  for (auto& r : rows) {
    r.x = u(rng);
    r.w.resize(d);
    for (auto& v : r.w) v = u(rng);
    r.y = r.x + 0.5 * u(rng);
  }
  return rows;
}

}  // namespace

TEST_CASE("kernels") {
  CHECK(parse_kernel_family("epanechnikov") == KernelFamily::kEpanechnikov);
  CHECK(parse_kernel_family("gaussian") == KernelFamily::kGaussian);
  CHECK(parse_kernel_family("uniform") == KernelFamily::kUniform);
  CHECK_THROWS_AS(parse_kernel_family("tricube"), InvalidArgument);
  CHECK(kernel_profile(KernelFamily::kEpanechnikov, 0.0) == 0.75);
  CHECK(kernel_profile(KernelFamily::kEpanechnikov, 1.0) == 0.0);
  CHECK_THROWS_AS((KernelSpec{KernelFamily::kGaussian, 0.0}.validate()), InvalidArgument);
  CHECK_THROWS_AS((KernelSpec{KernelFamily::kGaussian, -1.0}.validate()), InvalidArgument);
}

TEST_CASE("local-linear fit matches a normal-equations solve on small instances") {
  for (std::size_t d : {1u, 2u}) {
    for (unsigned seed = 1; seed <= 5; ++seed) {
      const auto rows = random_rows(8 + 3 * seed, d, seed);
      const auto data = to_dataset(rows);
      for (auto [family, h] : {std::pair{KernelFamily::kGaussian, 0.4},
                               std::pair{KernelFamily::kEpanechnikov, 1.5},
                               std::pair{KernelFamily::kUniform, 2.0}}) {
        const CdfModel model(data, KernelSpec{family, h});
        const std::vector<double> w(d, 0.45);
        const auto fit = model.local_fit(0.55, w);
        REQUIRE_FALSE(fit.fallback());
        for (double y : {0.2, 0.5, 0.7, 0.9, 1.2}) {
          double expected = 0.0;
          switch (family) {
            case KernelFamily::kGaussian:
              expected = oracle::local_linear(oracle::gaussian, h, rows, y, 0.55, w);
              break;
            case KernelFamily::kEpanechnikov:
              expected = oracle::local_linear(oracle::epanechnikov, h, rows, y, 0.55, w);
              break;
            case KernelFamily::kUniform:
              expected = oracle::local_linear(oracle::box, h, rows, y, 0.55, w);
              break;
          }
          CHECK(std::abs(fit.raw(y) - expected) <= 1e-10);
          CHECK(std::abs(reference::local_linear_cdf(data, KernelSpec{family, h}, y, 0.55, w) -
                         std::clamp(expected, 0.0, 1.0)) <= 1e-10);
          CHECK(fit(y) == std::clamp(fit.raw(y), 0.0, 1.0));
        }
      }
    }
  }
}

TEST_CASE("boundary values of the estimate") {
  const auto rows = random_rows(200, 1, 9);
  const auto data = to_dataset(rows);
  const CdfModel model(data, KernelSpec{KernelFamily::kEpanechnikov, 0.5});
  const std::vector<double> w{0.5};
  CHECK(model.eval(-1.0, 0.5, w) == 0.0);
  CHECK(model.eval(10.0, 0.5, w) == doctest::Approx(1.0).epsilon(1e-12));
  for (double y = -0.5; y < 2.0; y += 0.01) {
    const double v = model.eval(y, 0.5, w);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == model.eval(y, 0.5, w));
  }
}

TEST_CASE("all local mass below y gives one") {
  std::vector<oracle::Row> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({0.1 * i, 0.0 + 0.01 * i, {0.05 * i}});
  for (int i = 0; i < 10; ++i) rows.push_back({5.0 + 0.1 * i, 3.0, {5.0}});
  const CdfModel model(to_dataset(rows), KernelSpec{KernelFamily::kEpanechnikov, 1.0});
  CHECK(model.eval(1.0, 0.4, std::vector<double>{0.2}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rank-deficient design falls back to the local mean") {
  std::vector<oracle::Row> rows;
  for (int i = 0; i < 6; ++i) rows.push_back({1.0, 0.1 * i, {2.0}});
  for (int i = 0; i < 6; ++i) rows.push_back({4.0, 5.0 + i, {7.0}});
  const auto data = to_dataset(rows);
  const KernelSpec kernel{KernelFamily::kEpanechnikov, 0.5};
  const CdfModel model(data, kernel);
  const std::vector<double> w{2.0};
  const auto fit = model.local_fit(1.0, w);
  CHECK(fit.fallback());
  CHECK(fit.dropped_columns() == 2);
  for (double y : {0.05, 0.25, 0.45, 1.0}) {
    CHECK(fit(y) == doctest::Approx(oracle::nadaraya_watson(oracle::epanechnikov, 0.5, rows, y,
                                                            1.0, {2.0}))
                        .epsilon(1e-12));
    CHECK(reference::local_linear_cdf(data, kernel, y, 1.0, w) == doctest::Approx(fit(y)));
  }
}

TEST_CASE("zero kernel weight and tiny samples are errors") {
  const auto data = to_dataset(random_rows(30, 1, 2));
  const CdfModel model(data, KernelSpec{KernelFamily::kEpanechnikov, 0.1});
  CHECK_THROWS_AS(model.eval(0.5, 5.0, std::vector<double>{0.5}), NoLocalData);
  CHECK_THROWS_AS(model.eval(0.5, 0.5, std::vector<double>{0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(CdfModel(to_dataset(random_rows(2, 1, 2)), KernelSpec{}), InvalidArgument);
}

TEST_CASE("local fits do not depend on the thread count") {
  const auto data = sample_observational(find_scm("appc_main"), 20000, 5);
  const CdfModel model(data, KernelSpec{KernelFamily::kEpanechnikov, 0.3});
  const std::vector<double> w{0.5};
  omp_set_num_threads(1);
  const auto a = model.local_fit(1.0, w);
  omp_set_num_threads(4);
  const auto b = model.local_fit(1.0, w);
  for (double y = -1.0; y <= 1.0; y += 0.05) CHECK(a.raw(y) == b.raw(y));
}

TEST_CASE("estimate tracks the true conditional CDF at N = 10000") {
  const auto data = sample_observational(find_scm("appc_main"), 10000, 17);
  const std::vector<double> candidates{1.0, 0.1, 0.01, 0.001};
  const auto sel = select_bandwidth(data, candidates, 5, 1);
  const CdfModel model(data, KernelSpec{KernelFamily::kEpanechnikov, sel.h});
  double worst = 0.0;
  for (int iw = 0; iw < 10; ++iw) {
    const double w = 0.1 + 0.08 * iw;
    for (int ix = 0; ix < 10; ++ix) {
      const double x = w + 0.1 + 0.08 * ix;
      const auto fit = model.local_fit(x, std::vector<double>{w});
      for (int iy = 0; iy < 10; ++iy) {
        const double y = -0.9 + 0.2 * iy;
        worst = std::max(worst, std::abs(fit(y) - oracle::appc_cdf(y, x, w)));
      }
    }
  }
  MESSAGE("h = " << sel.h << ", max abs error = " << worst);
  CHECK(worst < 0.05);
  CHECK(std::abs(model.eval(1.3, 1.0, std::vector<double>{0.5}) - oracle::appc_cdf(1.3, 1.0, 0.5)) <
        0.05);
  CHECK(std::abs(model.eval(0.3, 1.0, std::vector<double>{0.5}) - oracle::appc_cdf(0.3, 1.0, 0.5)) <
        0.05);
}

TEST_CASE("estimation error shrinks with the sample size") {
  const std::vector<double> candidates{1.0, 0.1, 0.01, 0.001};
  std::vector<double> errors;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    const auto data = sample_observational(find_scm("appc_main"), n, 100 + n);
    const auto sel = select_bandwidth(data, candidates, 5, 1);
    const CdfModel model(data, KernelSpec{KernelFamily::kEpanechnikov, sel.h});
    double sum = 0.0;
    int count = 0;
    for (double w : {0.3, 0.5, 0.7}) {
      for (double dx : {0.3, 0.5, 0.7}) {
        const auto fit = model.local_fit(w + dx, std::vector<double>{w});
        for (double y = -0.8; y <= 0.81; y += 0.2) {
          sum += std::abs(fit(y) - oracle::appc_cdf(y, w + dx, w));
          ++count;
        }
      }
    }
    errors.push_back(sum / count);
  }
  MESSAGE("mean abs errors " << errors[0] << " " << errors[1] << " " << errors[2]);
  CHECK(errors[1] < 1.1 * errors[0]);
  CHECK(errors[2] < 1.1 * errors[1]);
}

namespace {

// Cross-validation score computed from scratch on a small instance.
double cv_reference(const std::vector<oracle::Row>& rows, double h, std::size_t folds,
                    const std::vector<double>& grid) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<oracle::Row> train;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (j % folds != i % folds) train.push_back(rows[j]);
    }
    for (double g : grid) {
      double est = 0.0;
      try {
        est = oracle::local_linear(oracle::epanechnikov, h, train, g, rows[i].x, rows[i].w);
      } catch (const std::runtime_error&) {
        est = oracle::nadaraya_watson(oracle::epanechnikov, h, train, g, rows[i].x, rows[i].w);
      }
      const double r = (rows[i].y < g ? 1.0 : 0.0) - std::clamp(est, 0.0, 1.0);
      total += r * r;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

TEST_CASE("bandwidth selection") {
  auto rows = random_rows(40, 1, 21);
  const auto data = to_dataset(rows);
  const std::vector<double> candidates{2.0, 1.0, 0.6};
  CvOptions opt;
  opt.y_grid = 7;
  const auto sel = select_bandwidth(data, candidates, 4, 0, opt);
  const auto bounds = infer_y_bounds(data);
  std::vector<double> grid;
  for (int k = 0; k < 7; ++k) grid.push_back(bounds.a + bounds.width() * k / 6.0);
  REQUIRE(sel.trace.size() == 3);
  double best = std::numeric_limits<double>::infinity();
  double best_h = 0.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double ref = cv_reference(rows, candidates[c], 4, grid);
    CHECK(sel.trace[c].cv_score == doctest::Approx(ref).epsilon(1e-9));
    if (ref < best) {
      best = ref;
      best_h = candidates[c];
    }
  }
  CHECK(sel.h == best_h);

  // Duplicated rows: the selection is still the minimiser of the recomputed scores.
  auto doubled = rows;
  doubled.insert(doubled.end(), rows.begin(), rows.end());
  const auto sel2 = select_bandwidth(to_dataset(doubled), candidates, 4, 0, opt);
  double best2 = std::numeric_limits<double>::infinity();
  double best2_h = 0.0;
  for (double h : candidates) {
    const double ref = cv_reference(doubled, h, 4, grid);
    if (ref < best2) {
      best2 = ref;
      best2_h = h;
    }
  }
  CHECK(sel2.h == best2_h);

  const std::vector<double> one{0.7};
  CHECK(select_bandwidth(data, one, 5, 0).h == 0.7);

  const std::vector<double> tiny{1e-6};
  CHECK_THROWS_AS(select_bandwidth(data, tiny, 5, 0), NoLocalData);
  const std::vector<double> mixed{1e-6, 0.7};
  const auto sel3 = select_bandwidth(data, mixed, 5, 0);
  CHECK(sel3.h == 0.7);
  CHECK_FALSE(sel3.trace[0].feasible);
  CHECK_THROWS_AS(select_bandwidth(data, one, 1, 0), InvalidArgument);
}

TEST_CASE("ties go to the smaller bandwidth") {
  BandwidthSelection sel;
  sel.trace = {{1.0, 0.2, true}, {0.1, 0.2, true}, {0.5, 0.3, true}, {0.01, 0.0, false}};
  const auto r = sel.ranked();
  REQUIRE(r.size() == 3);
  CHECK(r[0] == 0.1);
  CHECK(r[1] == 1.0);
}

TEST_CASE("propensity") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DatasetColumns c;
  c.d = 1;
  c.covariate_names = {"w"};
  for (int i = 0; i < 4000; ++i) {
    const double w = u(rng);
    c.w.push_back(w);
    c.x.push_back(w > 0.5 ? 1.0 : 0.0);
    c.y.push_back(u(rng));
  }
  const Dataset step(c);
  const PropensityModel p(step, KernelSpec{KernelFamily::kEpanechnikov, 0.05});
  const std::vector<double> w{0.9};
  CHECK(p.treated(w) == 1.0);
  CHECK(p.arm(0, w) + p.arm(1, w) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p.treated(std::vector<double>{0.1}) == 0.0);

  DatasetColumns all = c;
  std::fill(all.x.begin(), all.x.end(), 1.0);
  const PropensityModel treated(Dataset(all), KernelSpec{KernelFamily::kEpanechnikov, 0.2});
  for (double v : {0.0, 0.3, 1.0}) CHECK(treated.treated(std::vector<double>{v}) == 1.0);

  const auto indep = sample_observational(find_scm("ex1_additive"), 20000, 4);
  const PropensityModel half(indep, KernelSpec{KernelFamily::kEpanechnikov, 0.3});
  double empirical = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < indep.n(); ++i) {
    if (std::abs(indep.w(i)[0] - 0.5) < 0.3) {
      empirical += indep.x()[i];
      ++count;
    }
  }
  empirical /= static_cast<double>(count);
  CHECK(std::abs(half.treated(std::vector<double>{0.5}) - 0.5) < 0.03);
  CHECK(std::abs(half.treated(std::vector<double>{0.5}) - empirical) < 0.02);

  CHECK_THROWS_AS(PropensityModel(sample_observational(find_scm("appc_main"), 50, 1),
                                  KernelSpec{}),
                  InvalidArgument);
  CHECK_THROWS_AS(p.treated(std::vector<double>{5.0}), NoLocalData);
}
