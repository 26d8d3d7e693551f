#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <omp.h>

#include "hetero/error.hpp"
#include "hetero/inference.hpp"
#include "hetero/pipeline.hpp"
#include "hetero/scm.hpp"
#include "hetero/stats.hpp"

using namespace hetero;

namespace {

Dataset column(std::vector<double> y) {
  DatasetColumns c;
  c.d = 1;
  c.covariate_names = {"w"};
  c.x.assign(y.size(), 0.0);
  c.w.assign(y.size(), 0.0);
  c.y = std::move(y);
  return Dataset(std::move(c));
}

std::vector<double> outcome_mean(const Dataset& d) {
  double s = 0.0;
  for (double v : d.y()) s += v;
  return {s / static_cast<double>(d.n())};
}

// Type-7 quantile written out from its definition.
double type7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TEST_CASE("quantile and summaries") {
  const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.5) == 2.5);
  CHECK(quantile(v, 0.1) == doctest::Approx(type7(v, 0.1)));
  CHECK(mean(v) == 2.5);
  CHECK(sample_sd(std::vector<double>{1.0}) == 0.0);
}

TEST_CASE("resampled rows") {
  const auto a = bootstrap_rows(50, 3, 7);
  CHECK(a == bootstrap_rows(50, 3, 7));
  CHECK(a != bootstrap_rows(50, 3, 8));
  for (auto r : a) CHECK(r < 50);
}

TEST_CASE("single replicate collapses to that replicate") {
  const auto data = column({1.0, 2.0, 3.0, 4.0, 5.0});
  BootstrapOptions opt;
  opt.replicates = 1;
  opt.seed = 4;
  const auto s = bootstrap(data, outcome_mean, opt);
  REQUIRE(s.effective() == 1);
  const double only = outcome_mean(data.subset(bootstrap_rows(5, 4, 0)))[0];
  CHECK(s.mean[0] == only);
  CHECK(s.ci_low[0] == only);
  CHECK(s.ci_high[0] == only);
}

TEST_CASE("constant outcome") {
  const auto data = column(std::vector<double>(30, 0.0));
  BootstrapOptions opt;
  opt.replicates = 50;
  const auto s = bootstrap(data, outcome_mean, opt);
  CHECK(s.mean[0] == 0.0);
  CHECK(s.ci_low[0] == 0.0);
  CHECK(s.ci_high[0] == 0.0);
}

TEST_CASE("percentile interval matches a direct computation") {
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) y.push_back(std::sin(i * 1.7) + 0.01 * i);
  const auto data = column(y);
  BootstrapOptions opt;
  opt.replicates = 199;
  opt.seed = 12;
  const auto s = bootstrap(data, outcome_mean, opt);
  std::vector<double> reps;
  for (std::size_t b = 0; b < opt.replicates; ++b) {
    reps.push_back(outcome_mean(data.subset(bootstrap_rows(data.n(), opt.seed, b)))[0]);
  }
  double m = 0.0;
  for (double r : reps) m += r;
  m /= static_cast<double>(reps.size());
  CHECK(s.mean[0] == doctest::Approx(m).epsilon(1e-12));
  CHECK(s.ci_low[0] == doctest::Approx(type7(reps, 0.025)).epsilon(1e-12));
  CHECK(s.ci_high[0] == doctest::Approx(type7(reps, 0.975)).epsilon(1e-12));
  CHECK(s.ci_low[0] <= s.mean[0]);
  CHECK(s.mean[0] <= s.ci_high[0]);
}

TEST_CASE("bootstrap is reproducible across thread counts") {
  const auto data = sample_observational(find_scm("appc_main"), 500, 2);
  BootstrapOptions opt;
  opt.replicates = 40;
  opt.seed = 77;
  omp_set_num_threads(1);
  const auto a = bootstrap(data, outcome_mean, opt);
  omp_set_num_threads(3);
  const auto b = bootstrap(data, outcome_mean, opt);
  CHECK(a.values == b.values);
  CHECK(a.ci_low == b.ci_low);
  CHECK(bootstrap(data, outcome_mean, opt).values == a.values);
}

TEST_CASE("failed replicates are counted") {
  const auto data = column({1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  BootstrapOptions opt;
  opt.replicates = 60;
  opt.seed = 1;
  // Fails whenever the resample misses the largest value.
  const Statistic picky = [](const Dataset& d) {
    const double m = *std::max_element(d.y().begin(), d.y().end());
    if (m < 6.0) throw NoLocalData("missing");
    return std::vector<double>{m};
  };
  const auto s = bootstrap(data, picky, opt);
  std::size_t expected_failed = 0;
  for (std::size_t b = 0; b < opt.replicates; ++b) {
    const auto rows = bootstrap_rows(6, 1, b);
    if (std::find(rows.begin(), rows.end(), 5u) == rows.end()) ++expected_failed;
  }
  CHECK(s.failed == expected_failed);
  CHECK(s.effective() + s.failed == 60);
  CHECK(s.requested == 60);

  const Statistic never = [](const Dataset&) -> std::vector<double> { throw Error("no"); };
  CHECK_THROWS_AS(bootstrap(data, never, opt), Error);
  opt.replicates = 0;
  CHECK_THROWS_AS(bootstrap(data, outcome_mean, opt), InvalidArgument);
}

TEST_CASE("report rows") {
  MeasureReport r;
  r.measure = "p_cace";
  r.w = "0.5";
  r.point = 0.125;
  r.upper_bound = 0.5;
  r.bound_kind = "general";
  r.replicates = 10;
  r.seed = 3;
  std::ostringstream out;
  write_report_header(out);
  write_report_row(out, r);
  CHECK(out.str() ==
        "measure,w,point,lower_bound,upper_bound,bound_kind,boot_mean,ci_low,ci_high,"
        "replicates,failed,h,seed\n"
        "p_cace,\"0.5\",0.125,,0.5,general,0,0,0,10,0,0,3\n");
}

TEST_CASE("measure names") {
  CHECK(parse_measure("p_cpice") == Measure::kPCpice);
  CHECK(to_string(Measure::kNCace) == "n_cace");
  CHECK(parse_measure_list("all").size() == 6);
  CHECK(parse_measure_list("cace,n_cpice") == std::vector<Measure>{Measure::kCace, Measure::kNCpice});
  CHECK_THROWS_AS(parse_measure("ate"), InvalidArgument);
  CHECK(is_policy_measure(Measure::kCpice));
  CHECK_FALSE(is_policy_measure(Measure::kPCace));
  CHECK(format_point({0.5, 1.0}) == "0.5;1");
}

TEST_CASE("reports from a full estimation") {
  const auto data = sample_observational(find_scm("appc_main"), 800, 4);
  EstimationPlan plan;
  plan.w = {0.5};
  plan.x0 = 0.0;
  plan.x1 = 2.0;
  plan.policy = PolicyPair::single_shift(BaseLaw::uniform(0.0, 0.1), 1.9);
  plan.mc.seed = 5;
  plan.fixed_h = 0.5;

  const auto result = run_estimation(data, plan);
  CHECK(result.h == 0.5);
  REQUIRE(result.p_cace_bounds);
  CHECK(result.p_cace_bounds->lower == result.cace.positive);
  CHECK(result.value(Measure::kPCace) == result.cace.positive);
  REQUIRE(result.cpice);
  CHECK(result.value(Measure::kNCpice) == result.cpice->negative);

  ReportOptions opt;
  opt.replicates = 20;
  opt.seed = 8;
  const auto rows = estimate_reports(data, plan, opt);
  REQUIRE(rows.size() == 6);
  CHECK(rows[1].measure == "p_cace");
  CHECK(rows[1].point == result.cace.positive);
  REQUIRE(rows[1].lower_bound);
  CHECK(*rows[1].lower_bound == rows[1].point);
  CHECK(rows[0].bound_kind.empty());
  CHECK(rows[4].bound_kind == "stochastic");
  for (const auto& r : rows) {
    CHECK(r.replicates + r.failed == 20);
    CHECK(r.ci_low <= r.ci_high);
    CHECK(r.w == "0.5");
  }
  CHECK(estimate_reports(data, plan, opt)[2].ci_high == rows[2].ci_high);

  opt.replicates = 0;
  const auto plain = estimate_reports(data, plan, opt);
  CHECK(plain[1].boot_mean == plain[1].point);
  CHECK(plain[1].replicates == 0);

  EstimationPlan no_policy = plan;
  no_policy.policy.reset();
  opt.measures = {Measure::kCpice};
  CHECK_THROWS_AS(estimate_reports(data, no_policy, opt), InvalidArgument);
}
