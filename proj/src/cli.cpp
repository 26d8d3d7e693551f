#include "hetero/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hetero/error.hpp"
#include "hetero/experiments.hpp"
#include "hetero/pipeline.hpp"
#include "hetero/rng.hpp"
#include "hetero/scm.hpp"

namespace hetero::cli {
namespace {

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  for (const auto& field : split_csv_record(text)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != field.size()) throw InvalidArgument("not a number: '" + field + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("empty number list");
  return out;
}

/// Writes either to the stream or atomically to a file.
void emit(const std::string& path, const std::string& header, std::ostream& out,
          const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    out << header;
    body(out);
    return;
  }
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  try {
    {
      std::ofstream f(tmp, std::ios::trunc);
      if (!f) throw Error("cannot open " + tmp.string());
      f << header;
      body(f);
      f.flush();
      if (!f) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

std::string config_header(const CLI::App& app) {
  std::istringstream lines(app.config_to_str(true, false));
  std::ostringstream os;
  os << "# command = " << app.get_name() << '\n';
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    os << "# " << line.substr(0, eq) << " = " << line.substr(eq + 1) << '\n';
  }
  return os.str();
}

struct SourceOptions {
  std::string input;
  std::string schema;
  std::string scm;
  std::size_t n = 1000;
  std::uint64_t data_seed = 1;
  std::string stratum;
};

void add_source(CLI::App* app, SourceOptions& s) {
  app->add_option("--input", s.input, "Observational CSV");
  app->add_option("--schema", s.schema, "Schema file for --input");
  app->add_option("--scm", s.scm, "Built-in model to sample instead of --input");
  app->add_option("--n", s.n, "Sample size for --scm")->capture_default_str();
  app->add_option("--data-seed", s.data_seed, "Sampling seed for --scm")->capture_default_str();
  app->add_option("--stratum", s.stratum, "Exact filter, e.g. age=30,smoker=no");
}

Dataset load_source(const SourceOptions& s) {
  if (s.input.empty() == s.scm.empty()) {
    throw InvalidArgument("give exactly one data source: --input or --scm");
  }
  Dataset data = [&] {
    if (!s.scm.empty()) return sample_observational(find_scm(s.scm), s.n, s.data_seed);
    if (s.schema.empty()) throw SchemaError("--input requires --schema");
    return load_csv(s.input, load_schema_file(s.schema));
  }();
  if (!s.stratum.empty()) {
    data = filter_covariates(data, parse_predicate(s.stratum)).without_constant_covariates();
  }
  return data;
}

struct EstimateOptions {
  SourceOptions source;
  std::vector<std::string> w;
  std::string measures;
  double x0 = 0.0;
  double x1 = 1.0;
  std::string policy;
  std::size_t n1 = 10;
  std::size_t n2 = 100;
  std::optional<double> a;
  std::optional<double> b;
  std::string kernel = "epanechnikov";
  std::string candidates = "1,0.1,0.01,0.001";
  std::size_t folds = 5;
  std::optional<double> h;
  std::size_t bootstrap = 100;
  bool reselect_h = false;
  std::string upper_form = "sharp";
  bool binary_bounds = false;
  bool no_bounds = false;
  std::uint64_t seed = 1;
  std::string output;
};

void add_estimate_options(CLI::App* app, EstimateOptions& o, bool bounds_only) {
  add_source(app, o.source);
  app->add_option("--w", o.w, "Covariate point, comma separated; repeatable");
  app->add_option("--measures", o.measures, "Comma list of cace,p_cace,n_cace,cpice,p_cpice,n_cpice");
  app->add_option("--x0", o.x0, "Baseline treatment value")->capture_default_str();
  app->add_option("--x1", o.x1, "Alternative treatment value")->capture_default_str();
  app->add_option("--policy", o.policy, "Policy pair, e.g. single_shift:uniform(0,0.1):1.9");
  app->add_option("--n1", o.n1, "Policy draws")->capture_default_str();
  app->add_option("--n2", o.n2, "Outcome draws")->capture_default_str();
  app->add_option("--a", o.a, "Lower end of the outcome range");
  app->add_option("--b", o.b, "Upper end of the outcome range");
  app->add_option("--kernel", o.kernel, "epanechnikov, gaussian or uniform")->capture_default_str();
  app->add_option("--candidates", o.candidates, "Bandwidth candidates")->capture_default_str();
  app->add_option("--folds", o.folds, "Cross-validation folds")->capture_default_str();
  app->add_option("--bandwidth", o.h, "Fixed bandwidth, skips selection");
  if (bounds_only) o.bootstrap = 0;
  app->add_option("--bootstrap", o.bootstrap, "Bootstrap replicates, 0 to skip")->capture_default_str();
  app->add_flag("--reselect-h", o.reselect_h, "Select the bandwidth again in every replicate");
  app->add_option("--upper-form", o.upper_form, "sharp or max")->capture_default_str();
  app->add_flag("--binary-bounds", o.binary_bounds, "Tighter bounds for a binary treatment");
  if (!bounds_only) app->add_flag("--no-bounds", o.no_bounds, "Skip bound computation");
  app->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  app->add_option("-o,--output", o.output, "Output CSV (stdout when omitted)");
}

void run_estimate(const CLI::App& app, const EstimateOptions& o, bool bounds_only,
                  std::ostream& out) {
  const Dataset data = load_source(o.source);

  EstimationPlan plan;
  plan.x0 = o.x0;
  plan.x1 = o.x1;
  if (!o.policy.empty()) {
    plan.policy = parse_policy_pair(o.policy, {data.x().begin(), data.x().end()});
  }
  plan.mc.n1 = o.n1;
  plan.mc.n2 = o.n2;
  plan.mc.seed = o.seed;
  if (o.a.has_value() != o.b.has_value()) throw InvalidArgument("give both --a and --b");
  if (o.a) plan.y_bounds = YBounds{*o.a, *o.b};
  plan.family = parse_kernel_family(o.kernel);
  plan.candidates = parse_numbers(o.candidates);
  plan.folds = o.folds;
  plan.fixed_h = o.h;
  plan.with_bounds = bounds_only || !o.no_bounds;
  plan.upper_form = parse_upper_form(o.upper_form);
  plan.binary_bounds = o.binary_bounds;

  ReportOptions report;
  if (!o.measures.empty()) {
    report.measures = parse_measure_list(o.measures);
  } else {
    report.measures = bounds_only ? std::vector<Measure>{Measure::kPCace, Measure::kNCace}
                                  : std::vector<Measure>{Measure::kCace, Measure::kPCace,
                                                         Measure::kNCace};
    if (plan.policy) {
      const auto extra = bounds_only
                             ? std::vector<Measure>{Measure::kPCpice, Measure::kNCpice}
                             : std::vector<Measure>{Measure::kCpice, Measure::kPCpice,
                                                    Measure::kNCpice};
      report.measures.insert(report.measures.end(), extra.begin(), extra.end());
    }
  }
  report.replicates = o.bootstrap;
  report.reselect_h = o.reselect_h;
  report.seed = derive_seed(o.seed, "cli.bootstrap");

  std::vector<std::vector<double>> points;
  for (const auto& w : o.w) points.push_back(parse_numbers(w));
  if (points.empty()) {
    if (o.source.stratum.empty()) throw InvalidArgument("give at least one --w");
    const auto w0 = data.w(0);
    points.emplace_back(w0.begin(), w0.end());
    report.w_label = o.source.stratum;
  }

  std::vector<MeasureReport> rows;
  for (const auto& w : points) {
    plan.w = w;
    auto part = estimate_reports(data, plan, report);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  emit(o.output, config_header(app), out, [&](std::ostream& s) {
    write_report_header(s);
    for (const auto& r : rows) write_report_row(s, r);
  });
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimate positive and negative conditional causal effects"};
  app.set_config("--config", "", "TOML or INI file with option values");
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Sample observational data from a built-in model");
  std::string sim_scm;
  std::size_t sim_n = 1000;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  sim->add_option("--scm", sim_scm, "Model name")->required();
  sim->add_option("--n", sim_n, "Rows")->capture_default_str();
  sim->add_option("--seed", sim_seed, "Seed")->capture_default_str();
  sim->add_option("-o,--output", sim_out, "Output CSV (stdout when omitted)");

  // estimate / bounds
  auto* est = app.add_subcommand("estimate", "Point estimates with bootstrap intervals");
  EstimateOptions est_opts;
  add_estimate_options(est, est_opts, false);
  auto* bnd = app.add_subcommand("bounds", "Lower and upper bounds");
  EstimateOptions bnd_opts;
  add_estimate_options(bnd, bnd_opts, true);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Measures over a grid of w");
  std::string sw_scm;
  std::string sw_mode = "oracle";
  double sw_from = 0.0, sw_to = 10.0, sw_step = 0.5;
  double sw_x0 = 0.0, sw_x1 = 1.0;
  std::size_t sw_nmc = 1'000'000;
  std::size_t sw_n = 10000;
  std::size_t sw_n2 = 100;
  std::optional<double> sw_h;
  std::string sw_candidates = "1,0.1,0.01,0.001";
  double sw_cmax = 100.0;
  std::size_t sw_cgrid = 2001;
  bool sw_antithetic = false;
  std::uint64_t sw_seed = 1;
  std::string sw_out;
  sweep->add_option("--scm", sw_scm, "Model name")->required();
  sweep->add_option("--mode", sw_mode, "oracle, estimator or tail-integrals")
      ->check(CLI::IsMember({"oracle", "estimator", "tail-integrals"}))
      ->capture_default_str();
  sweep->add_option("--w-from", sw_from, "First grid point")->capture_default_str();
  sweep->add_option("--w-to", sw_to, "Last grid point")->capture_default_str();
  sweep->add_option("--w-step", sw_step, "Grid step")->capture_default_str();
  sweep->add_option("--x0", sw_x0, "Baseline treatment")->capture_default_str();
  sweep->add_option("--x1", sw_x1, "Alternative treatment")->capture_default_str();
  sweep->add_option("--n-mc", sw_nmc, "Oracle draws per point")->capture_default_str();
  sweep->add_option("--n", sw_n, "Sample size in estimator mode")->capture_default_str();
  sweep->add_option("--n2", sw_n2, "Outcome draws in estimator mode")->capture_default_str();
  sweep->add_option("--bandwidth", sw_h, "Fixed bandwidth in estimator mode");
  sweep->add_option("--candidates", sw_candidates, "Bandwidth candidates")->capture_default_str();
  sweep->add_option("--c-max", sw_cmax, "Upper end of the threshold integral")->capture_default_str();
  sweep->add_option("--c-grid", sw_cgrid, "Threshold grid points")->capture_default_str();
  sweep->add_flag("--antithetic", sw_antithetic, "Pair each oracle draw with its mirror image");
  sweep->add_option("--seed", sw_seed, "Seed")->capture_default_str();
  sweep->add_option("-o,--output", sw_out, "Output CSV (stdout when omitted)");

  // oracle
  auto* orc = app.add_subcommand("oracle", "Ground truth by brute-force simulation");
  std::string or_scm;
  std::vector<std::string> or_w;
  double or_x0 = 0.0, or_x1 = 1.0;
  std::string or_policy;
  std::size_t or_nmc = 1'000'000;
  bool or_binary = false;
  bool or_antithetic = false;
  std::uint64_t or_seed = 1;
  std::string or_out;
  orc->add_option("--scm", or_scm, "Model name")->required();
  orc->add_option("--w", or_w, "Covariate point, comma separated; repeatable")->required();
  orc->add_option("--x0", or_x0, "Baseline treatment")->capture_default_str();
  orc->add_option("--x1", or_x1, "Alternative treatment")->capture_default_str();
  orc->add_option("--policy", or_policy, "Policy pair for the CPICE family");
  orc->add_option("--n-mc", or_nmc, "Draws")->capture_default_str();
  orc->add_flag("--binary-rates", or_binary, "Also report P(Y0=0,Y1=1) and P(Y0=1,Y1=0)");
  orc->add_flag("--antithetic", or_antithetic, "Pair each draw with its mirror image");
  orc->add_option("--seed", or_seed, "Seed")->capture_default_str();
  orc->add_option("-o,--output", or_out, "Output CSV (stdout when omitted)");

  // reproduce-tables
  auto* rep = app.add_subcommand("reproduce-tables", "Simulation study summary");
  std::vector<std::string> rep_scms{"appc_main", "appc_violated"};
  std::vector<std::size_t> rep_sizes{100, 1000, 10000};
  std::size_t rep_sims = 100;
  std::size_t rep_oracle = 4'000'000;
  std::uint64_t rep_seed = 2024;
  std::string rep_out;
  rep->add_option("--scm", rep_scms, "Models")->capture_default_str();
  rep->add_option("--sizes", rep_sizes, "Sample sizes")->capture_default_str();
  rep->add_option("--sims", rep_sims, "Simulations per size")->capture_default_str();
  rep->add_option("--oracle-draws", rep_oracle, "Draws for the truth column")->capture_default_str();
  rep->add_option("--seed", rep_seed, "Master seed")->capture_default_str();
  rep->add_option("-o,--output", rep_out, "Output CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*sim) {
      const Dataset data = sample_observational(find_scm(sim_scm), sim_n, sim_seed);
      emit(sim_out, config_header(*sim), out, [&](std::ostream& s) { write_csv(s, data); });
    } else if (*est) {
      run_estimate(*est, est_opts, false, out);
    } else if (*bnd) {
      run_estimate(*bnd, bnd_opts, true, out);
    } else if (*sweep) {
      const ScmSpec scm = find_scm(sw_scm);
      if (scm.d() != 1) throw InvalidArgument("sweep needs a model with one covariate");
      if (!(sw_step > 0.0) || sw_to < sw_from) throw InvalidArgument("bad sweep grid");
      std::vector<double> grid;
      const auto steps = static_cast<std::size_t>(std::floor((sw_to - sw_from) / sw_step + 1e-9));
      for (std::size_t i = 0; i <= steps; ++i) grid.push_back(sw_from + sw_step * static_cast<double>(i));

      std::ostringstream body;
      body.precision(std::numeric_limits<double>::max_digits10);
      if (sw_mode == "oracle") {
        body << "w,cace,p_cace,n_cace,p_minus_n,cace_se,p_cace_se,n_cace_se\n";
        for (double w : grid) {
          const std::vector<double> pt{w};
          const auto r = oracle_cace_parts(scm, pt, sw_x0, sw_x1, sw_nmc, sw_seed, sw_antithetic);
          body << w << ',' << r.total.value << ',' << r.positive.value << ','
               << r.negative.value << ',' << r.positive.value - r.negative.value << ','
               << r.total.mc_std_error << ',' << r.positive.mc_std_error << ','
               << r.negative.mc_std_error << '\n';
        }
      } else if (sw_mode == "estimator") {
        const Dataset data = sample_observational(scm, sw_n, sw_seed);
        body << "w,cace,p_cace,n_cace,p_minus_n,h\n";
        for (double w : grid) {
          EstimationPlan plan;
          plan.w = {w};
          plan.x0 = sw_x0;
          plan.x1 = sw_x1;
          plan.mc.n1 = 1;
          plan.mc.n2 = sw_n2;
          plan.mc.seed = sw_seed;
          plan.candidates = parse_numbers(sw_candidates);
          plan.fixed_h = sw_h;
          plan.with_bounds = false;
          const auto r = run_estimation(data, plan);
          body << w << ',' << r.cace.total << ',' << r.cace.positive << ',' << r.cace.negative
               << ',' << r.cace.positive - r.cace.negative << ',' << r.h << '\n';
        }
      } else {
        body << "w,tbr_integral,thr_integral,difference\n";
        for (double w : grid) {
          const std::vector<double> pt{w};
          const auto r =
              oracle_thr_tbr_c_integral(scm, pt, sw_cmax, sw_nmc, sw_cgrid, sw_seed, sw_x0, sw_x1);
          body << w << ',' << r.benefit.value << ',' << r.harm.value << ','
               << r.benefit.value - r.harm.value << '\n';
        }
      }
      emit(sw_out, config_header(*sweep), out, [&](std::ostream& s) { s << body.str(); });
    } else if (*orc) {
      const ScmSpec scm = find_scm(or_scm);
      std::ostringstream body;
      body.precision(std::numeric_limits<double>::max_digits10);
      body << "w,measure,value,mc_std_error,mc_draws\n";
      for (const auto& text : or_w) {
        const auto w = parse_numbers(text);
        const std::string label = format_point(w);
        auto row = [&](const OracleResult& r) {
          body << '"' << label << "\"," << r.measure << ',' << r.value << ',' << r.mc_std_error
               << ',' << r.mc_draws << '\n';
        };
        const auto c = oracle_cace_parts(scm, w, or_x0, or_x1, or_nmc, or_seed, or_antithetic);
        row(c.total);
        row(c.positive);
        row(c.negative);
        if (!or_policy.empty()) {
          const auto p = oracle_cpice_parts(scm, w, parse_policy_pair(or_policy), or_nmc, or_seed,
                                            or_antithetic);
          row(p.total);
          row(p.positive);
          row(p.negative);
        }
        if (or_binary) {
          const auto b = oracle_binary_rates(scm, w, or_x0, or_x1, or_nmc, or_seed);
          row(b.benefit);
          row(b.harm);
        }
      }
      emit(or_out, config_header(*orc), out, [&](std::ostream& s) { s << body.str(); });
    } else if (*rep) {
      std::vector<StudyCell> cells;
      for (const auto& name : rep_scms) {
        StudyConfig cfg;
        cfg.scm = name;
        cfg.sizes = rep_sizes;
        cfg.sims = rep_sims;
        cfg.seed = rep_seed;
        cfg.oracle_draws = rep_oracle;
        const auto part = run_study(cfg);
        cells.insert(cells.end(), part.begin(), part.end());
      }
      emit(rep_out, config_header(*rep), out, [&](std::ostream& s) { write_study_csv(s, cells); });
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace hetero::cli
