#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hetero/pipeline.hpp"
#include "hetero/scm.hpp"

namespace hetero {

/// Plan used by the simulation tables: w = 0.5, switch 0 -> 2, policies
/// pi0 = Unif(0, 0.1) and pi1 = pi0 + 1.9, n1 = 10, n2 = 100, candidates
/// {1, 0.1, 0.01, 0.001}, [a, b] from each sample's outcome range.
EstimationPlan simulation_plan(std::uint64_t seed = 0);

struct StudyConfig {
  std::string scm = "appc_main";
  std::vector<std::size_t> sizes{100, 1000, 10000};
  std::size_t sims = 100;
  std::uint64_t seed = 2024;
  EstimationPlan plan = simulation_plan();
  std::size_t oracle_draws = 4'000'000;
};

/// Summary of one quantity at one sample size across simulations.
struct StudyCell {
  std::string scm;
  std::size_t n = 0;
  std::string quantity;  // "p_cace", "p_cace_upper", "p_cace_upper_max", ...
  double truth = 0.0;
  bool has_truth = false;
  double mean = 0.0;
  double band_low = 0.0;   // empirical 2.5% quantile
  double band_high = 0.0;  // empirical 97.5% quantile
  double mean_abs_error = 0.0;
  std::size_t sims = 0;
  std::size_t failed = 0;
  std::vector<double> values;  // one per successful simulation
};

/// Oracle values of the six measures at the plan's w, arms and policies.
std::map<std::string, double> study_truths(const ScmSpec& scm, const EstimationPlan& plan,
                                           std::size_t n_mc, std::uint64_t seed);

/// Per-simulation values of every tracked quantity, keyed by name.
std::map<std::string, double> simulate_once(const ScmSpec& scm, std::size_t n,
                                            const EstimationPlan& plan, std::uint64_t seed);

/// Simulations run in parallel; simulation s at size n uses seeds derived
/// from (config.seed, n, s), so results are independent of the thread count.
std::vector<StudyCell> run_study(const StudyConfig& config);

const StudyCell* find_cell(const std::vector<StudyCell>& cells, std::size_t n,
                           const std::string& quantity);

void write_study_csv(std::ostream& out, const std::vector<StudyCell>& cells);

}  // namespace hetero
