#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hetero/dataset.hpp"

namespace hetero {

struct BootstrapOptions {
  std::size_t replicates = 100;
  std::uint64_t seed = 0;
  double level = 0.95;

  void validate() const;
};

/// Any estimator run with a fixed configuration; returns one value per
/// tracked quantity. A throw of hetero::Error marks the replicate failed.
using Statistic = std::function<std::vector<double>(const Dataset&)>;

struct BootstrapSummary {
  std::size_t requested = 0;
  std::size_t failed = 0;
  std::vector<std::vector<double>> values;  // [successful replicate][quantity]
  std::vector<double> mean;
  std::vector<double> ci_low;  // percentile interval at the given level
  std::vector<double> ci_high;

  std::size_t effective() const { return values.size(); }
};

/// Row indices for replicate b: n draws with replacement.
std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t b);

/// Nonparametric bootstrap. Replicates run in parallel with fixed per-replicate
/// seed streams, so results do not depend on the thread count. Throws Error
/// when every replicate fails.
BootstrapSummary bootstrap(const Dataset& data, const Statistic& statistic,
                           const BootstrapOptions& options);

/// One reported measure at one covariate point or stratum.
struct MeasureReport {
  std::string measure;
  std::string w;  // "0.5" or "0.5;1" or a stratum label
  double point = 0.0;
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;
  std::string bound_kind;
  double boot_mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t replicates = 0;
  std::size_t failed = 0;
  double h = 0.0;
  std::uint64_t seed = 0;
};

void write_report_header(std::ostream& out);
void write_report_row(std::ostream& out, const MeasureReport& report);

}  // namespace hetero
