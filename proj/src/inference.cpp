#include "hetero/inference.hpp"

#include <limits>

#include "hetero/error.hpp"
#include "hetero/parallel.hpp"
#include "hetero/rng.hpp"
#include "hetero/stats.hpp"

namespace hetero {

void BootstrapOptions::validate() const {
  if (replicates < 1) throw InvalidArgument("bootstrap needs at least one replicate");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("bootstrap level must be in (0, 1)");
}

std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t b) {
  Rng rng(derive_seed(seed, "boot.rows", b));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = pick(rng);
  return rows;
}

BootstrapSummary bootstrap(const Dataset& data, const Statistic& statistic,
                           const BootstrapOptions& options) {
  options.validate();
  if (data.empty()) throw InvalidArgument("bootstrap: empty dataset");

  std::vector<std::optional<std::vector<double>>> slots(options.replicates);
  par::parallel_for(options.replicates, [&](std::size_t b) {
    const auto rows = bootstrap_rows(data.n(), options.seed, b);
    try {
      slots[b] = statistic(data.subset(rows));
    } catch (const Error&) {
      slots[b].reset();
    }
  });

  BootstrapSummary s;
  s.requested = options.replicates;
  for (auto& slot : slots) {
    if (slot) {
      s.values.push_back(std::move(*slot));
    } else {
      ++s.failed;
    }
  }
  if (s.values.empty()) throw Error("bootstrap: every replicate failed");

  const std::size_t q = s.values.front().size();
  const double tail = (1.0 - options.level) / 2.0;
  for (std::size_t k = 0; k < q; ++k) {
    std::vector<double> col;
    col.reserve(s.values.size());
    for (const auto& v : s.values) {
      if (v.size() != q) throw Error("bootstrap: statistic changed its output size");
      col.push_back(v[k]);
    }
    s.mean.push_back(mean(col));
    s.ci_low.push_back(quantile(col, tail));
    s.ci_high.push_back(quantile(col, 1.0 - tail));
  }
  return s;
}

void write_report_header(std::ostream& out) {
  out << "measure,w,point,lower_bound,upper_bound,bound_kind,boot_mean,ci_low,ci_high,"
         "replicates,failed,h,seed\n";
}

void write_report_row(std::ostream& out, const MeasureReport& r) {
  const auto saved = out.precision(std::numeric_limits<double>::max_digits10);
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  out << r.measure << ',' << '"' << r.w << '"' << ',' << r.point << ',';
  opt(r.lower_bound);
  out << ',';
  opt(r.upper_bound);
  out << ',' << r.bound_kind << ',' << r.boot_mean << ',' << r.ci_low << ',' << r.ci_high << ','
      << r.replicates << ',' << r.failed << ',' << r.h << ',' << r.seed << '\n';
  out.precision(saved);
}

}  // namespace hetero
