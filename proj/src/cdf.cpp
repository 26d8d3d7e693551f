#include "hetero/cdf.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hetero/error.hpp"
#include "hetero/parallel.hpp"
#include "hetero/rng.hpp"
#include "hetero/stats.hpp"

namespace hetero {

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "epanechnikov" || name == "epa") return KernelFamily::kEpanechnikov;
  if (name == "gaussian" || name == "normal") return KernelFamily::kGaussian;
  if (name == "uniform" || name == "box") return KernelFamily::kUniform;
  throw InvalidArgument("unknown kernel '" + std::string(name) + "'");
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::kEpanechnikov: return "epanechnikov";
    case KernelFamily::kGaussian: return "gaussian";
    case KernelFamily::kUniform: return "uniform";
  }
  return "?";
}

double kernel_profile(KernelFamily family, double u) {
  switch (family) {
    case KernelFamily::kEpanechnikov:
      return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelFamily::kGaussian:
      return 0.3989422804014327 * std::exp(-0.5 * u * u);
    case KernelFamily::kUniform:
      return std::abs(u) <= 1.0 ? 0.5 : 0.0;
  }
  return 0.0;
}

void KernelSpec::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("kernel bandwidth must be > 0");
}

namespace {

std::vector<double> column_scales(std::span<const double> flat, std::size_t n, std::size_t d,
                                  bool standardize) {
  std::vector<double> scales(d, 1.0);
  if (!standardize) return scales;
  std::vector<double> col(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = flat[i * d + j];
    const double sd = sample_sd(col);
    scales[j] = sd > 0.0 ? sd : 1.0;
  }
  return scales;
}

// Product kernel over the scaled offsets; 0 as soon as one factor is 0.
double product_weight(const KernelSpec& k, double dx, const double* w_row,
                      std::span<const double> w, std::span<const double> scale_w,
                      bool include_x) {
  double weight = include_x ? k.weight(dx) : 1.0;
  for (std::size_t j = 0; j < w.size() && weight != 0.0; ++j) {
    weight *= k.weight((w_row[j] - w[j]) / scale_w[j]);
  }
  return weight;
}

// Columns of the local design (after the intercept) whose weighted spread
// vanishes. moments[j] = sum k g_j, second[j] = sum k g_j^2, total = sum k.
std::vector<bool> degenerate_columns(std::span<const double> first,
                                     std::span<const double> second, double total) {
  std::vector<bool> out(first.size(), false);
  for (std::size_t j = 0; j < first.size(); ++j) {
    const double m1 = first[j] / total;
    const double m2 = second[j] / total;
    const double spread = m2 - m1 * m1;
    out[j] = !(spread > 1e-12 * std::max(m2, std::numeric_limits<double>::min()));
  }
  return out;
}

// Solves M v = e1 over the active design columns; nullopt when singular.
std::optional<Eigen::VectorXd> solve_intercept(const Eigen::MatrixXd& m) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-10);
  if (qr.rank() < m.rows()) return std::nullopt;
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(m.rows());
  e1(0) = 1.0;
  return Eigen::VectorXd(qr.solve(e1));
}

}  // namespace

LocalFit::LocalFit(std::span<const double> y_sorted, std::vector<double> cumulative,
                   bool fallback, std::size_t dropped_columns, double total_weight)
    : y_sorted_(y_sorted),
      cumulative_(std::move(cumulative)),
      fallback_(fallback),
      dropped_columns_(dropped_columns),
      total_weight_(total_weight) {}

double LocalFit::raw(double y) const {
  const auto k = static_cast<std::size_t>(
      std::lower_bound(y_sorted_.begin(), y_sorted_.end(), y) - y_sorted_.begin());
  return cumulative_[k];
}

double LocalFit::operator()(double y) const { return std::clamp(raw(y), 0.0, 1.0); }

CdfModel::CdfModel(const Dataset& data, KernelSpec kernel, CdfOptions options)
    : d_(data.d()), kernel_(kernel), options_(options) {
  kernel_.validate();
  if (data.n() < d_ + 2) {
    throw InvalidArgument("fit_cdf: need at least d + 2 = " + std::to_string(d_ + 2) +
                          " rows, got " + std::to_string(data.n()));
  }
  const std::size_t n = data.n();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data.y()[a] < data.y()[b]; });
  y_.reserve(n);
  x_.reserve(n);
  w_.reserve(n * d_);
  for (std::size_t i : order) {
    y_.push_back(data.y()[i]);
    x_.push_back(data.x()[i]);
    const auto row = data.w(i);
    w_.insert(w_.end(), row.begin(), row.end());
  }
  scale_x_ = column_scales(x_, n, 1, options_.standardize)[0];
  scale_w_ = column_scales(w_, n, d_, options_.standardize);
}

LocalFit CdfModel::local_fit(double x, std::span<const double> w) const {
  return local_fit(x, w, kernel_);
}

LocalFit CdfModel::local_fit(double x, std::span<const double> w,
                             const KernelSpec& kernel) const {
  if (w.size() != d_) throw InvalidArgument("local_fit: covariate point has wrong dimension");
  kernel.validate();
  const std::size_t n = y_.size();
  const std::size_t p = d_ + 2;  // intercept, x, w_1..w_d

  // Pass 1: kernel weights and the p x p moment matrix, reduced per fixed
  // chunk and then in chunk order.
  std::vector<double> weights(n);
  const std::size_t chunks = par::chunk_count(n);
  std::vector<std::vector<double>> partial(chunks);
  par::parallel_for(chunks, [&](std::size_t c) {
    std::vector<double> m(p * p, 0.0);
    std::vector<double> g(p);
    const std::size_t end = std::min(n, (c + 1) * par::kChunk);
    for (std::size_t i = c * par::kChunk; i < end; ++i) {
      const double dx = (x_[i] - x) / scale_x_;
      const double* row = w_.data() + i * d_;
      const double k = product_weight(kernel, dx, row, w, scale_w_, true);
      weights[i] = k;
      if (k == 0.0) continue;
      g[0] = 1.0;
      g[1] = dx;
      for (std::size_t j = 0; j < d_; ++j) g[2 + j] = (row[j] - w[j]) / scale_w_[j];
      for (std::size_t a = 0; a < p; ++a) {
        const double ka = k * g[a];
        for (std::size_t b = a; b < p; ++b) m[a * p + b] += ka * g[b];
      }
    }
    partial[c] = std::move(m);
  });
  std::vector<double> moments(p * p, 0.0);
  for (const auto& m : partial) {
    for (std::size_t i = 0; i < p * p; ++i) moments[i] += m[i];
  }
  const double total = moments[0];
  if (!(total > 0.0)) {
    throw NoLocalData("no local data at the query point (total kernel weight is zero)");
  }

  std::vector<double> first(p - 1), second(p - 1);
  for (std::size_t j = 1; j < p; ++j) {
    first[j - 1] = moments[j];
    second[j - 1] = moments[j * p + j];
  }
  const auto degenerate = degenerate_columns(first, second, total);
  std::vector<std::size_t> active{0};
  for (std::size_t j = 1; j < p; ++j) {
    if (!degenerate[j - 1]) active.push_back(j);
  }
  const std::size_t dropped = p - active.size();

  Eigen::MatrixXd m(active.size(), active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t b = a; b < active.size(); ++b) {
      const double v = moments[active[a] * p + active[b]];
      m(a, b) = v;
      m(b, a) = v;
    }
  }
  const auto solution = active.size() > 1 ? solve_intercept(m) : std::nullopt;
  const bool fallback = !solution.has_value();

  // Pass 2: equivalent weights l_i.
  std::vector<double> ell(n);
  par::parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * par::kChunk);
    for (std::size_t i = c * par::kChunk; i < end; ++i) {
      const double k = weights[i];
      if (k == 0.0) {
        ell[i] = 0.0;
      } else if (fallback) {
        ell[i] = k / total;
      } else {
        const double* row = w_.data() + i * d_;
        double dot = (*solution)(0);
        for (std::size_t a = 1; a < active.size(); ++a) {
          const std::size_t col = active[a];
          const double g = col == 1 ? (x_[i] - x) / scale_x_
                                    : (row[col - 2] - w[col - 2]) / scale_w_[col - 2];
          dot += (*solution)(static_cast<Eigen::Index>(a)) * g;
        }
        ell[i] = k * dot;
      }
    }
  });

  std::vector<double> cumulative(n + 1);
  cumulative[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) cumulative[i + 1] = cumulative[i] + ell[i];
  return LocalFit(y_, std::move(cumulative), fallback, dropped, total);
}

double CdfModel::eval(double y, double x, std::span<const double> w) const {
  return local_fit(x, w)(y);
}

CdfModel fit_cdf(const Dataset& data, const KernelSpec& kernel, CdfOptions options) {
  return CdfModel(data, kernel, options);
}

double eval_cdf(const CdfModel& model, double y, double x, std::span<const double> w) {
  return model.eval(y, x, w);
}

std::vector<double> BandwidthSelection::ranked() const {
  std::vector<BandwidthScore> ok;
  for (const auto& s : trace) {
    if (s.feasible) ok.push_back(s);
  }
  std::stable_sort(ok.begin(), ok.end(), [](const BandwidthScore& a, const BandwidthScore& b) {
    if (a.cv_score != b.cv_score) return a.cv_score < b.cv_score;
    return a.h < b.h;
  });
  std::vector<double> out;
  for (const auto& s : ok) out.push_back(s.h);
  return out;
}

BandwidthSelection select_bandwidth(const Dataset& data, std::span<const double> candidates,
                                    std::size_t folds, std::uint64_t seed,
                                    const CvOptions& options) {
  if (candidates.empty()) throw InvalidArgument("select_bandwidth: no candidates");
  if (folds < 2) throw InvalidArgument("select_bandwidth: folds must be >= 2");
  if (options.y_grid < 1) throw InvalidArgument("select_bandwidth: y grid must be non-empty");
  for (double h : candidates) KernelSpec{options.family, h}.validate();
  const std::size_t n = data.n();
  if (n < 2) throw InvalidArgument("select_bandwidth: need at least two rows");
  folds = std::min(folds, n);

  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[i] = i % folds;
  if (options.shuffle_folds) {
    Rng rng(derive_seed(seed, "cv.folds"));
    std::shuffle(fold.begin(), fold.end(), rng);
  }

  const YBounds bounds = options.bounds ? *options.bounds : infer_y_bounds(data);
  std::vector<double> grid(options.y_grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid[k] = grid.size() == 1 ? 0.5 * (bounds.a + bounds.b)
                               : bounds.a + bounds.width() * static_cast<double>(k) /
                                                static_cast<double>(grid.size() - 1);
  }

  // One training model per fold, shared by all candidates.
  std::vector<CdfModel> models;
  models.reserve(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold[i] != f) rows.push_back(i);
    }
    models.emplace_back(data.subset(rows), KernelSpec{options.family, candidates[0]},
                        options.cdf);
  }

  std::vector<std::size_t> eval_rows;
  if (options.max_eval_points == 0 || n <= options.max_eval_points) {
    eval_rows.resize(n);
    std::iota(eval_rows.begin(), eval_rows.end(), std::size_t{0});
  } else {
    const double stride = static_cast<double>(n) / static_cast<double>(options.max_eval_points);
    for (std::size_t k = 0; k < options.max_eval_points; ++k) {
      eval_rows.push_back(static_cast<std::size_t>(static_cast<double>(k) * stride));
    }
  }

  BandwidthSelection sel;
  for (double h : candidates) {
    const KernelSpec kernel{options.family, h};
    std::vector<double> scores(eval_rows.size(), 0.0);
    bool feasible = true;
    try {
      par::parallel_for(eval_rows.size(), [&](std::size_t e) {
        const std::size_t i = eval_rows[e];
        const auto fit = models[fold[i]].local_fit(data.x()[i], data.w(i), kernel);
        double s = 0.0;
        for (double g : grid) {
          const double r = (data.y()[i] < g ? 1.0 : 0.0) - fit(g);
          s += r * r;
        }
        scores[e] = s;
      });
    } catch (const NoLocalData&) {
      feasible = false;
    }
    BandwidthScore score{h, std::numeric_limits<double>::infinity(), feasible};
    if (feasible) {
      CompensatedSum total;
      for (double s : scores) total.add(s);
      score.cv_score =
          total.value() / static_cast<double>(eval_rows.size() * grid.size());
    }
    sel.trace.push_back(score);
  }
  const auto ranked = sel.ranked();
  if (ranked.empty()) {
    throw NoLocalData("select_bandwidth: every candidate leaves held-out rows without local data");
  }
  sel.h = ranked.front();
  return sel;
}

PropensityModel::PropensityModel(const Dataset& data, KernelSpec kernel, CdfOptions options)
    : x_(data.x().begin(), data.x().end()),
      w_(data.w_flat().begin(), data.w_flat().end()),
      d_(data.d()),
      kernel_(kernel) {
  kernel_.validate();
  if (!data.binary_treatment()) {
    for (double v : x_) {
      if (v != 0.0 && v != 1.0) {
        throw InvalidArgument("fit_propensity: treatment must be binary");
      }
    }
  }
  if (data.empty()) throw InvalidArgument("fit_propensity: empty dataset");
  scale_w_ = column_scales(w_, x_.size(), d_, options.standardize);
}

double PropensityModel::treated(std::span<const double> w) const {
  if (w.size() != d_) throw InvalidArgument("propensity: covariate point has wrong dimension");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const double k = product_weight(kernel_, 0.0, w_.data() + i * d_, w, scale_w_, false);
    num += k * x_[i];
    den += k;
  }
  if (!(den > 0.0)) throw NoLocalData("propensity: no local data at the query point");
  return std::clamp(num / den, 0.0, 1.0);
}

double PropensityModel::arm(int arm, std::span<const double> w) const {
  const double p1 = treated(w);
  if (arm == 1) return p1;
  if (arm == 0) return 1.0 - p1;
  throw InvalidArgument("propensity: arm must be 0 or 1");
}

PropensityModel fit_propensity(const Dataset& data, const KernelSpec& kernel,
                               CdfOptions options) {
  return PropensityModel(data, kernel, options);
}

namespace reference {

double local_linear_cdf(const Dataset& data, const KernelSpec& kernel, double y, double x,
                        std::span<const double> w) {
  kernel.validate();
  const std::size_t n = data.n();
  const std::size_t d = data.d();
  const std::size_t p = d + 2;
  Eigen::MatrixXd design(n, p);
  Eigen::VectorXd k(n), r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.w(i);
    double wt = kernel.weight(data.x()[i] - x);
    for (std::size_t j = 0; j < d; ++j) wt *= kernel.weight(row[j] - w[j]);
    const auto ii = static_cast<Eigen::Index>(i);
    k(ii) = wt;
    r(ii) = data.y()[i] < y ? 1.0 : 0.0;
    design(ii, 0) = 1.0;
    design(ii, 1) = data.x()[i] - x;
    for (std::size_t j = 0; j < d; ++j) {
      design(ii, static_cast<Eigen::Index>(2 + j)) = row[j] - w[j];
    }
  }
  const double total = k.sum();
  if (!(total > 0.0)) throw NoLocalData("no local data at the query point");

  std::vector<Eigen::Index> active{0};
  for (Eigen::Index j = 1; j < static_cast<Eigen::Index>(p); ++j) {
    const double m1 = k.dot(design.col(j)) / total;
    const double m2 = k.dot(design.col(j).cwiseAbs2()) / total;
    if (m2 - m1 * m1 > 1e-12 * std::max(m2, std::numeric_limits<double>::min())) {
      active.push_back(j);
    }
  }
  const double nadaraya_watson = k.dot(r) / total;
  if (active.size() == 1) return std::clamp(nadaraya_watson, 0.0, 1.0);

  // Rows with zero weight do not enter the fit.
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    if (k(i) > 0.0) rows.push_back(i);
  }
  Eigen::MatrixXd a(rows.size(), active.size());
  Eigen::VectorXd b(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double s = std::sqrt(k(rows[i]));
    for (std::size_t j = 0; j < active.size(); ++j) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          s * design(rows[i], active[j]);
    }
    b(static_cast<Eigen::Index>(i)) = s * r(rows[i]);
  }
  // Rank is judged on the normal matrix, matching the fast path.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> normal(a.transpose() * a);
  normal.setThreshold(1e-10);
  if (normal.rank() < static_cast<Eigen::Index>(active.size())) {
    return std::clamp(nadaraya_watson, 0.0, 1.0);
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  return std::clamp(coef(0), 0.0, 1.0);
}

}  // namespace reference
}  // namespace hetero
