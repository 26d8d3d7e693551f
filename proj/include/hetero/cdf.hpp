#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hetero/dataset.hpp"

namespace hetero {

enum class KernelFamily { kEpanechnikov, kGaussian, kUniform };

KernelFamily parse_kernel_family(std::string_view name);
std::string to_string(KernelFamily family);

/// Unnormalized-by-h kernel profile K(u).
double kernel_profile(KernelFamily family, double u);

struct KernelSpec {
  KernelFamily family = KernelFamily::kEpanechnikov;
  double h = 1.0;  // shared by X and every W coordinate

  void validate() const;
  /// K(u / h) / h.
  double weight(double u) const { return kernel_profile(family, u / h) / h; }
};

struct CdfOptions {
  // Divide X and W offsets by their sample standard deviations before
  // applying the kernel. Off by default: the bandwidth is on the data scale.
  bool standardize = false;
};

/// Local-linear estimate of P(Y < y | X = x, W = w) at one (x, w), valid for
/// every y. The intercept of the weighted least-squares fit of I(Y_i < y) on
/// (1, X_i - x, W_i - w) is linear in the responses, so the fit reduces to
/// per-row equivalent weights l_i; the estimate is the sum of l_i over rows
/// with Y_i < y. Rows are kept sorted by Y, so a query is a binary search.
class LocalFit {
 public:
  LocalFit() = default;
  LocalFit(std::span<const double> y_sorted, std::vector<double> cumulative,
           bool fallback, std::size_t dropped_columns, double total_weight);

  /// Clamped to [0, 1].
  double operator()(double y) const;
  double raw(double y) const;

  /// True when the fit degraded to the local-constant (weighted mean) form.
  bool fallback() const { return fallback_; }
  /// Slope columns removed because they had no spread under the kernel.
  std::size_t dropped_columns() const { return dropped_columns_; }
  double total_weight() const { return total_weight_; }

 private:
  std::span<const double> y_sorted_;
  std::vector<double> cumulative_;  // cumulative_[k] = sum of l over the k smallest Y
  bool fallback_ = false;
  std::size_t dropped_columns_ = 0;
  double total_weight_ = 0.0;
};

/// Fitted conditional-CDF evaluator alpha(y; x, w). Holds its training rows;
/// all evaluation is lazy and read-only.
class CdfModel {
 public:
  CdfModel(const Dataset& data, KernelSpec kernel, CdfOptions options = {});

  /// Throws NoLocalData when every kernel weight at (x, w) is zero. The
  /// returned fit refers to this model's storage.
  LocalFit local_fit(double x, std::span<const double> w) const;
  LocalFit local_fit(double x, std::span<const double> w, const KernelSpec& kernel) const;

  double eval(double y, double x, std::span<const double> w) const;

  std::size_t n() const { return y_.size(); }
  std::size_t d() const { return d_; }
  const KernelSpec& kernel() const { return kernel_; }
  const CdfOptions& options() const { return options_; }
  std::span<const double> y_sorted() const { return y_; }

 private:
  std::vector<double> y_;  // ascending
  std::vector<double> x_;  // aligned with y_
  std::vector<double> w_;  // aligned with y_, row-major
  std::size_t d_ = 0;
  KernelSpec kernel_;
  CdfOptions options_;
  double scale_x_ = 1.0;
  std::vector<double> scale_w_;
};

CdfModel fit_cdf(const Dataset& data, const KernelSpec& kernel, CdfOptions options = {});
double eval_cdf(const CdfModel& model, double y, double x, std::span<const double> w);

struct BandwidthScore {
  double h = 0.0;
  double cv_score = 0.0;  // +inf when infeasible
  bool feasible = false;
};

struct BandwidthSelection {
  double h = 0.0;
  std::vector<BandwidthScore> trace;  // in candidate order

  /// Feasible candidates ordered by score, ties to the smaller h.
  std::vector<double> ranked() const;
};

struct CvOptions {
  KernelFamily family = KernelFamily::kEpanechnikov;
  std::size_t y_grid = 25;
  // Held-out points scored per candidate; a strided subset is used above
  // this count. 0 means all points.
  std::size_t max_eval_points = 1000;
  // Default fold of row i is i mod folds; a shuffled assignment uses the seed.
  bool shuffle_folds = false;
  std::optional<YBounds> bounds;  // y-grid range; observed range if unset
  CdfOptions cdf;
};

/// K-fold cross-validated choice of h (leave-one-out when n < folds). The
/// score of a candidate is the mean
/// over held-out rows i and grid points y of
///   (I(Y_i < y) - alpha_{-fold(i)}(y; X_i, W_i))^2.
/// A candidate that leaves any held-out row without local data is
/// infeasible. Ties go to the smaller h. Throws NoLocalData when no
/// candidate is feasible.
BandwidthSelection select_bandwidth(const Dataset& data, std::span<const double> candidates,
                                    std::size_t folds, std::uint64_t seed,
                                    const CvOptions& options = {});

/// Kernel-weighted treatment frequency P(X = 1 | W = w) for a binary
/// treatment; only the W kernel enters.
class PropensityModel {
 public:
  PropensityModel(const Dataset& data, KernelSpec kernel, CdfOptions options = {});

  double treated(std::span<const double> w) const;
  /// P(X = arm | W = w) for arm in {0, 1}.
  double arm(int arm, std::span<const double> w) const;

  std::size_t d() const { return d_; }

 private:
  std::vector<double> x_;
  std::vector<double> w_;
  std::size_t d_ = 0;
  KernelSpec kernel_;
  std::vector<double> scale_w_;
};

PropensityModel fit_propensity(const Dataset& data, const KernelSpec& kernel,
                               CdfOptions options = {});

namespace reference {
/// Direct weighted least squares for one (y, x, w), solved with a dense QR
/// on the full design. Same degenerate-column and fallback rules as
/// CdfModel; used to check the fast path.
double local_linear_cdf(const Dataset& data, const KernelSpec& kernel, double y, double x,
                        std::span<const double> w);
}  // namespace reference

}  // namespace hetero
