#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hetero/dataset.hpp"
#include "hetero/policy.hpp"
#include "hetero/rng.hpp"

namespace hetero {

struct NoiseLaw {
  enum class Kind { kUniform, kNormal };
  Kind kind = Kind::kUniform;
  double a = 0.0;  // lo or mean
  double b = 1.0;  // hi or sd

  static NoiseLaw uniform(double lo, double hi) { return {Kind::kUniform, lo, hi}; }
  static NoiseLaw normal(double mean, double sd) { return {Kind::kNormal, mean, sd}; }
  double sample(Rng& rng) const;
  /// Reflection through the centre of the law (a + b - u or 2 mean - u).
  double mirror(double u) const { return kind == Kind::kUniform ? a + b - u : 2.0 * a - u; }
  std::string describe() const;
};

enum class TreatmentKind { kBinary, kContinuous };

/// Executable structural causal model
///   W := f_W(U_W),  X := f_X(W, U_X),  Y := f_Y(X, W, U_Y).
/// U_Y may be a vector (e.g. a second additive noise term).
struct ScmSpec {
  using OutcomeFn =
      std::function<double(double x, std::span<const double> w, std::span<const double> u_y)>;
  using TreatmentFn = std::function<double(std::span<const double> w, double u_x)>;
  using CovariateFn = std::function<void(std::span<const double> u_w, std::span<double> w)>;

  std::string name;
  std::string description;
  TreatmentKind treatment_kind = TreatmentKind::kContinuous;
  bool monotone_in_uy = true;  // metadata only
  std::vector<NoiseLaw> u_w;
  NoiseLaw u_x;
  std::vector<NoiseLaw> u_y;
  CovariateFn f_w;
  TreatmentFn f_x;
  OutcomeFn f_y;

  std::size_t d() const { return u_w.size(); }
};

/// Named built-in models.
std::vector<ScmSpec> builtin_scms();
std::vector<std::string> builtin_scm_names();
/// Throws InvalidArgument for an unknown name.
ScmSpec find_scm(std::string_view name);

/// n i.i.d. rows; the draw order per row is U_W, U_X, U_Y.
Dataset sample_observational(const ScmSpec& scm, std::size_t n, std::uint64_t seed);

struct OracleResult {
  std::string measure;
  double value = 0.0;
  std::size_t mc_draws = 0;
  double mc_std_error = 0.0;
};

/// Total, positive-part and negative-part effect computed on one shared set
/// of draws, so positive - negative == total up to summation rounding.
struct EffectParts {
  OracleResult total;
  OracleResult positive;
  OracleResult negative;
};

/// Draws of U_Y are split into fixed blocks with one seed stream per block;
/// results do not depend on the number of threads.
inline constexpr std::size_t kOracleBlock = std::size_t{1} << 15;

/// Brute-force CACE / P-CACE / N-CACE at covariate w for the switch
/// x0 -> x1, from ICE_i = f_Y(x1, w, u_i) - f_Y(x0, w, u_i). With
/// `antithetic`, every odd draw is the mirror image of the one before it.
EffectParts oracle_cace_parts(const ScmSpec& scm, std::span<const double> w, double x0,
                              double x1, std::size_t n_mc, std::uint64_t seed,
                              bool antithetic = false);

/// Same for stochastic interventions: each draw pairs (x0, x1) ~ policies
/// with one U_Y draw. Policy draws use their own stream, so Dirac policies
/// reproduce oracle_cace_parts exactly.
EffectParts oracle_cpice_parts(const ScmSpec& scm, std::span<const double> w,
                               const PolicyPair& policies, std::size_t n_mc,
                               std::uint64_t seed, bool antithetic = false);

/// (integral of TBR_c over [0, c_max], integral of THR_c over [0, c_max])
/// for the switch x0 -> x1, trapezoid rule on n_c_grid uniform points.
struct TailIntegrals {
  OracleResult benefit;  // TBR_c = P(ICE > c)
  OracleResult harm;     // THR_c = P(-ICE > c)
};
TailIntegrals oracle_thr_tbr_c_integral(const ScmSpec& scm, std::span<const double> w,
                                        double c_max, std::size_t n_mc,
                                        std::size_t n_c_grid, std::uint64_t seed,
                                        double x0 = 0.0, double x1 = 1.0);

/// For binary outcomes: P(Y_x0 = 0, Y_x1 = 1 | w) and P(Y_x0 = 1, Y_x1 = 0 | w)
/// by direct counting.
struct BinaryRates {
  OracleResult benefit;
  OracleResult harm;
};
BinaryRates oracle_binary_rates(const ScmSpec& scm, std::span<const double> w, double x0,
                                double x1, std::size_t n_mc, std::uint64_t seed);

/// Conditional CDF P(Y < y | X = x, W = w) by brute force over U_Y draws.
double oracle_conditional_cdf(const ScmSpec& scm, double y, double x,
                              std::span<const double> w, std::size_t n_mc,
                              std::uint64_t seed);

namespace reference {
/// Single-threaded versions of the oracle loops, same streams and blocks.
EffectParts oracle_cpice_parts_serial(const ScmSpec& scm, std::span<const double> w,
                                      const PolicyPair& policies, std::size_t n_mc,
                                      std::uint64_t seed, bool antithetic = false);
}  // namespace reference

}  // namespace hetero
