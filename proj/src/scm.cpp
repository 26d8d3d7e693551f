#include "hetero/scm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "hetero/error.hpp"
#include "hetero/parallel.hpp"
#include "hetero/stats.hpp"

namespace hetero {

double NoiseLaw::sample(Rng& rng) const {
  return kind == Kind::kUniform ? hetero::uniform(rng, a, b) : a + b * standard_normal(rng);
}

std::string NoiseLaw::describe() const {
  std::ostringstream os;
  os << (kind == Kind::kUniform ? "Unif(" : "N(") << a << "," << b << ")";
  return os.str();
}

namespace {

double indicator(bool b) { return b ? 1.0 : 0.0; }

ScmSpec::CovariateFn identity_covariates() {
  return [](std::span<const double> u, std::span<double> w) {
    std::copy(u.begin(), u.end(), w.begin());
  };
}

ScmSpec::TreatmentFn bernoulli_half() {
  return [](std::span<const double>, double u) { return indicator(u < 0.5); };
}

ScmSpec appc_main() {
  ScmSpec s;
  s.name = "appc_main";
  s.description = "Y := (0.5X + 0.1W + 1)(0.5 - U_Y), X := W + U_X; W, U_X, U_Y ~ Unif(0,1)";
  s.treatment_kind = TreatmentKind::kContinuous;
  s.monotone_in_uy = true;
  s.u_w = {NoiseLaw::uniform(0, 1)};
  s.u_x = NoiseLaw::uniform(0, 1);
  s.u_y = {NoiseLaw::uniform(0, 1)};
  s.f_w = identity_covariates();
  s.f_x = [](std::span<const double> w, double u) { return w[0] + u; };
  s.f_y = [](double x, std::span<const double> w, std::span<const double> u) {
    return (0.5 * x + 0.1 * w[0] + 1.0) * (-u[0] + 0.5);
  };
  return s;
}

}  // namespace

std::vector<ScmSpec> builtin_scms() {
  std::vector<ScmSpec> out;

  {
    ScmSpec s;
    s.name = "ex1_additive";
    s.description = "Y := X + U_Y, U_Y ~ N(0,1); X ~ Bernoulli(0.5); W ~ Unif(0,1) inert";
    s.treatment_kind = TreatmentKind::kBinary;
    s.u_w = {NoiseLaw::uniform(0, 1)};
    s.u_x = NoiseLaw::uniform(0, 1);
    s.u_y = {NoiseLaw::normal(0, 1)};
    s.f_w = identity_covariates();
    s.f_x = bernoulli_half();
    s.f_y = [](double x, std::span<const double>, std::span<const double> u) {
      return x + u[0];
    };
    out.push_back(std::move(s));
  }
  {
    ScmSpec s;
    s.name = "ex2_multiplicative";
    s.description = "Y := X * U_Y, U_Y ~ N(0,1); X ~ Bernoulli(0.5); W ~ Unif(0,1) inert";
    s.treatment_kind = TreatmentKind::kBinary;
    s.monotone_in_uy = false;
    s.u_w = {NoiseLaw::uniform(0, 1)};
    s.u_x = NoiseLaw::uniform(0, 1);
    s.u_y = {NoiseLaw::normal(0, 1)};
    s.f_w = identity_covariates();
    s.f_x = bernoulli_half();
    s.f_y = [](double x, std::span<const double>, std::span<const double> u) {
      return x * u[0];
    };
    out.push_back(std::move(s));
  }
  {
    ScmSpec s;
    s.name = "ex3_null";
    s.description = "Y := U_Y, U_Y ~ N(0,1); X ~ Bernoulli(0.5); W ~ Unif(0,1) inert";
    s.treatment_kind = TreatmentKind::kBinary;
    s.u_w = {NoiseLaw::uniform(0, 1)};
    s.u_x = NoiseLaw::uniform(0, 1);
    s.u_y = {NoiseLaw::normal(0, 1)};
    s.f_w = identity_covariates();
    s.f_x = bernoulli_half();
    s.f_y = [](double, std::span<const double>, std::span<const double> u) { return u[0]; };
    out.push_back(std::move(s));
  }
  {
    ScmSpec s;
    s.name = "ex4_interaction";
    s.description =
        "Y := X + I(X=1)U_Y + I(X=0)W U_Y, U_Y ~ N(0,1); W ~ Unif(0,10); "
        "X := I(U_X < 0.2 + 0.06W)";
    s.treatment_kind = TreatmentKind::kBinary;
    s.monotone_in_uy = false;
    s.u_w = {NoiseLaw::uniform(0, 10)};
    s.u_x = NoiseLaw::uniform(0, 1);
    s.u_y = {NoiseLaw::normal(0, 1)};
    s.f_w = identity_covariates();
    s.f_x = [](std::span<const double> w, double u) { return indicator(u < 0.2 + 0.06 * w[0]); };
    s.f_y = [](double x, std::span<const double> w, std::span<const double> u) {
      return x + indicator(x == 1.0) * u[0] + indicator(x == 0.0) * w[0] * u[0];
    };
    out.push_back(std::move(s));
  }
  out.push_back(appc_main());
  {
    ScmSpec s = appc_main();
    s.name = "appc_violated";
    s.description = "appc_main plus independent E ~ Unif(0,1) added to Y";
    s.monotone_in_uy = false;
    s.u_y.push_back(NoiseLaw::uniform(0, 1));
    s.f_y = [](double x, std::span<const double> w, std::span<const double> u) {
      return (0.5 * x + 0.1 * w[0] + 1.0) * (-u[0] + 0.5) + u[1];
    };
    out.push_back(std::move(s));
  }
  {
    ScmSpec s;
    s.name = "binary_outcome";
    s.description = "Y := I(X + W + U_Y > 1), U_Y ~ N(0,1); X ~ Bernoulli(0.5); W ~ Unif(0,1)";
    s.treatment_kind = TreatmentKind::kBinary;
    s.u_w = {NoiseLaw::uniform(0, 1)};
    s.u_x = NoiseLaw::uniform(0, 1);
    s.u_y = {NoiseLaw::normal(0, 1)};
    s.f_w = identity_covariates();
    s.f_x = bernoulli_half();
    s.f_y = [](double x, std::span<const double> w, std::span<const double> u) {
      return indicator(x + w[0] + u[0] > 1.0);
    };
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> builtin_scm_names() {
  std::vector<std::string> names;
  for (const auto& s : builtin_scms()) names.push_back(s.name);
  return names;
}

ScmSpec find_scm(std::string_view name) {
  for (auto& s : builtin_scms()) {
    if (s.name == name) return s;
  }
  throw InvalidArgument("unknown SCM '" + std::string(name) + "'");
}

Dataset sample_observational(const ScmSpec& scm, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample_observational: n must be >= 1");
  Rng rng(seed);
  const std::size_t d = scm.d();
  DatasetColumns cols;
  cols.d = d;
  cols.binary_treatment = scm.treatment_kind == TreatmentKind::kBinary;
  cols.x.reserve(n);
  cols.y.reserve(n);
  cols.w.resize(n * d);
  std::vector<double> u_w(d), u_y(scm.u_y.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) u_w[j] = scm.u_w[j].sample(rng);
    std::span<double> w(cols.w.data() + i * d, d);
    scm.f_w(u_w, w);
    const double x = scm.f_x(w, scm.u_x.sample(rng));
    for (std::size_t k = 0; k < u_y.size(); ++k) u_y[k] = scm.u_y[k].sample(rng);
    cols.x.push_back(x);
    cols.y.push_back(scm.f_y(x, w, u_y));
  }
  return Dataset(std::move(cols));
}

namespace {

// Per-block sums for the ICE oracle.
struct IceBlock {
  CompensatedSum total, positive, negative;
  CompensatedSum total_sq, positive_sq, negative_sq;
  std::size_t count = 0;

  void merge(const IceBlock& o) {
    total.add(o.total);
    positive.add(o.positive);
    negative.add(o.negative);
    total_sq.add(o.total_sq);
    positive_sq.add(o.positive_sq);
    negative_sq.add(o.negative_sq);
    count += o.count;
  }
};

IceBlock ice_block(const ScmSpec& scm, std::span<const double> w, const PolicyPair& pair,
                   std::size_t begin, std::size_t end, std::uint64_t seed,
                   std::size_t block, bool antithetic) {
  Rng u_rng(derive_seed(seed, "oracle.u", block));
  Rng pi_rng(derive_seed(seed, "oracle.pi", block));
  std::vector<double> u(scm.u_y.size());
  IceBlock acc;
  double x0 = 0.0, x1 = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    if (antithetic && (i - begin) % 2 == 1) {
      for (std::size_t k = 0; k < u.size(); ++k) u[k] = scm.u_y[k].mirror(u[k]);
    } else {
      std::tie(x0, x1) = pair.sample(pi_rng);
      for (std::size_t k = 0; k < u.size(); ++k) u[k] = scm.u_y[k].sample(u_rng);
    }
    const double ice = scm.f_y(x1, w, u) - scm.f_y(x0, w, u);
    const double pos = std::max(ice, 0.0);
    const double neg = std::max(-ice, 0.0);
    acc.total.add(ice);
    acc.positive.add(pos);
    acc.negative.add(neg);
    acc.total_sq.add(ice * ice);
    acc.positive_sq.add(pos * pos);
    acc.negative_sq.add(neg * neg);
    ++acc.count;
  }
  return acc;
}

OracleResult finish(std::string name, const CompensatedSum& sum, const CompensatedSum& sq,
                    std::size_t n) {
  const double dn = static_cast<double>(n);
  const double m = sum.value() / dn;
  const double var = std::max(sq.value() / dn - m * m, 0.0);
  return {std::move(name), m, n, std::sqrt(var / dn)};
}

EffectParts finish_parts(const IceBlock& acc, const std::string& family) {
  return {finish(family, acc.total, acc.total_sq, acc.count),
          finish("p_" + family, acc.positive, acc.positive_sq, acc.count),
          finish("n_" + family, acc.negative, acc.negative_sq, acc.count)};
}

void check_point(const ScmSpec& scm, std::span<const double> w, std::size_t n_mc) {
  if (n_mc == 0) throw InvalidArgument("oracle: n_mc must be >= 1");
  if (w.size() != scm.d()) throw InvalidArgument("oracle: covariate point has wrong dimension");
}

template <class BlockFn>
std::vector<decltype(std::declval<BlockFn>()(0, 0, 0))> run_blocks(std::size_t n_mc,
                                                                   BlockFn&& fn) {
  using T = decltype(fn(0, 0, 0));
  const std::size_t blocks = par::chunk_count(n_mc, kOracleBlock);
  return par::parallel_map<T>(blocks, [&](std::size_t b) {
    const std::size_t begin = b * kOracleBlock;
    return fn(begin, std::min(n_mc, begin + kOracleBlock), b);
  });
}

}  // namespace

EffectParts oracle_cpice_parts(const ScmSpec& scm, std::span<const double> w,
                               const PolicyPair& policies, std::size_t n_mc,
                               std::uint64_t seed, bool antithetic) {
  check_point(scm, w, n_mc);
  const auto blocks = run_blocks(n_mc, [&](std::size_t b, std::size_t e, std::size_t k) {
    return ice_block(scm, w, policies, b, e, seed, k, antithetic);
  });
  IceBlock acc;
  for (const auto& blk : blocks) acc.merge(blk);
  return finish_parts(acc, "cpice");
}

EffectParts oracle_cace_parts(const ScmSpec& scm, std::span<const double> w, double x0,
                              double x1, std::size_t n_mc, std::uint64_t seed,
                              bool antithetic) {
  auto parts = oracle_cpice_parts(scm, w, PolicyPair::dirac(x0, x1), n_mc, seed, antithetic);
  parts.total.measure = "cace";
  parts.positive.measure = "p_cace";
  parts.negative.measure = "n_cace";
  return parts;
}

namespace reference {

EffectParts oracle_cpice_parts_serial(const ScmSpec& scm, std::span<const double> w,
                                      const PolicyPair& policies, std::size_t n_mc,
                                      std::uint64_t seed, bool antithetic) {
  check_point(scm, w, n_mc);
  IceBlock acc;
  for (std::size_t b = 0, begin = 0; begin < n_mc; ++b, begin += kOracleBlock) {
    acc.merge(ice_block(scm, w, policies, begin, std::min(n_mc, begin + kOracleBlock), seed, b,
                               antithetic));
  }
  return finish_parts(acc, "cpice");
}

}  // namespace reference

TailIntegrals oracle_thr_tbr_c_integral(const ScmSpec& scm, std::span<const double> w,
                                        double c_max, std::size_t n_mc,
                                        std::size_t n_c_grid, std::uint64_t seed,
                                        double x0, double x1) {
  check_point(scm, w, n_mc);
  if (!(c_max > 0.0)) throw InvalidArgument("oracle: c_max must be > 0");
  if (n_c_grid < 2) throw InvalidArgument("oracle: c grid needs >= 2 points");
  const double dc = c_max / static_cast<double>(n_c_grid - 1);
  const auto g = static_cast<double>(n_c_grid);

  // A draw with tail value t > 0 sets I(t > c_k) = 1 for the m grid points
  // c_k < t; its trapezoid contribution is dc * (m - [m >= 1]/2 - [m >= G]/2).
  auto contribution = [&](double t) {
    if (!(t > 0.0)) return 0.0;
    const double m = std::min(std::ceil(t / dc), g);
    return dc * (m - 0.5 - (m >= g ? 0.5 : 0.0));
  };

  struct Acc {
    CompensatedSum b, h, b_sq, h_sq;
    std::size_t count = 0;
  };
  const PolicyPair pair = PolicyPair::dirac(x0, x1);
  const auto blocks = run_blocks(n_mc, [&](std::size_t begin, std::size_t end, std::size_t k) {
    Rng u_rng(derive_seed(seed, "oracle.u", k));
    std::vector<double> u(scm.u_y.size());
    Acc acc;
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < u.size(); ++j) u[j] = scm.u_y[j].sample(u_rng);
      const double ice = scm.f_y(pair.pi1.base.a, w, u) - scm.f_y(pair.pi0.base.a, w, u);
      const double vb = contribution(ice);
      const double vh = contribution(-ice);
      acc.b.add(vb);
      acc.h.add(vh);
      acc.b_sq.add(vb * vb);
      acc.h_sq.add(vh * vh);
      ++acc.count;
    }
    return acc;
  });
  Acc total;
  for (const auto& a : blocks) {
    total.b.add(a.b);
    total.h.add(a.h);
    total.b_sq.add(a.b_sq);
    total.h_sq.add(a.h_sq);
    total.count += a.count;
  }
  return {finish("tbr_integral", total.b, total.b_sq, total.count),
          finish("thr_integral", total.h, total.h_sq, total.count)};
}

BinaryRates oracle_binary_rates(const ScmSpec& scm, std::span<const double> w, double x0,
                                double x1, std::size_t n_mc, std::uint64_t seed) {
  check_point(scm, w, n_mc);
  struct Acc {
    std::size_t benefit = 0, harm = 0, count = 0;
  };
  const auto blocks = run_blocks(n_mc, [&](std::size_t begin, std::size_t end, std::size_t k) {
    Rng u_rng(derive_seed(seed, "oracle.u", k));
    std::vector<double> u(scm.u_y.size());
    Acc acc;
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < u.size(); ++j) u[j] = scm.u_y[j].sample(u_rng);
      const double y0 = scm.f_y(x0, w, u);
      const double y1 = scm.f_y(x1, w, u);
      acc.benefit += (y0 == 0.0 && y1 == 1.0);
      acc.harm += (y0 == 1.0 && y1 == 0.0);
      ++acc.count;
    }
    return acc;
  });
  Acc total;
  for (const auto& a : blocks) {
    total.benefit += a.benefit;
    total.harm += a.harm;
    total.count += a.count;
  }
  auto rate = [&](std::string name, std::size_t k) {
    const double n = static_cast<double>(total.count);
    const double p = static_cast<double>(k) / n;
    return OracleResult{std::move(name), p, total.count, std::sqrt(p * (1 - p) / n)};
  };
  return {rate("tbr", total.benefit), rate("thr", total.harm)};
}

double oracle_conditional_cdf(const ScmSpec& scm, double y, double x,
                              std::span<const double> w, std::size_t n_mc,
                              std::uint64_t seed) {
  check_point(scm, w, n_mc);
  const auto blocks = run_blocks(n_mc, [&](std::size_t begin, std::size_t end, std::size_t k) {
    Rng u_rng(derive_seed(seed, "oracle.u", k));
    std::vector<double> u(scm.u_y.size());
    std::size_t below = 0;
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < u.size(); ++j) u[j] = scm.u_y[j].sample(u_rng);
      below += scm.f_y(x, w, u) < y;
    }
    return below;
  });
  std::size_t below = 0;
  for (auto b : blocks) below += b;
  return static_cast<double>(below) / static_cast<double>(n_mc);
}

}  // namespace hetero
