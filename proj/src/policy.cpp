#include "hetero/policy.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "hetero/error.hpp"

namespace hetero {
namespace {

double to_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument("policy: invalid number '" + std::string(s) + "'");
  }
  return v;
}

BaseLaw parse_base(std::string_view s, const std::vector<double>& support) {
  if (s == "empirical") return BaseLaw::empirical(support);
  const auto open = s.find('(');
  if (open == std::string_view::npos || s.back() != ')') {
    throw InvalidArgument("policy: cannot parse base law '" + std::string(s) + "'");
  }
  const auto name = s.substr(0, open);
  const auto args = s.substr(open + 1, s.size() - open - 2);
  const auto comma = args.find(',');
  if (name == "dirac") return BaseLaw::dirac(to_double(args));
  if (comma == std::string_view::npos) {
    throw InvalidArgument("policy: '" + std::string(name) + "' takes two arguments");
  }
  const double p = to_double(args.substr(0, comma));
  const double q = to_double(args.substr(comma + 1));
  if (name == "uniform") return BaseLaw::uniform(p, q);
  if (name == "normal") return BaseLaw::normal(p, q);
  throw InvalidArgument("policy: unknown base law '" + std::string(name) + "'");
}

// Splits on ':' outside parentheses.
std::vector<std::string_view> split_top(std::string_view s) {
  std::vector<std::string_view> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == ':' && depth == 0) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.push_back(s.substr(start));
  return parts;
}

}  // namespace

BaseLaw BaseLaw::uniform(double lo, double hi) {
  if (!(lo < hi)) throw InvalidArgument("uniform policy requires lo < hi");
  return {Kind::kUniform, lo, hi, {}};
}

BaseLaw BaseLaw::normal(double mean, double sd) {
  if (!(sd > 0.0)) throw InvalidArgument("normal policy requires sd > 0");
  return {Kind::kNormal, mean, sd, {}};
}

BaseLaw BaseLaw::empirical(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("empirical policy needs observed values");
  return {Kind::kEmpirical, 0.0, 0.0, std::move(values)};
}

double BaseLaw::sample(Rng& rng) const {
  switch (kind) {
    case Kind::kDirac:
      return a;
    case Kind::kUniform:
      return hetero::uniform(rng, a, b);
    case Kind::kNormal:
      return a + b * standard_normal(rng);
    case Kind::kEmpirical: {
      const auto i = static_cast<std::size_t>(uniform01(rng) *
                                              static_cast<double>(support.size()));
      return support[std::min(i, support.size() - 1)];
    }
  }
  return a;
}

std::string BaseLaw::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kDirac: os << "dirac(" << a << ")"; break;
    case Kind::kUniform: os << "uniform(" << a << "," << b << ")"; break;
    case Kind::kNormal: os << "normal(" << a << "," << b << ")"; break;
    case Kind::kEmpirical: os << "empirical[" << support.size() << "]"; break;
  }
  return os.str();
}

PolicyPair PolicyPair::dirac(double x0, double x1) {
  return {InterventionPolicy::dirac(x0), InterventionPolicy::dirac(x1), false};
}

PolicyPair PolicyPair::single_shift(BaseLaw base, double d) {
  return {{base, 0.0}, {base, d}, true};
}

PolicyPair PolicyPair::double_shift(BaseLaw base, double d) {
  return {{base, -d}, {base, d}, true};
}

PolicyPair PolicyPair::independent(InterventionPolicy pi0, InterventionPolicy pi1) {
  return {std::move(pi0), std::move(pi1), false};
}

std::pair<double, double> PolicyPair::sample(Rng& rng) const {
  if (coupled) {
    const double b = pi0.base.sample(rng);
    return {b + pi0.offset, b + pi1.offset};
  }
  const double x0 = pi0.sample(rng);
  const double x1 = pi1.sample(rng);
  return {x0, x1};
}

std::string PolicyPair::describe() const {
  std::ostringstream os;
  os << (coupled ? "coupled" : "independent") << "{" << pi0.base.describe() << "+"
     << pi0.offset << " -> " << pi1.base.describe() << "+" << pi1.offset << "}";
  return os.str();
}

PolicyPairSample draw_policy_pairs(const PolicyPair& pair, std::size_t n1,
                                   std::uint64_t seed) {
  if (n1 == 0) throw InvalidArgument("policy draw count must be >= 1");
  Rng rng(seed);
  PolicyPairSample s;
  s.x0.reserve(n1);
  s.x1.reserve(n1);
  for (std::size_t j = 0; j < n1; ++j) {
    const auto [x0, x1] = pair.sample(rng);
    s.x0.push_back(x0);
    s.x1.push_back(x1);
  }
  return s;
}

PolicyPair parse_policy_pair(std::string_view text,
                             const std::vector<double>& empirical_support) {
  const auto parts = split_top(text);
  if (parts.size() != 3) {
    throw InvalidArgument("policy: expected KIND:ARG:ARG, got '" + std::string(text) + "'");
  }
  const auto kind = parts[0];
  if (kind == "dirac") return PolicyPair::dirac(to_double(parts[1]), to_double(parts[2]));
  if (kind == "single_shift") {
    return PolicyPair::single_shift(parse_base(parts[1], empirical_support),
                                    to_double(parts[2]));
  }
  if (kind == "double_shift") {
    return PolicyPair::double_shift(parse_base(parts[1], empirical_support),
                                    to_double(parts[2]));
  }
  if (kind == "independent") {
    return PolicyPair::independent({parse_base(parts[1], empirical_support), 0.0},
                                   {parse_base(parts[2], empirical_support), 0.0});
  }
  throw InvalidArgument("policy: unknown kind '" + std::string(kind) + "'");
}

}  // namespace hetero
