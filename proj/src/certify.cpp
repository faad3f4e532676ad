#include "carnot/certify.hpp"

#include "carnot/errors.hpp"
#include "carnot/kernels.hpp"
#include "carnot/sampling.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace carnot {

namespace {

constexpr std::uint64_t kScanStream = 0x5343414eULL;
constexpr std::uint64_t kKaplanStream = 0x4b41504cULL;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Exclusion tube around the center, relative to the shell radius.
constexpr double kTube = 1e-6;

/// Slopes within this of zero count as flat in the numeric trend test.
constexpr double kSlopeTol = 1e-3;

HypothesisVerdict verdict(std::string name, double margin, bool strict, std::string detail, double tol = 0.0) {
  HypothesisVerdict v;
  v.name = std::move(name);
  v.margin = margin;
  v.detail = std::move(detail);
  if (margin > tol) {
    v.status = VerdictStatus::Pass;
  } else if (!strict && margin >= -tol) {
    v.status = VerdictStatus::WeakPass;
  } else {
    v.status = VerdictStatus::Fail;
  }
  return v;
}

HypothesisVerdict not_applicable(std::string name, std::string detail) {
  HypothesisVerdict v;
  v.name = std::move(name);
  v.status = VerdictStatus::NotApplicable;
  v.margin = -1.0;
  v.detail = std::move(detail);
  return v;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Outer conditions

using Margin = std::pair<double, std::string>;

enum class Trend { LowerBoundGrowth, MinPositive, ToInfinity, ToZero, Bounded };

struct OuterRule {
  Trend trend;
  bool strict;
  /// Quantity probed on s in [10, 1e6]; non-finite values are skipped.
  std::function<double(const OuterJet&, double s, double sigma)> quantity;
  /// Closed form for Power(p): {margin, detail}.
  std::function<Margin(double p, double sigma)> power;
};

const std::map<std::string, OuterRule>& outer_rules() {
  static const std::map<std::string, OuterRule> rules = {
      {"v_prime_s7_ge_D",
       {Trend::LowerBoundGrowth, false, [](const OuterJet& j, double s, double) { return j.d1 * std::pow(s, -7.0); },
        [](double p, double) -> Margin {
          return std::make_pair(p - 8.0, "V' s^-7 = p s^(p-8)" + std::string(p == 8.0 ? "; boundary, D = 8" : ""));
        }}},
      {"sV_prime_ge_BV",
       {Trend::MinPositive, true, [](const OuterJet& j, double s, double) { return s * j.d1 / j.v; },
        [](double p, double) -> Margin { return std::make_pair(p, "sV' = pV, B = " + fmt(p)); }}},
      {"vprime2_over_vpp_to_inf",
       {Trend::ToInfinity, true,
        [](const OuterJet& j, double, double) { return j.d2 == 0.0 ? kInf : j.d1 * j.d1 / j.d2; },
        [](double p, double) -> Margin {
          if (p == 1.0) return std::make_pair(1.0, std::string("V'' = 0; limit taken as +inf"));
          return std::make_pair(p - 1.0, "(V')^2/V'' = (p/(p-1)) s^p");
        }}},
      {"vprime2_over_vpp_plus_to_inf",
       {Trend::ToInfinity, true,
        [](const OuterJet& j, double, double) { return j.d2 <= 0.0 ? kInf : j.d1 * j.d1 / j.d2; },
        [](double p, double) -> Margin {
          if (p == 0.0) return std::make_pair(-1.0, std::string("V' = 0"));
          if (p <= 1.0) return std::make_pair(1.0, std::string("V''_+ = 0; limit taken as +inf"));
          return std::make_pair(p - 1.0, "(V')^2/V''_+ = (p/(p-1)) s^p");
        }}},
      {"eps_vprime2_ge_max_V_sVprime",
       {Trend::Bounded, false,
        [](const OuterJet& j, double s, double) { return std::max(j.v, s * j.d1) / (j.d1 * j.d1); },
        [](double p, double) -> Margin {
          if (p == 2.0) return std::make_pair(0.0, std::string("holds with eps = 1/2"));
          if (p > 2.0) return std::make_pair(p - 2.0, std::string("max(V, sV')/(V')^2 -> 0; any eps > 0"));
          return std::make_pair(p - 2.0, std::string("max(V, sV')/(V')^2 unbounded"));
        }}},
      {"v_prime_over_s2_to_inf",
       {Trend::ToInfinity, true, [](const OuterJet& j, double s, double) { return j.d1 / (s * s); },
        [](double p, double) -> Margin { return std::make_pair(p - 3.0, "V'/s^2 = p s^(p-3)"); }}},
      {"poincare_growth",
       {Trend::ToInfinity, true,
        [](const OuterJet& j, double s, double sigma) {
          return std::pow(s, -2.0 * (1.0 + sigma)) * (0.25 * j.d1 * j.d1 - 0.5 * j.d2);
        },
        [](double p, double sigma) -> Margin {
          return std::make_pair(2.0 * p - 4.0 - 2.0 * sigma,
                                "N^-2(1+sigma) (V'^2/4 - V''/2) ~ N^(2p-4-2sigma); a-clause stated-ambiguous");
        }}},
      {"v_over_vprime_to_0",
       {Trend::ToZero, true, [](const OuterJet& j, double, double) { return j.v / j.d1; },
        [](double, double) -> Margin { return std::make_pair(-1.0, std::string("V/V' = s/p does not vanish")); }}},
      {"v_over_vpp_to_0",
       {Trend::ToZero, true, [](const OuterJet& j, double, double) { return j.v / j.d2; },
        [](double, double) -> Margin { return std::make_pair(-2.0, std::string("V/V'' = s^2/(p(p-1)) does not vanish")); }}},
  };
  return rules;
}

double tail_slope(const std::vector<std::pair<double, double>>& pts) {
  // Least squares slope of log|q| against log s.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(pts.size());
  for (const auto& [s, q] : pts) {
    const double lx = std::log(s);
    const double ly = std::log(std::abs(q));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

HypothesisVerdict probe(const OuterFunction& V, const std::string& name, const OuterRule& rule, double sigma) {
  std::vector<std::pair<double, double>> finite;
  std::size_t infinite = 0;
  for (int k = 0; k < 25; ++k) {
    const double s = std::pow(10.0, 1.0 + 5.0 * k / 24.0);
    double q;
    try {
      q = rule.quantity(V.jet(s), s, sigma);
    } catch (const Error&) {
      continue;
    }
    if (std::isnan(q)) continue;
    if (std::isinf(q)) {
      if (q > 0) ++infinite;
      continue;
    }
    finite.emplace_back(s, q);
  }
  if (finite.empty() && infinite > 0 && rule.trend == Trend::ToInfinity) {
    return verdict(name, 1.0, rule.strict, "numeric: quantity is +inf on the probe range");
  }
  if (finite.size() < 3) {
    return verdict(name, -1.0, true, "numeric: inconclusive trend, fewer than 3 finite probe values");
  }
  const std::vector<std::pair<double, double>> tail(finite.begin() + static_cast<long>(finite.size() / 2),
                                                    finite.end());
  double tail_min = kInf, tail_max = -kInf;
  for (const auto& [s, q] : tail) {
    tail_min = std::min(tail_min, q);
    tail_max = std::max(tail_max, q);
  }
  const double slope = tail_slope(tail);
  const std::string where = "numeric on s in [" + fmt(tail.front().first) + ", " + fmt(tail.back().first) + "]: ";
  switch (rule.trend) {
    case Trend::LowerBoundGrowth:
      if (tail_min <= 0.0) return verdict(name, tail_min, true, where + "quantity not positive");
      return verdict(name, slope, false, where + "log-log slope " + fmt(slope), kSlopeTol);
    case Trend::MinPositive:
      return verdict(name, tail_min, true, where + "B = " + fmt(tail_min));
    case Trend::ToInfinity:
      if (tail_min <= 0.0) return verdict(name, tail_min, true, where + "quantity not positive");
      return verdict(name, slope, true, where + "log-log slope " + fmt(slope), kSlopeTol);
    case Trend::ToZero:
      if (tail_min < 0.0) return verdict(name, tail_min, true, where + "quantity negative");
      return verdict(name, -slope, true, where + "log-log slope " + fmt(slope), kSlopeTol);
    case Trend::Bounded:
      if (tail_min <= 0.0) return verdict(name, tail_min, true, where + "quantity not positive");
      return verdict(name, -slope, false, where + "log-log slope " + fmt(slope) + ", eps = " + fmt(tail_max),
                     kSlopeTol);
  }
  return verdict(name, -1.0, true, "unreachable");
}

// ---------------------------------------------------------------------------
// Geometry conditions

struct GeometryContext {
  const EnergyModel& model;
  std::size_t budget;
  std::uint64_t seed;
  GeometryConstants& constants;

  double A() {
    if (!constants.A_est) constants.A_est = lemma_constants(model.group, model.norm, budget, seed).A_est;
    return *constants.A_est;
  }
  double C() {
    if (!constants.C_est) constants.C_est = gradient_sup(model.group, model.norm, budget, seed);
    return *constants.C_est;
  }
  double kaplan() {
    if (!constants.kaplan_residual_max) {
      const auto pts =
          sample_level_set(model.group, model.norm, std::min<std::size_t>(budget, 2000), 1.0, seed, kKaplanStream);
      double worst = 0.0;
      for (const auto& p : pts) worst = std::max(worst, std::abs(kaplan_residual(model.group, model.norm, p)));
      constants.kaplan_residual_max = worst;
    }
    return *constants.kaplan_residual_max;
  }
  double x_dot_grad() {
    if (!constants.min_x_dot_grad) constants.min_x_dot_grad = min_radial_derivative(model.group, model.norm, budget, seed);
    return *constants.min_x_dot_grad;
  }
};

HypothesisVerdict taming_is(const EnergyModel& m, TamingKind want) {
  const bool ok = m.taming.kind == want;
  return verdict("taming_is_" + std::string(to_string(want)), ok ? 1.0 : -1.0, true,
                 "taming " + m.taming.describe());
}

bool power_taming(const EnergyModel& m) {
  return m.taming.kind == TamingKind::AdditivePower || m.taming.kind == TamingKind::MultiplicativePower;
}

using GeometryRule = std::function<HypothesisVerdict(GeometryContext&)>;

const std::map<std::string, GeometryRule>& geometry_rules() {
  static const std::map<std::string, GeometryRule> rules = {
      {"group_is_heisenberg",
       [](GeometryContext& c) {
         return verdict("group_is_heisenberg", c.model.group.is_heisenberg() ? 1.0 : -1.0, true,
                        "n = " + std::to_string(c.model.group.n()) + ", m = " + std::to_string(c.model.group.m()));
       }},
      {"norm_is_type2",
       [](GeometryContext& c) {
         const bool ok = c.model.norm.kind() == NormKind::TypeTwoSmooth;
         return verdict("norm_is_type2", ok ? 1.0 : -1.0, true, c.model.norm.describe());
       }},
      {"norm_is_kaplan",
       [](GeometryContext& c) {
         // Margin in decades below the 1e-8 residual threshold.
         const double r = c.kaplan();
         return verdict("norm_is_kaplan", -std::log10(std::max(r, 1e-300)) - 8.0, true,
                        "max |Lap N - (Q-1)|grad N|^2/N| = " + fmt(r));
       }},
      {"taming_additive_power", [](GeometryContext& c) { return taming_is(c.model, TamingKind::AdditivePower); }},
      {"taming_additive_log", [](GeometryContext& c) { return taming_is(c.model, TamingKind::AdditiveLog); }},
      {"taming_mult_power", [](GeometryContext& c) { return taming_is(c.model, TamingKind::MultiplicativePower); }},
      {"taming_mult2", [](GeometryContext& c) { return taming_is(c.model, TamingKind::MultiplicativeII); }},
      {"sigma_in_0_n_minus_2",
       [](GeometryContext& c) {
         if (!power_taming(c.model)) return not_applicable("sigma_in_0_n_minus_2", "no power taming");
         const double s = c.model.taming.sigma;
         const int n = c.model.group.n();
         return verdict("sigma_in_0_n_minus_2", std::min(s, n - 2.0 - s), true,
                        "sigma = " + fmt(s) + ", n - 2 = " + std::to_string(n - 2));
       }},
      {"sigma_le_1",
       [](GeometryContext& c) {
         if (!power_taming(c.model)) return not_applicable("sigma_le_1", "no power taming");
         return verdict("sigma_le_1", 1.0 - c.model.taming.sigma, false, "sigma = " + fmt(c.model.taming.sigma));
       }},
      {"lemma_A_ge_1",
       [](GeometryContext& c) {
         if (c.model.norm.kind() != NormKind::TypeTwoSmooth) return not_applicable("lemma_A_ge_1", "needs a type-2 norm");
         const double A = c.A();
         return verdict("lemma_A_ge_1", A - 1.0, false,
                        "A_est = " + fmt(A) + "; the clause on a is stated-ambiguous, checked at the given a", 1e-9);
       }},
      {"type2_mult_case",
       [](GeometryContext& c) {
         if (c.model.norm.kind() != NormKind::TypeTwoSmooth) return not_applicable("type2_mult_case", "needs a type-2 norm");
         const double A = c.A();
         const double s = c.model.taming.sigma;
         const int n = c.model.group.n();
         // Case (i): A >= 1 with sigma != 1, A > 1 with sigma = 1. Case (ii): A <= 1 and n - 2 - sigma >= 2.
         const double tol = 1e-9;
         double m1 = s != 1.0 ? A - 1.0 + tol : A - 1.0 - tol;
         double m2 = std::min(1.0 + tol - A, n - 4.0 - s + tol);
         const double m = std::max(m1, m2);
         return verdict("type2_mult_case", m, true,
                        "A_est = " + fmt(A) + ", sigma = " + fmt(s) + ", n = " + std::to_string(n) +
                            (m1 >= m2 ? "; case (i)" : "; case (ii)"));
       }},
      {"C_lt_sigma",
       [](GeometryContext& c) {
         const double C = c.C();
         return verdict("C_lt_sigma", c.model.taming.sigma - C, true,
                        "C_est = " + fmt(C) + ", sigma = " + fmt(c.model.taming.sigma));
       }},
      {"n_minus_3_ge_2C",
       [](GeometryContext& c) {
         const double C = c.C();
         const int n = c.model.group.n();
         return verdict("n_minus_3_ge_2C", n - 3.0 - 2.0 * C, false,
                        "n - 3 = " + std::to_string(n - 3) + ", 2 C_est = " + fmt(2.0 * C));
       }},
      {"x_dot_grad_N_nonneg",
       [](GeometryContext& c) {
         const double m = c.x_dot_grad();
         return verdict("x_dot_grad_N_nonneg", m, false, "min x.grad N on the unit level set = " + fmt(m));
       }},
      {"n_gt_2",
       [](GeometryContext& c) {
         const int n = c.model.group.n();
         return verdict("n_gt_2", n - 2.0, true, "n = " + std::to_string(n));
       }},
  };
  return rules;
}

// ---------------------------------------------------------------------------
// Shell scans

void check_ladder(const std::vector<double>& radii, std::size_t samples) {
  if (radii.size() < 4) throw Error(ErrorKind::InvalidParameter, "radii ladder needs at least 4 rungs");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || !std::isfinite(radii[i])) throw Error(ErrorKind::InvalidParameter, "radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw Error(ErrorKind::InvalidParameter, "radii must strictly increase");
  }
  if (samples == 0) throw Error(ErrorKind::EmptySample, "no samples per shell");
}

/// First row of the "top half" of a ladder with k rungs.
std::size_t top_half_start(std::size_t k) { return (k - 1) / 2; }

ScanTable scan_shells(const EnergyModel& model, const std::vector<double>& radii, std::size_t samples,
                      std::uint64_t seed) {
  model.validate();
  check_ladder(radii, samples);
  const Step2Group& g = model.group;
  const int n = g.n();
  const int m = g.m();

  std::vector<Vec> dirs = sphere_directions(g.dim(), samples, seed, kScanStream);
  for (int k = 0; k < m; ++k) {
    for (double sign : {1.0, -1.0}) {
      Vec d = Vec::Zero(g.dim());
      d(n + k) = sign;
      dirs.push_back(d);
    }
  }

  const bool singular = model.taming.singular();
  ScanTable table;
  for (double R : radii) {
    std::vector<double> v2(dirs.size(), kInf);
    std::vector<double> dom(dirs.size(), -kInf);
    std::vector<char> excluded(dirs.size(), 0);
    std::vector<GroupPoint> pts(dirs.size());
    kernels::for_each_index(kernels::default_exec(), dirs.size(), [&](std::size_t i) {
      pts[i] = onto_level_set(g, model.norm, dirs[i], R);
      if (singular && pts[i].x.norm() < kTube * R) {
        excluded[i] = 1;
        return;
      }
      const DerivativeBundle U = energy_bundle(model, pts[i]);
      v2[i] = v2_from_bundle(U);
      dom[i] = (U.grad_norm2() + U.value) / (1.0 + std::max(v2[i], 0.0));
    });

    ScanRow row;
    row.R = R;
    row.samples = dirs.size();
    row.min_v2 = kInf;
    row.dominance = -kInf;
    std::size_t n_excl = 0;
    std::size_t arg = dirs.size();
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      if (excluded[i]) {
        ++n_excl;
        continue;
      }
      if (v2[i] < row.min_v2) {
        row.min_v2 = v2[i];
        arg = i;
      }
      row.dominance = std::max(row.dominance, dom[i]);
    }
    if (arg == dirs.size() || !std::isfinite(row.min_v2)) {
      throw Error(ErrorKind::EmptySample, "every sample on shell R = " + fmt(R) + " was excluded or non-finite");
    }
    row.argmin = pts[arg];
    row.excluded_fraction = static_cast<double>(n_excl) / static_cast<double>(dirs.size());
    table.rows.push_back(std::move(row));
  }

  const auto& rows = table.rows;
  const std::size_t k = rows.size();
  const std::size_t start = top_half_start(k);
  std::ostringstream note;

  bool increasing = true;
  for (std::size_t i = start + 1; i < k; ++i) {
    if (!(rows[i].min_v2 > rows[i - 1].min_v2)) {
      increasing = false;
      note << "min V2 not increasing between R = " << rows[i - 1].R << " and R = " << rows[i].R << "; ";
    }
  }
  const double growth_floor = 10.0 * std::max(rows.front().min_v2, 1.0);
  const bool grew = rows.back().min_v2 >= growth_floor;
  if (!grew) note << "top-rung min V2 " << rows.back().min_v2 << " below " << growth_floor << "; ";
  table.diverges = increasing && grew;

  // Rounding slack only: ratios that settle onto a constant must not flip the verdict.
  bool nonincreasing = true;
  table.a_emp = 0.0;
  for (std::size_t i = start; i < k; ++i) {
    table.a_emp = std::max(table.a_emp, rows[i].dominance);
    if (i > start && rows[i].dominance > rows[i - 1].dominance * (1.0 + 1e-9)) {
      nonincreasing = false;
      note << "dominance ratio increasing between R = " << rows[i - 1].R << " and R = " << rows[i].R << "; ";
    }
  }
  table.bounded = nonincreasing && std::isfinite(table.a_emp);
  table.trend_note = note.str();
  if (!table.trend_note.empty()) table.trend_note.resize(table.trend_note.size() - 2);
  return table;
}

std::string join_vec(const Vec& v) {
  std::ostringstream os;
  os.precision(10);
  for (int i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v(i);
  return os.str();
}

}  // namespace

std::string_view to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Pass:
      return "pass";
    case VerdictStatus::WeakPass:
      return "weak_pass";
    case VerdictStatus::Fail:
      return "fail";
    case VerdictStatus::NotApplicable:
      return "not_applicable";
  }
  return "fail";
}

std::string_view to_string(Theorem t) {
  switch (t) {
    case Theorem::HeisAdd:
      return "heis_add";
    case Theorem::Type2Add:
      return "type2_add";
    case Theorem::Type2Mult:
      return "type2_mult";
    case Theorem::KaplanMult:
      return "kaplan_mult";
    case Theorem::Mult2:
      return "mult2";
    case Theorem::PoincareLog:
      return "poincare_log";
  }
  return "heis_add";
}

std::vector<Theorem> all_theorems() {
  return {Theorem::HeisAdd, Theorem::Type2Add, Theorem::Type2Mult, Theorem::KaplanMult, Theorem::Mult2,
          Theorem::PoincareLog};
}

Theorem parse_theorem(std::string_view tag) {
  for (Theorem t : all_theorems()) {
    if (to_string(t) == tag) return t;
  }
  throw Error(ErrorKind::UnknownFamily, "unknown theorem tag '" + std::string(tag) + "'");
}

const RuleSet& rule_set(Theorem t) {
  static const std::vector<RuleSet> sets = {
      {Theorem::HeisAdd,
       {"v_prime_s7_ge_D", "sV_prime_ge_BV", "vprime2_over_vpp_to_inf"},
       {"group_is_heisenberg", "norm_is_kaplan", "taming_additive_power"},
       "log-Sobolev for V(beta N + |x|^-sigma) on the Heisenberg group"},
      {Theorem::Type2Add,
       {"v_prime_s7_ge_D", "sV_prime_ge_BV", "vprime2_over_vpp_to_inf", "poincare_growth"},
       {"norm_is_type2", "taming_additive_power", "sigma_in_0_n_minus_2", "lemma_A_ge_1"},
       "log-Sobolev for V(beta N + |x|^-sigma) with a type-2 norm; Poincare under the growth condition"},
      {Theorem::Type2Mult,
       {"v_prime_over_s2_to_inf"},
       {"norm_is_type2", "taming_mult_power", "type2_mult_case"},
       "log-Sobolev for V(|x|^-sigma N) with a type-2 norm"},
      {Theorem::KaplanMult,
       {"vprime2_over_vpp_plus_to_inf", "eps_vprime2_ge_max_V_sVprime"},
       {"norm_is_kaplan", "taming_mult_power", "sigma_le_1", "C_lt_sigma", "n_minus_3_ge_2C"},
       "log-Sobolev for V(|x|^-sigma N) with a Kaplan norm"},
      {Theorem::Mult2,
       {"v_over_vprime_to_0", "v_over_vpp_to_0"},
       {"norm_is_kaplan", "taming_mult2", "x_dot_grad_N_nonneg"},
       "log-Sobolev for (1 + xi~) V(N) with a Kaplan norm"},
      {Theorem::PoincareLog,
       {"v_prime_over_s2_to_inf"},
       {"norm_is_kaplan", "taming_additive_log", "n_gt_2"},
       "Poincare for V(beta N - log|x|) with a Kaplan norm"},
  };
  for (const auto& s : sets) {
    if (s.theorem == t) return s;
  }
  throw Error(ErrorKind::UnknownFamily, "no rule set");
}

HypothesisVerdict probe_outer_condition(const OuterFunction& V, const std::string& name, double sigma) {
  const auto& rules = outer_rules();
  const auto it = rules.find(name);
  if (it == rules.end()) throw Error(ErrorKind::UnknownFamily, "unknown outer condition '" + name + "'");
  return probe(V, name, it->second, sigma);
}

std::vector<HypothesisVerdict> check_outer_conditions(const OuterFunction& V, Theorem t, const TamingSpec* taming) {
  const double sigma = taming ? taming->sigma : 1.0;
  std::vector<HypothesisVerdict> out;
  for (const auto& name : rule_set(t).outer) {
    const OuterRule& rule = outer_rules().at(name);
    if (V.family() == OuterFamily::Power) {
      const auto [margin, detail] = rule.power(V.p(), sigma);
      out.push_back(verdict(name, margin, rule.strict, "power(" + fmt(V.p()) + "): " + detail));
    } else {
      out.push_back(probe(V, name, rule, sigma));
    }
  }
  return out;
}

std::vector<HypothesisVerdict> check_geometry_conditions(const EnergyModel& model, Theorem t, std::size_t budget,
                                                         std::uint64_t seed, GeometryConstants* constants) {
  if (budget == 0) throw Error(ErrorKind::EmptySample, "geometry checks need a positive sample budget");
  model.validate();
  GeometryConstants local;
  GeometryContext ctx{model, budget, seed, constants ? *constants : local};
  std::vector<HypothesisVerdict> out;
  for (const auto& name : rule_set(t).geometry) out.push_back(geometry_rules().at(name)(ctx));
  return out;
}

ScanTable divergence_scan(const EnergyModel& model, const std::vector<double>& radii, std::size_t samples,
                          std::uint64_t seed) {
  return scan_shells(model, radii, samples, seed);
}

ScanTable dominance_scan(const EnergyModel& model, const std::vector<double>& radii, std::size_t samples,
                         std::uint64_t seed) {
  return scan_shells(model, radii, samples, seed);
}

std::string ScanTable::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "R,min_v2,argmin_x,argmin_z,dominance,excluded_fraction,samples\n";
  for (const auto& r : rows) {
    os << r.R << ',' << r.min_v2 << ',' << join_vec(r.argmin.x) << ',' << join_vec(r.argmin.z) << ',' << r.dominance
       << ',' << r.excluded_fraction << ',' << r.samples << '\n';
  }
  return os.str();
}

double doubling_constant(const OuterFunction& V, double c) {
  if (!(c >= 1.0) || !std::isfinite(c)) throw Error(ErrorKind::InvalidParameter, "doubling needs c >= 1");
  if (c == 1.0) return 1.0;
  if (V.family() == OuterFamily::Power) return std::pow(c, 2.0 * (V.p() - 1.0));
  double sup = 0.0;
  bool any = false;
  for (int k = 0; k <= 180; ++k) {
    const double t = std::pow(10.0, -3.0 + 9.0 * k / 180.0);
    double num, den;
    try {
      num = std::abs(V.jet(c * c * t).d1);
      den = std::abs(V.jet(t).d1);
    } catch (const Error&) {
      continue;
    }
    const double r = num / den;
    if (!std::isfinite(r)) continue;
    sup = std::max(sup, r);
    any = true;
  }
  if (!any) throw Error(ErrorKind::InconclusiveTrend, "no finite doubling ratio on t in [1e-3, 1e6]");
  return sup;
}

PerturbationCertificate perturbation_certificate(double q, double alpha_q, double epsilon, double A_c,
                                                 std::optional<double> C, std::optional<double> D) {
  if (!(q >= 1.0) || !(alpha_q > 0.0) || !(epsilon >= 0.0) || !(A_c >= 1.0) || !std::isfinite(q) ||
      !std::isfinite(alpha_q) || !std::isfinite(epsilon) || !std::isfinite(A_c)) {
    throw Error(ErrorKind::InvalidParameter, "certificate needs q >= 1, alpha_q > 0, eps >= 0, A_c >= 1");
  }
  PerturbationCertificate cert;
  cert.q = q;
  cert.alpha_q = alpha_q;
  cert.epsilon = epsilon;
  cert.A_c = A_c;
  cert.coefficient = alpha_q - 0.5 * std::pow(2.0 * A_c * epsilon / q, q);
  cert.verdict = cert.coefficient > 0.0;
  if (C) cert.bound_C = std::pow(2.0, q - 1.0) * *C;
  cert.bound_D = D;
  return cert;
}

CancellationScan cancellation_scan(double a, double sigma, double beta, int grid) {
  if (!(a > 0.0) || !(sigma > 0.0) || !(beta > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "cancellation scan needs a, sigma, beta > 0");
  }
  if (grid < 8) throw Error(ErrorKind::InvalidParameter, "cancellation grid needs at least 8 cells per axis");
  const Step2Group g = Step2Group::heisenberg();
  const NormSpec norm = NormSpec::type_two_smooth(a);
  const TamingSpec taming = TamingSpec::additive_power(sigma, beta);
  constexpr double kInner = 0.5;
  constexpr double kOuter = 8.0;

  CancellationScan out;
  out.r_star = std::pow(sigma / beta, 1.0 / (1.0 + sigma));
  out.r0 = std::pow(sigma / (1.0 + beta), 1.0 / (1.0 + sigma));
  out.cell_r = kOuter / grid;
  out.cell_z = kOuter * kOuter / std::sqrt(a) / grid;

  struct Eval {
    double g2;
    double N;
    double scale;
  };
  const auto eval = [&](double r, double z) {
    const GroupPoint p(Vec::Unit(2, 0) * r, Vec::Constant(1, z));
    const DerivativeBundle Nb = norm_bundle(g, norm, p);
    const DerivativeBundle xb = xi_bundle(taming, p.x);
    const Vec grad = beta * Nb.grad + xb.grad;
    return Eval{grad.squaredNorm(), Nb.value, beta * beta * Nb.grad.squaredNorm() + xb.grad.squaredNorm()};
  };

  // Rows i = 1..grid in r, columns j = 0..grid in z >= 0 (the field is even in z).
  const int nr = grid + 1;
  const int nz = grid + 1;
  std::vector<Eval> vals(static_cast<std::size_t>(nr * nz));
  std::vector<char> inside(vals.size(), 0);
  const auto at = [&](int i, int j) { return static_cast<std::size_t>(i * nz + j); };
  kernels::for_each_index(kernels::default_exec(), vals.size(), [&](std::size_t idx) {
    const int i = static_cast<int>(idx) / nz;
    const int j = static_cast<int>(idx) % nz;
    if (i == 0) return;
    const double r = i * out.cell_r;
    const double z = j * out.cell_z;
    const double N = std::pow(std::pow(r, 4) + a * z * z, 0.25);
    if (N < kInner || N > kOuter) return;
    vals[idx] = eval(r, z);
    inside[idx] = 1;
  });

  const double bound_z2 = 1.0 / (a * beta * beta * out.r0 * out.r0);
  out.min_scaled_bound = kInf;
  for (int i = 1; i < nr; ++i) {
    for (int j = 0; j < nz; ++j) {
      const std::size_t idx = at(i, j);
      if (!inside[idx]) continue;
      const double r = i * out.cell_r;
      const double z = j * out.cell_z;
      const Eval& e = vals[idx];
      if (e.N >= 1.0 && (r <= out.r0 || z * z >= bound_z2)) {
        out.min_scaled_bound = std::min(out.min_scaled_bound, e.g2 * std::pow(e.N, 6));
        ++out.bound_points;
      }
    }
  }

  // Interior local minima (all eight neighbours inside the annulus, z mirrored at 0), refined
  // by alternating one-dimensional Brent searches within one cell.
  const auto f = [&](double r, double z) { return eval(r, z).g2; };
  for (int i = 2; i < nr - 1; ++i) {
    for (int j = 0; j < nz - 1; ++j) {
      const std::size_t idx = at(i, j);
      if (!inside[idx]) continue;
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di) {
        for (int dj = -1; dj <= 1 && is_min; ++dj) {
          if (di == 0 && dj == 0) continue;
          const std::size_t nb = at(i + di, std::abs(j + dj));
          if (!inside[nb] || vals[nb].g2 < vals[idx].g2) is_min = false;
        }
      }
      if (!is_min) continue;
      double r = i * out.cell_r;
      double z = j * out.cell_z;
      const double r_lo = r - out.cell_r, r_hi = r + out.cell_r;
      const double z_lo = std::max(0.0, z - out.cell_z), z_hi = z + out.cell_z;
      for (int it = 0; it < 30; ++it) {
        const double r_prev = r, z_prev = z;
        r = boost::math::tools::brent_find_minima([&](double t) { return f(t, z); }, r_lo, r_hi, 52).first;
        z = boost::math::tools::brent_find_minima([&](double t) { return f(r, t); }, z_lo, z_hi, 52).first;
        if (std::abs(r - r_prev) < 1e-14 && std::abs(z - z_prev) < 1e-14) break;
      }
      const Eval e = eval(r, z);
      if (e.g2 <= 1e-10 * e.scale) out.zeros.emplace_back(r, z);
    }
  }

  const double N_star = out.r_star;  // N = |x| on z = 0
  const bool locus_inside = N_star >= kInner + out.cell_r && N_star <= kOuter - out.cell_r;
  bool all_on = true;
  for (const auto& [r, z] : out.zeros) {
    if (std::abs(r - out.r_star) > out.cell_r || std::abs(z) > out.cell_z) all_on = false;
  }
  out.zeros_on_locus = all_on && (!locus_inside || !out.zeros.empty());
  return out;
}

CertifyReport certify(const EnergyModel& model, Theorem t, const CertifyOptions& options) {
  CertifyReport report;
  report.theorem = t;
  report.verdicts = check_outer_conditions(model.outer, t, &model.taming);
  const auto geo = check_geometry_conditions(model, t, options.geometry_budget, options.seed, &report.constants);
  report.verdicts.insert(report.verdicts.end(), geo.begin(), geo.end());
  report.hypotheses_hold = std::all_of(report.verdicts.begin(), report.verdicts.end(),
                                       [](const HypothesisVerdict& v) { return v.satisfied(); });
  report.scans = divergence_scan(model, options.radii, options.samples, options.seed);
  return report;
}

}  // namespace carnot
