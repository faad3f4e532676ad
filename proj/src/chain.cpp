#include "carnot/chain.hpp"

#include "carnot/errors.hpp"
#include "carnot/kernels.hpp"
#include "carnot/sampling.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace carnot {

namespace {

constexpr std::uint64_t kChainStream = 0x4d414c41ULL;
constexpr double kTube = 1e-9;

struct State {
  GroupPoint p;
  double U = 0.0;
  Vec grad;
  double N = 0.0;
};

/// Value and gradient at p, or nullopt when p is in the tube or U is not finite there.
std::optional<State> evaluate(const EnergyModel& model, const GroupPoint& p) {
  if (model.taming.singular() && p.x.norm() < kTube) return std::nullopt;
  DerivativeBundle b;
  try {
    b = energy_bundle(model, p);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (!std::isfinite(b.value) || !b.grad.allFinite()) return std::nullopt;
  return State{p, b.value, b.grad, norm_value(model.group, model.norm, p)};
}

ChainResult run_chain(const EnergyModel& model, const ChainConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  model.validate();
  const Step2Group& g = model.group;
  GroupPoint start = cfg.start ? *cfg.start : onto_level_set(g, model.norm, Vec::Unit(g.dim(), 0), 1.0);
  g.check_point(start);
  if (model.taming.singular() && start.x.norm() < kTube) {
    throw Error(ErrorKind::StartOnSingularSet, "chain start lies on the singular set |x| = 0");
  }
  auto s0 = evaluate(model, start);
  if (!s0) throw Error(ErrorKind::NonfiniteEnergy, "energy or its gradient is not finite at the chain start");
  State cur = std::move(*s0);

  Rng rng = substream(cfg.seed, kChainStream, stream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  ChainResult out;
  out.norm_trace.reserve(cfg.steps - cfg.burn_in);
  double log_h = std::log(cfg.step);
  std::size_t accepted = 0;
  const int n = g.n();
  Vec xi(n);

  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const double h = std::exp(log_h);
    for (int i = 0; i < n; ++i) xi(i) = gauss(rng);
    const Vec c = -h * cur.grad + std::sqrt(2.0 * h) * xi;
    const GroupPoint q = g.translate_horizontal(cur.p, c);
    const double u = unif(rng);

    double accept_prob = 0.0;
    auto prop = evaluate(model, q);
    if (!prop) {
      if (q.x.norm() < kTube) ++out.tube_rejections;
    } else {
      const double fwd = (c + h * cur.grad).squaredNorm();
      const double rev = (-c + h * prop->grad).squaredNorm();
      const double log_a = -(prop->U - cur.U) - (rev - fwd) / (4.0 * h);
      accept_prob = log_a >= 0.0 ? 1.0 : std::exp(log_a);
      if (u < accept_prob) {
        cur = std::move(*prop);
        if (t >= cfg.burn_in) ++accepted;
      }
    }

    if (t < cfg.burn_in) {
      if (cfg.auto_tune) log_h += std::pow(1.0 + static_cast<double>(t), -0.6) * (accept_prob - cfg.target_acceptance);
    } else {
      out.norm_trace.push_back(cur.N);
      if ((t - cfg.burn_in) % cfg.thin == 0) out.points.push_back(cur.p);
    }
  }
  out.step = std::exp(log_h);
  out.acceptance = static_cast<double>(accepted) / static_cast<double>(cfg.steps - cfg.burn_in);
  return out;
}

}  // namespace

void ChainConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorKind::InvalidParameter, "chain step must be positive");
  if (steps <= burn_in) throw Error(ErrorKind::EmptySample, "chain has no steps after burn-in");
  if (thin == 0) throw Error(ErrorKind::InvalidParameter, "thin must be at least 1");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw Error(ErrorKind::InvalidParameter, "target acceptance must lie in (0, 1)");
  }
}

ChainResult langevin_chain(const EnergyModel& model, const ChainConfig& cfg) { return run_chain(model, cfg, 0); }

std::vector<ChainResult> langevin_chains(const EnergyModel& model, const ChainConfig& cfg, std::size_t count) {
  std::vector<ChainResult> out(count);
  kernels::for_each_index(kernels::default_exec(), count,
                          [&](std::size_t i) { out[i] = run_chain(model, cfg, static_cast<std::uint64_t>(i)); });
  return out;
}

double integrated_autocorrelation(const std::vector<double>& trace) {
  const std::size_t n = trace.size();
  if (n < 16) throw Error(ErrorKind::EmptySample, "autocorrelation needs at least 16 values");
  double mean = 0.0;
  for (double v : trace) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : trace) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  if (var == 0.0) return 1.0;
  const std::size_t b = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  const std::size_t nb = n / b;
  double bvar = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    double m = 0.0;
    for (std::size_t i = k * b; i < (k + 1) * b; ++i) m += trace[i];
    m /= static_cast<double>(b);
    bvar += (m - mean) * (m - mean);
  }
  bvar /= static_cast<double>(nb - 1);
  return std::max(1.0, static_cast<double>(b) * bvar / var);
}

// ---------------------------------------------------------------------------

namespace {

struct MarginalKernel {
  const EnergyModel& model;
  double offset;

  double energy(double R, double theta) const {
    const Step2Group& g = model.group;
    const double c = std::cos(theta);
    const double r = R * std::sqrt(std::max(c, 0.0));
    const double rho = R * R * std::sin(theta) / std::sqrt(model.norm.a());
    GroupPoint p(Vec::Zero(g.n()), Vec::Zero(g.m()));
    p.x(0) = r;
    p.z(0) = rho;
    return energy_value(model, p);
  }

  double density(double R) const {
    if (R <= 0.0) return 0.0;
    const int n = model.group.n();
    const int m = model.group.m();
    const auto inner = [&](double theta) {
      const double U = energy(R, theta);
      if (!std::isfinite(U)) return 0.0;
      return std::exp(-(U - offset)) * std::pow(std::cos(theta), 0.5 * (n - 2)) * std::pow(std::sin(theta), m - 1);
    };
    const double I =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(inner, 0.0, std::numbers::pi / 2, 12, 1e-11);
    return std::pow(R, model.group.homogeneous_dimension() - 1) * I;
  }
};

}  // namespace

NormMarginal::NormMarginal(const EnergyModel& model) : model_(model) {
  model_.validate();
  if (model_.norm.kind() != NormKind::TypeTwoSmooth) {
    throw Error(ErrorKind::InvalidParameter, "the N-marginal quadrature needs a type-2 smooth norm");
  }
  // Energy offset: the smallest U on a coarse (R, theta) grid keeps e^{-U} representable.
  MarginalKernel probe{model_, 0.0};
  double umin = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 200; ++i) {
    const double R = std::pow(10.0, -3.0 + 5.0 * i / 200.0);
    for (int j = 0; j <= 40; ++j) {
      const double U = probe.energy(R, (std::numbers::pi / 2) * j / 40.0);
      if (std::isfinite(U)) umin = std::min(umin, U);
    }
  }
  if (!std::isfinite(umin)) throw Error(ErrorKind::NonfiniteEnergy, "energy is nowhere finite on the probe grid");
  offset_ = umin;

  // Support: scanning R geometrically in 2% steps, the first R past the peak where the
  // density falls below 1e-17 of it.
  const MarginalKernel k{model_, offset_};
  double peak = 0.0;
  upper_ = 0.0;
  for (double R = 1e-3; R < 1e6; R *= 1.02) {
    const double d = k.density(R);
    peak = std::max(peak, d);
    if (peak > 0.0 && d < 1e-17 * peak) {
      upper_ = R;
      break;
    }
  }
  if (upper_ == 0.0) throw Error(ErrorKind::NonIntegrable, "N-marginal has no finite support bound");

  // Cumulative table on kPanels equal panels of [0, upper].
  knots_.resize(kPanels + 1);
  cum_.assign(kPanels + 1, 0.0);
  for (int i = 0; i <= kPanels; ++i) knots_[i] = upper_ * i / kPanels;
  for (int i = 0; i < kPanels; ++i) cum_[i + 1] = cum_[i] + panel(knots_[i], knots_[i + 1]);
  total_ = cum_.back();
}

double NormMarginal::panel(double lo, double hi) const {
  const MarginalKernel k{model_, offset_};
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate([&](double s) { return k.density(s); }, lo, hi,
                                                                       4, 1e-10);
}

double NormMarginal::density(double R) const { return MarginalKernel{model_, offset_}.density(R); }

double NormMarginal::cdf(double R) const {
  if (R <= 0.0) return 0.0;
  if (R >= upper_) return 1.0;
  const auto i = static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), R) - knots_.begin()) - 1;
  return (cum_[i] + panel(knots_[i], R)) / total_;
}

double NormMarginal::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw Error(ErrorKind::InvalidParameter, "quantile level must lie in (0, 1)");
  boost::uintmax_t iters = 100;
  const auto r = boost::math::tools::toms748_solve([&](double R) { return cdf(R) - u; }, 0.0, upper_, -u, 1.0 - u, boost::math::tools::eps_tolerance<double>(40), iters);
  return 0.5 * (r.first + r.second);
}

ChiSquareResult norm_marginal_test(const EnergyModel& model, const std::vector<double>& norm_trace, int bins) {
  if (bins < 2) throw Error(ErrorKind::InvalidParameter, "chi-square test needs at least 2 bins");
  ChiSquareResult out;
  out.iat = integrated_autocorrelation(norm_trace);
  out.thin = static_cast<std::size_t>(std::ceil(3.0 * out.iat));
  std::vector<double> kept;
  for (std::size_t i = 0; i < norm_trace.size(); i += out.thin) kept.push_back(norm_trace[i]);
  out.samples = kept.size();
  if (out.samples < static_cast<std::size_t>(5 * bins)) {
    throw Error(ErrorKind::EmptySample, "fewer than 5 thinned samples per bin");
  }

  const NormMarginal marginal(model);
  out.edges.push_back(0.0);
  for (int k = 1; k < bins; ++k) out.edges.push_back(marginal.quantile(static_cast<double>(k) / bins));
  out.edges.push_back(std::numeric_limits<double>::infinity());

  out.counts.assign(bins, 0);
  for (double v : kept) {
    const auto it = std::upper_bound(out.edges.begin() + 1, out.edges.end() - 1, v);
    ++out.counts[static_cast<std::size_t>(it - (out.edges.begin() + 1))];
  }
  out.expected = static_cast<double>(out.samples) / bins;
  for (std::size_t c : out.counts) {
    const double d = static_cast<double>(c) - out.expected;
    out.statistic += d * d / out.expected;
  }
  const boost::math::chi_squared dist(bins - 1);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kClip = 10.0;

TestValue euclidean(const Step2Group& g, const GroupPoint& p, double value, const Vec& egrad) {
  return {value, frame_at(g, p) * egrad};
}

}  // namespace

std::vector<TestFunction> default_test_functions(const EnergyModel& model) {
  std::vector<TestFunction> out;
  const int n = model.group.n();
  const int m = model.group.m();
  for (int i = 0; i < n; ++i) {
    out.push_back({"x" + std::to_string(i + 1), [i](const Step2Group& g, const GroupPoint& p) {
                     const double t = std::tanh(p.x(i) / kClip);
                     Vec e = Vec::Zero(g.dim());
                     e(i) = 1.0 - t * t;
                     return euclidean(g, p, kClip * t, e);
                   }});
  }
  for (int j = 0; j < m; ++j) {
    out.push_back({"z" + std::to_string(j + 1), [j](const Step2Group& g, const GroupPoint& p) {
                     const double t = std::tanh(p.z(j) / kClip);
                     Vec e = Vec::Zero(g.dim());
                     e(g.n() + j) = 1.0 - t * t;
                     return euclidean(g, p, kClip * t, e);
                   }});
  }
  const NormSpec norm = model.norm;
  out.push_back({"min(N,10)", [norm](const Step2Group& g, const GroupPoint& p) {
                   const DerivativeBundle b = norm_bundle(g, norm, p);
                   if (b.value >= kClip) return TestValue{kClip, Vec::Zero(g.n())};
                   return TestValue{b.value, b.grad};
                 }});
  out.push_back({"exp(-N)", [norm](const Step2Group& g, const GroupPoint& p) {
                   const DerivativeBundle b = norm_bundle(g, norm, p);
                   const double e = std::exp(-b.value);
                   return TestValue{e, -e * b.grad};
                 }});
  return out;
}

TestFunction exponential_norm_family(const EnergyModel& model, double t, double cap) {
  const NormSpec norm = model.norm;
  return {"exp(t min(N^2/2,cap)), t=" + std::to_string(t), [norm, t, cap](const Step2Group& g, const GroupPoint& p) {
            const DerivativeBundle b = norm_bundle(g, norm, p);
            const double h = 0.5 * b.value * b.value;
            if (h >= cap) return TestValue{std::exp(t * cap), Vec::Zero(g.n())};
            const double f = std::exp(t * h);
            return TestValue{f, t * b.value * f * b.grad};
          }};
}

TestFunction constant_function(double c) {
  return {"constant", [c](const Step2Group& g, const GroupPoint&) { return TestValue{c, Vec::Zero(g.n())}; }};
}

namespace {

enum class Functional { Variance, Entropy };

InequalityTable run_inequality(const Step2Group& g, const std::vector<GroupPoint>& samples,
                               const std::vector<TestFunction>& tests, Functional kind) {
  if (tests.empty()) throw Error(ErrorKind::EmptySample, "no test functions");
  if (samples.size() < 10000) throw Error(ErrorKind::EmptySample, "functional inequalities need at least 1e4 samples");
  InequalityTable table;
  const double count = static_cast<double>(samples.size());
  for (const auto& tf : tests) {
    std::vector<double> val(samples.size()), en(samples.size());
    kernels::for_each_index(kernels::default_exec(), samples.size(), [&](std::size_t i) {
      const TestValue v = tf.eval(g, samples[i]);
      val[i] = v.value;
      en[i] = v.grad.squaredNorm();
    });
    InequalityRow row;
    row.name = tf.name;
    double energy = 0.0;
    for (double e : en) energy += e;
    row.energy = energy / count;
    if (kind == Functional::Variance) {
      double mean = 0.0;
      for (double v : val) mean += v;
      mean /= count;
      double var = 0.0;
      for (double v : val) var += (v - mean) * (v - mean);
      row.numerator = var / count;
    } else {
      double m = 0.0, mlog = 0.0;
      for (double v : val) {
        const double h = v * v;
        m += h;
        if (h > 0.0) mlog += h * std::log(h);
      }
      m /= count;
      mlog /= count;
      row.numerator = m > 0.0 ? std::max(0.0, mlog - m * std::log(m)) : 0.0;
    }
    // Numerical zero relative to the scale of f: constants give 0/0.
    if (row.energy == 0.0 && row.numerator <= 1e-12 * std::max(1.0, std::abs(val.front()))) {
      row.skipped = true;
    } else {
      row.ratio = row.numerator / row.energy;
      table.worst = std::max(table.worst, row.ratio);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

InequalityTable empirical_poincare(const Step2Group& g, const std::vector<GroupPoint>& samples,
                                   const std::vector<TestFunction>& tests) {
  return run_inequality(g, samples, tests, Functional::Variance);
}

InequalityTable empirical_logsobolev(const Step2Group& g, const std::vector<GroupPoint>& samples,
                                     const std::vector<TestFunction>& tests) {
  return run_inequality(g, samples, tests, Functional::Entropy);
}

}  // namespace carnot
