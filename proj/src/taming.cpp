#include "carnot/taming.hpp"

#include "carnot/errors.hpp"
#include "carnot/kernels.hpp"
#include "carnot/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace carnot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kScaleStream = 0x5343414cULL;
constexpr std::uint64_t kPartitionStream = 0x5a484154ULL;

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::InvalidParameter, what);
}

/// xi(s) = log(e + 1/s) and its derivatives.
RadialJet log_xi(double s) {
  const double es = std::numbers::e * s;
  return {std::log(std::numbers::e + 1.0 / s), -1.0 / ((1.0 + es) * s),
          (1.0 + 2.0 * es) / ((1.0 + es) * (1.0 + es) * s * s)};
}

DerivativeBundle constant_bundle(double v, int n) {
  DerivativeBundle b;
  b.value = v;
  b.grad = Vec::Zero(n);
  b.laplacian = 0.0;
  return b;
}

double log_t3_density(double y) {
  // Student t with 3 degrees of freedom.
  static const double logc = -std::lgamma(1.5) - 0.5 * std::log(3.0 * std::numbers::pi);
  return logc - 2.0 * std::log1p(y * y / 3.0);
}

}  // namespace

std::string_view to_string(TamingKind kind) {
  switch (kind) {
    case TamingKind::None:
      return "none";
    case TamingKind::AdditivePower:
      return "additive_power";
    case TamingKind::AdditiveLog:
      return "additive_log";
    case TamingKind::MultiplicativePower:
      return "mult_power";
    case TamingKind::MultiplicativeII:
      return "mult2";
  }
  return "?";
}

TamingSpec TamingSpec::none() { return {}; }

TamingSpec TamingSpec::additive_power(double sigma, double beta) {
  require(sigma > 0.0 && std::isfinite(sigma), "sigma must be positive");
  require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
  TamingSpec t;
  t.kind = TamingKind::AdditivePower;
  t.sigma = sigma;
  t.beta = beta;
  return t;
}

TamingSpec TamingSpec::additive_log(double beta) {
  require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
  TamingSpec t;
  t.kind = TamingKind::AdditiveLog;
  t.beta = beta;
  return t;
}

TamingSpec TamingSpec::mult_power(double sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), "sigma must be positive");
  TamingSpec t;
  t.kind = TamingKind::MultiplicativePower;
  t.sigma = sigma;
  return t;
}

TamingSpec TamingSpec::mult2(double L, double alpha) {
  require(L > 0.0 && L < 1.0, "L must lie in (0, 1)");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  TamingSpec t;
  t.kind = TamingKind::MultiplicativeII;
  t.L = L;
  t.alpha = alpha;
  return t;
}

std::string TamingSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case TamingKind::AdditivePower:
      os << "(sigma=" << sigma << ", beta=" << beta << ")";
      break;
    case TamingKind::AdditiveLog:
      os << "(beta=" << beta << ")";
      break;
    case TamingKind::MultiplicativePower:
      os << "(sigma=" << sigma << ")";
      break;
    case TamingKind::MultiplicativeII:
      os << "(L=" << L << ", alpha=" << alpha << ")";
      break;
    case TamingKind::None:
      break;
  }
  return os.str();
}

RadialJet xi_profile(const TamingSpec& t, double r) {
  switch (t.kind) {
    case TamingKind::None:
      return {};
    case TamingKind::AdditivePower:
    case TamingKind::MultiplicativePower: {
      const double v = std::pow(r, -t.sigma);
      return {v, -t.sigma * v / r, t.sigma * (t.sigma + 1.0) * v / (r * r)};
    }
    case TamingKind::AdditiveLog:
      return {-std::log(r), -1.0 / r, 1.0 / (r * r)};
    case TamingKind::MultiplicativeII: {
      const RadialJet xi = log_xi(r);
      if (r < 1.0) return xi;
      const double k = 1.0 / ((1.0 - t.L) * (1.0 - t.L));
      const double w = (r - t.L) * (r - t.L) * k;
      const double w1 = 2.0 * (r - t.L) * k;
      const double w2 = 2.0 * k;
      return {w * xi.v, w1 * xi.v + w * xi.d1, w2 * xi.v + 2.0 * w1 * xi.d1 + w * xi.d2};
    }
  }
  return {};
}

DerivativeBundle xi_bundle(const TamingSpec& taming, const Vec& x) {
  const int n = static_cast<int>(x.size());
  if (taming.kind == TamingKind::None) return constant_bundle(0.0, n);
  const double r = x.norm();
  if (!(r > 0.0)) throw Error(ErrorKind::OriginSingularity, "taming is singular on the center x = 0");
  const RadialJet j = xi_profile(taming, r);
  DerivativeBundle b;
  b.value = j.v;
  b.grad = (j.d1 / r) * x;
  b.laplacian = j.d2 + (n - 1) * j.d1 / r;
  return b;
}

void EnergyModel::validate() const { norm.check_group(group); }

std::string EnergyModel::describe() const {
  return "U = " + outer.describe() + " o " + taming.describe() + " over " + norm.describe();
}

double energy_value(const EnergyModel& model, const GroupPoint& p) {
  const auto& t = model.taming;
  const double N = norm_value(model.group, model.norm, p);
  if (t.kind == TamingKind::None) return model.outer.value(N);
  const double r = p.x.norm();
  if (!(r > 0.0)) return kInf;
  const double xi = xi_profile(t, r).v;
  switch (t.kind) {
    case TamingKind::AdditivePower:
    case TamingKind::AdditiveLog:
      return model.outer.value(t.beta * N + xi);
    case TamingKind::MultiplicativePower:
      return model.outer.value(xi * N);
    case TamingKind::MultiplicativeII:
      return (1.0 + xi) * model.outer.value(N);
    case TamingKind::None:
      break;
  }
  return kInf;
}

DerivativeBundle energy_bundle(const EnergyModel& model, const GroupPoint& p) {
  const auto& t = model.taming;
  const DerivativeBundle N = norm_bundle(model.group, model.norm, p);
  if (t.kind == TamingKind::None) return chain_rule_bundle(N, model.outer.jet(N.value));
  const DerivativeBundle xi = xi_bundle(t, p.x);
  switch (t.kind) {
    case TamingKind::AdditivePower:
    case TamingKind::AdditiveLog: {
      const DerivativeBundle inner = combine_bundles(t.beta, N, 1.0, xi);
      return chain_rule_bundle(inner, model.outer.jet(inner.value));
    }
    case TamingKind::MultiplicativePower: {
      const DerivativeBundle inner = product_bundle(xi, N);
      return chain_rule_bundle(inner, model.outer.jet(inner.value));
    }
    case TamingKind::MultiplicativeII: {
      DerivativeBundle onePlusXi = xi;
      onePlusXi.value += 1.0;
      return product_bundle(onePlusXi, chain_rule_bundle(N, model.outer.jet(N.value)));
    }
    case TamingKind::None:
      break;
  }
  throw Error(ErrorKind::InvalidParameter, "unknown taming");
}

double v2_from_bundle(const DerivativeBundle& U) { return 0.25 * U.grad_norm2() - 0.5 * U.laplacian; }

double v2_closed(const EnergyModel& model, const GroupPoint& p) {
  if (model.taming.singular() && p.x.isZero(0.0) && !p.z.isZero(0.0)) return kInf;
  return v2_from_bundle(energy_bundle(model, p));
}

double v2_fd_oracle(const EnergyModel& model, const GroupPoint& p, double h) {
  const auto f = [&](const GroupPoint& q) { return energy_value(model, q); };
  const Vec g = fd_subgradient(model.group, f, p, h);
  return 0.25 * g.squaredNorm() - 0.5 * fd_sublaplacian(model.group, f, p, h);
}

PartitionEstimate estimate_partition(const EnergyModel& model, std::size_t budget, std::uint64_t seed) {
  if (budget < 10000) throw Error(ErrorKind::BudgetTooSmall, "partition estimate needs a budget of at least 1e4");
  model.validate();
  const Step2Group& g = model.group;
  const int n = g.n();
  const int m = g.m();
  const int Q = g.homogeneous_dimension();

  // Proposal scale: the shell radius that maximizes R^Q e^{-U} on average.
  const auto dirs = sphere_directions(g.dim(), 64, seed, kScaleStream);
  double bestScore = -kInf;
  double scale = 1.0;
  for (int k = -4; k <= 6; ++k) {
    const double R = std::ldexp(1.0, k);
    double sum = 0.0;
    int used = 0;
    for (const auto& d : dirs) {
      const double U = energy_value(model, onto_level_set(g, model.norm, d, R));
      if (std::isfinite(U)) {
        sum += U;
        ++used;
      }
    }
    if (used == 0) continue;
    const double score = Q * std::log(R) - sum / used;
    if (score > bestScore) {
      bestScore = score;
      scale = R;
    }
  }

  std::vector<double> logw(budget);
  const std::size_t chunks = (budget + kChunkSize - 1) / kChunkSize;
  const double logScale = std::log(scale);
  kernels::for_each_index(kernels::default_exec(), chunks, [&](std::size_t c) {
    Rng rng = substream(seed, kPartitionStream, c);
    std::student_t_distribution<double> t3(3.0);
    const std::size_t end = std::min(budget, (c + 1) * kChunkSize);
    GroupPoint p{Vec(n), Vec(m)};
    for (std::size_t i = c * kChunkSize; i < end; ++i) {
      double logq = 0.0;
      for (int a = 0; a < n; ++a) {
        const double y = t3(rng);
        p.x(a) = scale * y;
        logq += log_t3_density(y) - logScale;
      }
      for (int b = 0; b < m; ++b) {
        const double y = t3(rng);
        p.z(b) = scale * scale * y;
        logq += log_t3_density(y) - 2.0 * logScale;
      }
      const double U = energy_value(model, p);
      logw[i] = std::isfinite(U) ? -U - logq : -kInf;
    }
  });

  const double M = *std::max_element(logw.begin(), logw.end());
  PartitionEstimate out;
  out.budget = budget;
  out.proposal_scale = scale;
  if (!std::isfinite(M)) {
    out.finite = false;
    return out;
  }
  double sum = 0.0;
  double sum2 = 0.0;
  double third[3] = {0.0, 0.0, 0.0};
  std::size_t thirdCount[3] = {0, 0, 0};
  for (std::size_t i = 0; i < budget; ++i) {
    const double w = std::exp(logw[i] - M);
    sum += w;
    sum2 += w * w;
    const std::size_t k = std::min<std::size_t>(2, 3 * i / budget);
    third[k] += w;
    ++thirdCount[k];
  }
  const double nb = static_cast<double>(budget);
  const double mean = sum / nb;
  const double var = std::max(0.0, sum2 / nb - mean * mean);
  out.log_Z_hat = M + std::log(mean);
  out.Z_hat = std::exp(out.log_Z_hat);
  out.stderr_ = std::exp(M) * std::sqrt(var / nb);
  double lo = kInf;
  double hi = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double est = third[k] / static_cast<double>(thirdCount[k]);
    out.thirds[k] = std::exp(M) * est;
    lo = std::min(lo, est);
    hi = std::max(hi, est);
  }
  out.thirds_ratio = lo > 0.0 ? hi / lo : kInf;
  out.max_weight_share = 1.0 / sum;  // the largest weight is exp(0) = 1
  out.finite = std::isfinite(out.Z_hat) && out.thirds_ratio < 1.5 && out.max_weight_share < 0.05;
  return out;
}

PartitionEstimate partition_estimate(const EnergyModel& model, std::size_t budget, std::uint64_t seed) {
  const PartitionEstimate est = estimate_partition(model, budget, seed);
  if (!est.finite) {
    std::ostringstream os;
    os << "importance weights do not stabilize (thirds ratio " << est.thirds_ratio << ", max weight share "
       << est.max_weight_share << ")";
    throw Error(ErrorKind::NonIntegrable, os.str());
  }
  return est;
}

}  // namespace carnot
