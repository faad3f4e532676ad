#pragma once

#include "carnot/taming.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace carnot {

struct ChainConfig {
  double step = 0.05;
  std::size_t steps = 100000;
  std::size_t burn_in = 10000;
  std::uint64_t seed = 0;
  std::optional<GroupPoint> start;
  /// Adapt the step during burn-in toward target_acceptance, then freeze it.
  bool auto_tune = true;
  double target_acceptance = 0.574;
  /// Keep every thin-th post-burn-in point in ChainResult::points.
  std::size_t thin = 1;

  void validate() const;
};

struct ChainResult {
  std::vector<GroupPoint> points;
  /// N at every post-burn-in step.
  std::vector<double> norm_trace;
  double acceptance = 0.0;
  double step = 0.0;
  std::size_t tube_rejections = 0;
};

/// Metropolis-adjusted Langevin chain along the horizontal frame. From p the
/// proposal is q = p o (c, 0) with c ~ N(-h grad U(p), 2h I_n); the reverse
/// move is c -> -c, and right translation preserves Lebesgue measure, so the
/// usual Gaussian density ratio gives exact invariance of e^{-U}. Proposals
/// with |x| < 1e-9 are rejected. The default start is the point on {N = 1}
/// along (1, 0, ..., 0).
ChainResult langevin_chain(const EnergyModel& model, const ChainConfig& cfg);

/// `count` independent chains on substreams of cfg.seed, run concurrently.
std::vector<ChainResult> langevin_chains(const EnergyModel& model, const ChainConfig& cfg, std::size_t count);

/// Integrated autocorrelation time by batch means with batches of sqrt(n).
double integrated_autocorrelation(const std::vector<double>& trace);

/// Marginal law of N under e^{-U} for a type-2 smooth norm and a radial taming,
/// by nested Gauss-Kronrod quadrature in (N, theta) with |x| = N cos^{1/2}(theta),
/// |z| = N^2 sin(theta)/sqrt(a).
class NormMarginal {
 public:
  explicit NormMarginal(const EnergyModel& model);

  /// Unnormalized density of N at R.
  double density(double R) const;
  double cdf(double R) const;
  double quantile(double u) const;
  double total() const { return total_; }

 private:
  EnergyModel model_;
  /// Smallest U seen on a probe grid; densities are scaled by e^{offset}.
  double offset_ = 0.0;
  double total_ = 0.0;
  double upper_ = 0.0;
  static constexpr int kPanels = 400;
  std::vector<double> knots_;
  std::vector<double> cum_;

  double panel(double lo, double hi) const;
};

struct ChiSquareResult {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  double expected = 0.0;
  double statistic = 0.0;
  double p_value = 0.0;
  std::size_t samples = 0;
  std::size_t thin = 1;
  double iat = 0.0;
};

/// Chi-square test of the chain's N values against the quadrature marginal
/// on `bins` equal-probability bins, thinning the trace by ceil(3 IAT).
ChiSquareResult norm_marginal_test(const EnergyModel& model, const std::vector<double>& norm_trace, int bins = 20);

/// Value and horizontal gradient of a test function.
struct TestValue {
  double value = 0.0;
  Vec grad;
};

struct TestFunction {
  std::string name;
  std::function<TestValue(const Step2Group&, const GroupPoint&)> eval;
};

/// Coordinates x_i and z_j clipped smoothly by 10 tanh(./10), min(N, 10), e^{-N}.
std::vector<TestFunction> default_test_functions(const EnergyModel& model);

/// f_t = exp(t min(N^2/2, cap)), the dilating family that witnesses a log-Sobolev failure.
TestFunction exponential_norm_family(const EnergyModel& model, double t, double cap);

TestFunction constant_function(double c);

struct InequalityRow {
  std::string name;
  double numerator = 0.0;    // Var(f) or Ent(f^2)
  double energy = 0.0;       // mean |grad f|^2
  double ratio = 0.0;
  bool skipped = false;      // 0/0
};

struct InequalityTable {
  std::vector<InequalityRow> rows;
  double worst = 0.0;
};

/// Var(f) / mean |grad f|^2 over the samples. Needs at least 1e4 samples.
InequalityTable empirical_poincare(const Step2Group& g, const std::vector<GroupPoint>& samples,
                                   const std::vector<TestFunction>& tests);

/// Ent(f^2) / mean |grad f|^2, Ent(h) = mean(h log h) - mean(h) log mean(h).
InequalityTable empirical_logsobolev(const Step2Group& g, const std::vector<GroupPoint>& samples,
                                     const std::vector<TestFunction>& tests);

}  // namespace carnot
