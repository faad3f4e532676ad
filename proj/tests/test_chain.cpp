#include "carnot/chain.hpp"
#include "carnot/errors.hpp"
#include "doctest.h"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace carnot;

namespace {

EnergyModel heis(TamingSpec t, double p) {
  return {Step2Group::heisenberg(), NormSpec::type_two_smooth(16.0), t, OuterFunction::power(p)};
}

/// Power(8) concentrates on a thin ring around |x| = 1, a hard case for invariance.
EnergyModel tamed_fixture() { return heis(TamingSpec::additive_power(1.0, 1.0), 8.0); }
/// The same fixture as the spectrum refinement study; it mixes well enough for ratio estimates.
EnergyModel mild_fixture() { return heis(TamingSpec::additive_power(0.5, 1.0), 2.0); }
EnergyModel untamed_fixture() { return heis(TamingSpec::none(), 2.0); }

ChainConfig config(std::size_t steps, std::uint64_t seed) {
  ChainConfig cfg;
  cfg.steps = steps;
  cfg.burn_in = steps / 10;
  cfg.seed = seed;
  cfg.step = 0.01;
  cfg.thin = 5;
  return cfg;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::ValidationError;
}

}  // namespace

TEST_CASE("tamed chain matches the quadrature N-marginal") {
  const auto model = tamed_fixture();
  const auto r = langevin_chain(model, config(200000, 7));
  CHECK(r.acceptance > 0.2);
  CHECK(r.acceptance < 0.8);
  const auto chi = norm_marginal_test(model, r.norm_trace);
  CHECK(chi.p_value > 0.01);
  CHECK(chi.counts.size() == 20u);
  CHECK(chi.thin >= 1u);
}

TEST_CASE("mildly tamed chain matches the quadrature N-marginal") {
  const auto model = mild_fixture();
  const auto r = langevin_chain(model, config(200000, 11));
  CHECK(r.acceptance > 0.2);
  CHECK(r.acceptance < 0.8);
  CHECK(norm_marginal_test(model, r.norm_trace).p_value > 0.01);
}

TEST_CASE("untamed chain matches the quadrature N-marginal") {
  const auto model = untamed_fixture();
  const auto r = langevin_chain(model, config(200000, 3));
  CHECK(r.acceptance > 0.2);
  CHECK(r.acceptance < 0.8);
  CHECK(norm_marginal_test(model, r.norm_trace).p_value > 0.01);
}

TEST_CASE("N-marginal quadrature is a distribution") {
  const NormMarginal nm(tamed_fixture());
  CHECK(nm.total() > 0.0);
  double prev = 0.0;
  for (double R = 0.1; R < 4.0; R += 0.1) {
    const double c = nm.cdf(R);
    CHECK(c >= prev);
    prev = c;
  }
  CHECK(nm.cdf(50.0) == doctest::Approx(1.0).epsilon(1e-9));
  for (double u : {0.05, 0.3, 0.5, 0.9}) CHECK(nm.cdf(nm.quantile(u)) == doctest::Approx(u).epsilon(1e-6));
  const EnergyModel augmented{Step2Group::heisenberg(), NormSpec::type_two_augmented(16.0), TamingSpec::none(),
                              OuterFunction::power(2.0)};
  CHECK(kind_of([&] { NormMarginal bad(augmented); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("chain start and sample-size errors") {
  const auto model = tamed_fixture();
  auto cfg = config(1000, 1);
  cfg.start = testing::point({0.0, 0.0}, {0.3});
  CHECK(kind_of([&] { langevin_chain(model, cfg); }) == ErrorKind::StartOnSingularSet);
  cfg = config(1000, 1);
  cfg.burn_in = 1000;
  CHECK(kind_of([&] { langevin_chain(model, cfg); }) == ErrorKind::EmptySample);
  const auto small = langevin_chain(model, config(2000, 1));
  CHECK(kind_of([&] { empirical_poincare(model.group, small.points, default_test_functions(model)); }) ==
        ErrorKind::EmptySample);
  CHECK(kind_of([&] { integrated_autocorrelation({1.0, 2.0}); }) == ErrorKind::EmptySample);
}

TEST_CASE("chains are deterministic per seed") {
  const auto model = tamed_fixture();
  const auto cfg = config(5000, 42);
  const auto a = langevin_chain(model, cfg);
  const auto b = langevin_chain(model, cfg);
  CHECK(a.norm_trace == b.norm_trace);
  const auto many = langevin_chains(model, cfg, 3);
  REQUIRE(many.size() == 3);
  CHECK(many[0].norm_trace == a.norm_trace);
  CHECK(many[1].norm_trace != a.norm_trace);
}

TEST_CASE("integrated autocorrelation of known sequences") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> iid(400000), ar(400000);
  double s = 0.0;
  const double phi = 0.9;
  for (std::size_t i = 0; i < iid.size(); ++i) {
    iid[i] = g(rng);
    s = phi * s + g(rng);
    ar[i] = s;
  }
  CHECK(integrated_autocorrelation(iid) == doctest::Approx(1.0).epsilon(0.2));
  CHECK(integrated_autocorrelation(ar) == doctest::Approx((1 + phi) / (1 - phi)).epsilon(0.3));
}

TEST_CASE("constant test functions are skipped") {
  const auto model = tamed_fixture();
  const auto r = langevin_chain(model, config(60000, 9));
  const auto t = empirical_poincare(model.group, r.points, {constant_function(2.0)});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].skipped);
  const auto l = empirical_logsobolev(model.group, r.points, {constant_function(2.0)});
  CHECK(l.rows[0].skipped);
}

TEST_CASE("functional inequality ratios are stable across seeds") {
  const auto model = mild_fixture();
  std::vector<double> poincare, lsi;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = langevin_chain(model, config(300000, seed));
    poincare.push_back(empirical_poincare(model.group, r.points, default_test_functions(model)).worst);
    lsi.push_back(empirical_logsobolev(model.group, r.points, default_test_functions(model)).worst);
  }
  const auto spread = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    double mean = 0.0;
    for (double x : v) mean += x / static_cast<double>(v.size());
    return std::max(*hi - mean, mean - *lo) / mean;
  };
  CHECK(spread(poincare) < 0.3);
  CHECK(spread(lsi) < 0.3);
}

TEST_CASE("entropy ratio of the dilating family grows without taming") {
  const auto model = untamed_fixture();
  const auto r = langevin_chain(model, config(400000, 4));
  std::vector<double> ratios;
  for (double t : {0.1, 0.2, 0.3}) {
    const auto table = empirical_logsobolev(model.group, r.points, {exponential_norm_family(model, t, 50.0)});
    ratios.push_back(table.rows[0].ratio);
  }
  CHECK(ratios[1] > ratios[0]);
  CHECK(ratios[2] > ratios[1]);
}
