#include "carnot/certify.hpp"
#include "carnot/errors.hpp"
#include "doctest.h"
#include "test_support.hpp"

#include <cmath>

using namespace carnot;

namespace {

EnergyModel heis(TamingSpec t, double p) {
  return {Step2Group::heisenberg(), NormSpec::type_two_smooth(16.0), t, OuterFunction::power(p)};
}

EnergyModel tamed_fixture() { return heis(TamingSpec::additive_power(1.0, 1.0), 8.0); }
EnergyModel untamed_fixture() { return heis(TamingSpec::none(), 2.0); }

const HypothesisVerdict& find(const std::vector<HypothesisVerdict>& vs, const std::string& name) {
  for (const auto& v : vs) {
    if (v.name == name) return v;
  }
  FAIL("missing verdict " << name);
  return vs.front();
}

const std::vector<double> kLadder = {1, 2, 4, 8, 16, 32};

}  // namespace

TEST_CASE("theorem tags round trip") {
  for (Theorem t : all_theorems()) CHECK(parse_theorem(to_string(t)) == t);
  CHECK_THROWS_AS(parse_theorem("nope"), Error);
}

TEST_CASE("power outer conditions for the Heisenberg additive theorem") {
  const auto v8 = check_outer_conditions(OuterFunction::power(8.0), Theorem::HeisAdd);
  REQUIRE(v8.size() == 3);
  for (const auto& v : v8) CHECK(v.satisfied());
  CHECK(find(v8, "v_prime_s7_ge_D").status == VerdictStatus::WeakPass);
  CHECK(find(v8, "sV_prime_ge_BV").margin == 8.0);

  for (const auto& v : check_outer_conditions(OuterFunction::power(9.0), Theorem::HeisAdd)) {
    CHECK(v.status == VerdictStatus::Pass);
    CHECK(v.margin > 0.0);
  }

  const auto v2 = check_outer_conditions(OuterFunction::power(2.0), Theorem::HeisAdd);
  CHECK(find(v2, "v_prime_s7_ge_D").status == VerdictStatus::Fail);
  CHECK(find(v2, "v_prime_s7_ge_D").margin == -6.0);

  const auto v1 = check_outer_conditions(OuterFunction::power(1.0), Theorem::HeisAdd);
  CHECK(find(v1, "vprime2_over_vpp_to_inf").satisfied());
}

TEST_CASE("power outer conditions for the other theorems") {
  const auto k2 = check_outer_conditions(OuterFunction::power(2.0), Theorem::KaplanMult);
  CHECK(find(k2, "eps_vprime2_ge_max_V_sVprime").satisfied());
  CHECK(find(k2, "eps_vprime2_ge_max_V_sVprime").detail.find("eps = 1/2") != std::string::npos);
  CHECK_FALSE(find(check_outer_conditions(OuterFunction::power(1.5), Theorem::KaplanMult),
                   "eps_vprime2_ge_max_V_sVprime")
                  .satisfied());

  CHECK(find(check_outer_conditions(OuterFunction::power(4.0), Theorem::Type2Mult), "v_prime_over_s2_to_inf").satisfied());
  CHECK_FALSE(
      find(check_outer_conditions(OuterFunction::power(3.0), Theorem::Type2Mult), "v_prime_over_s2_to_inf").satisfied());

  for (double p : {2.0, 8.0, 20.0}) {
    for (const auto& v : check_outer_conditions(OuterFunction::power(p), Theorem::Mult2)) {
      CHECK(v.status == VerdictStatus::Fail);
    }
  }

  const TamingSpec t = TamingSpec::additive_power(1.0, 1.0);
  CHECK(find(check_outer_conditions(OuterFunction::power(4.0), Theorem::Type2Add, &t), "poincare_growth").margin == 2.0);
  CHECK_FALSE(find(check_outer_conditions(OuterFunction::power(3.0), Theorem::Type2Add, &t), "poincare_growth").satisfied());
}

TEST_CASE("numeric probing agrees with the power closed forms") {
  // A custom s^p is probed numerically; the verdicts must match the closed forms.
  for (double p : {2.0, 4.0, 9.0}) {
    const auto custom = OuterFunction::custom("pow", [p](double s) {
      return OuterJet{std::pow(s, p), p * std::pow(s, p - 1), p * (p - 1) * std::pow(s, p - 2)};
    });
    for (Theorem t : all_theorems()) {
      const auto a = check_outer_conditions(OuterFunction::power(p), t);
      const auto b = check_outer_conditions(custom, t);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        INFO(a[i].name << " p=" << p);
        CHECK(a[i].satisfied() == b[i].satisfied());
      }
    }
  }
}

TEST_CASE("super-polynomial profiles satisfy the second multiplicative conditions") {
  for (const auto& v : check_outer_conditions(OuterFunction::exp_power(1.0, 2.0), Theorem::Mult2)) {
    INFO(v.name << ": " << v.detail);
    CHECK(v.satisfied());
  }
  // exp(s): V/V' = 1 does not vanish.
  const auto e1 = check_outer_conditions(OuterFunction::exp_power(1.0, 1.0), Theorem::Mult2);
  CHECK_FALSE(find(e1, "v_over_vprime_to_0").satisfied());
}

TEST_CASE("geometry conditions") {
  GeometryConstants k;
  const auto heis_add = check_geometry_conditions(tamed_fixture(), Theorem::HeisAdd, 5000, 1, &k);
  for (const auto& v : heis_add) CHECK(v.satisfied());
  REQUIRE(k.kaplan_residual_max);
  CHECK(*k.kaplan_residual_max <= 1e-8);

  // The sigma window of the type-2 theorem is empty for n = 2.
  const auto t2 = check_geometry_conditions(tamed_fixture(), Theorem::Type2Add, 5000, 1);
  CHECK(find(t2, "sigma_in_0_n_minus_2").status == VerdictStatus::Fail);
  CHECK(find(t2, "lemma_A_ge_1").status == VerdictStatus::WeakPass);

  GeometryConstants kc;
  const auto km = check_geometry_conditions(heis(TamingSpec::mult_power(2.0), 2.0), Theorem::KaplanMult, 5000, 1, &kc);
  REQUIRE(kc.C_est);
  CHECK(*kc.C_est == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(find(km, "C_lt_sigma").satisfied());
  CHECK(find(km, "n_minus_3_ge_2C").status == VerdictStatus::Fail);
  CHECK(find(km, "sigma_le_1").status == VerdictStatus::Fail);

  const EnergyModel gh{Step2Group::generalized_heisenberg({{1.0, 1.0}}), NormSpec::kaplan_gh(),
                       TamingSpec::mult2(0.5, 0.5), OuterFunction::exp_power(1.0, 2.0)};
  const auto m2 = check_geometry_conditions(gh, Theorem::Mult2, 100000, 3);
  for (const auto& v : m2) {
    INFO(v.name << ": " << v.detail);
    CHECK(v.satisfied());
  }
  // Unequal L: x.grad N >= 0 still holds, but the norm is no longer Kaplan.
  const EnergyModel uneq{Step2Group::generalized_heisenberg({{1.0, 2.0}}), NormSpec::kaplan_gh(),
                         TamingSpec::mult2(0.5, 0.5), OuterFunction::exp_power(1.0, 2.0)};
  const auto mu = check_geometry_conditions(uneq, Theorem::Mult2, 20000, 3);
  CHECK(find(mu, "norm_is_kaplan").status == VerdictStatus::Fail);
  CHECK(find(mu, "x_dot_grad_N_nonneg").satisfied());

  CHECK_THROWS_AS(check_geometry_conditions(tamed_fixture(), Theorem::HeisAdd, 0, 1), Error);
}

TEST_CASE("divergence and dominance scans separate tamed from untamed") {
  const auto tamed = divergence_scan(tamed_fixture(), kLadder, 1024, 7);
  CHECK(tamed.diverges);
  CHECK(tamed.bounded);
  CHECK(tamed.rows.back().min_v2 >= 10.0 * std::max(tamed.rows.front().min_v2, 1.0));
  for (const auto& r : tamed.rows) {
    CHECK(std::isfinite(r.min_v2));
    CHECK(r.excluded_fraction > 0.0);  // the center probes
  }

  const auto bare = dominance_scan(untamed_fixture(), kLadder, 1024, 7);
  CHECK_FALSE(bare.diverges);
  CHECK_FALSE(bare.bounded);
  for (const auto& r : bare.rows) {
    CHECK(r.min_v2 <= 0.0);
    CHECK(r.excluded_fraction == 0.0);
  }
  // The minimum sits on the center, where V2 vanishes exactly.
  CHECK(bare.rows.back().argmin.x.norm() == 0.0);
  CHECK(bare.rows.back().min_v2 == 0.0);

  const auto lin = dominance_scan(heis(TamingSpec::none(), 1.0), kLadder, 512, 7);
  CHECK_FALSE(lin.bounded);
}

TEST_CASE("scan verdicts are stable across seeds") {
  std::vector<double> a;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t = divergence_scan(tamed_fixture(), kLadder, 512, seed);
    CHECK(t.diverges);
    CHECK(t.bounded);
    a.push_back(t.a_emp);
    CHECK_FALSE(divergence_scan(untamed_fixture(), kLadder, 512, seed).diverges);
  }
  const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  CHECK(*hi <= 1.2 * *lo);
}

TEST_CASE("scans are reproducible and validate their ladder") {
  const auto a = divergence_scan(tamed_fixture(), kLadder, 300, 11);
  const auto b = divergence_scan(tamed_fixture(), kLadder, 300, 11);
  CHECK(a.to_csv() == b.to_csv());
  CHECK_THROWS_AS(divergence_scan(tamed_fixture(), {1.0}, 100, 1), Error);
  CHECK_THROWS_AS(divergence_scan(tamed_fixture(), {1, 2, 2, 4}, 100, 1), Error);
  CHECK_THROWS_AS(divergence_scan(tamed_fixture(), kLadder, 0, 1), Error);
}

TEST_CASE("doubling constants") {
  CHECK(doubling_constant(OuterFunction::power(2.0), 2.0) == doctest::Approx(4.0));
  CHECK(doubling_constant(OuterFunction::power(1.0), 3.0) == 1.0);
  CHECK(doubling_constant(OuterFunction::exp_power(1.0, 2.0), 1.0) == 1.0);
  CHECK(doubling_constant(OuterFunction::power(5.0), 1.0) == 1.0);
  // Numeric route on a custom s^3 reproduces c^4.
  const auto cubic = OuterFunction::custom("cubic", [](double s) { return OuterJet{s * s * s, 3 * s * s, 6 * s}; });
  CHECK(doubling_constant(cubic, 1.5) == doctest::Approx(std::pow(1.5, 4.0)).epsilon(1e-12));
  CHECK_THROWS_AS(doubling_constant(OuterFunction::power(2.0), 0.5), Error);
}

TEST_CASE("perturbation certificate") {
  CHECK(perturbation_certificate(2.0, 1.0, 0.0, 1.0).coefficient == 1.0);
  const auto c = perturbation_certificate(2.0, 1.0, 1.0, 1.0, 3.0, 5.0);
  CHECK(c.coefficient == doctest::Approx(0.5));
  CHECK(c.verdict);
  CHECK(*c.bound_C == doctest::Approx(6.0));
  CHECK(*c.bound_D == 5.0);
  for (double eps : {0.0, 0.1, 0.37, 2.0}) {
    for (double A : {1.0, 1.5, 4.0}) CHECK(perturbation_certificate(1.0, 0.8, eps, A).coefficient == 0.8 - A * eps);
  }
  double prev = 2.0;
  for (double eps : {0.0, 0.1, 0.2, 0.4, 0.8}) {
    const double v = perturbation_certificate(3.0, 1.0, eps, 2.0).coefficient;
    CHECK(v < prev);
    prev = v;
  }
  prev = 2.0;
  for (double A : {1.0, 1.5, 2.0, 4.0}) {
    const double v = perturbation_certificate(1.5, 1.0, 0.3, A).coefficient;
    CHECK(v < prev);
    prev = v;
  }
  CHECK_FALSE(perturbation_certificate(1.0, 1.0, 2.0, 1.0).verdict);
  CHECK_THROWS_AS(perturbation_certificate(0.5, 1.0, 0.1, 1.0), Error);
  CHECK_THROWS_AS(perturbation_certificate(1.0, 1.0, 0.1, 0.9), Error);
}

TEST_CASE("cancellation locus of the additive Heisenberg taming") {
  const auto scan = cancellation_scan(16.0, 1.0, 1.0, 200);
  CHECK(scan.r_star == doctest::Approx(1.0));
  REQUIRE_FALSE(scan.zeros.empty());
  CHECK(scan.zeros_on_locus);
  CHECK(scan.bound_points > 100);
  CHECK(scan.min_scaled_bound >= 1.0 - 1e-9);

  const auto other = cancellation_scan(16.0, 0.5, 2.0, 160);
  CHECK(other.zeros_on_locus);
  CHECK(other.r_star == doctest::Approx(std::pow(0.25, 1.0 / 1.5)));
  CHECK(other.min_scaled_bound >= 1.0 - 1e-9);
}

TEST_CASE("certify assembles verdicts and scans") {
  CertifyOptions opt;
  opt.samples = 512;
  opt.geometry_budget = 4000;
  opt.seed = 2;
  const auto r = certify(heis(TamingSpec::additive_power(1.0, 1.0), 9.0), Theorem::HeisAdd, opt);
  CHECK(r.hypotheses_hold);
  CHECK(r.scans.diverges);
  CHECK(r.scans.bounded);
  CHECK(r.verdicts.size() == rule_set(Theorem::HeisAdd).outer.size() + rule_set(Theorem::HeisAdd).geometry.size());
}
