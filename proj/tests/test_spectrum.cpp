#include "carnot/errors.hpp"
#include "carnot/spectrum.hpp"
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

using namespace carnot;

namespace {

EnergyModel heis(TamingSpec t) {
  return {Step2Group::heisenberg(), NormSpec::type_two_smooth(16.0), t, OuterFunction::power(2.0)};
}

SparseMat diagonal(const std::vector<double>& d) {
  SparseMat D(static_cast<long>(d.size()), static_cast<long>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) D.insert(static_cast<long>(i), static_cast<long>(i)) = d[i];
  D.makeCompressed();
  return D;
}

}  // namespace

TEST_CASE("diagonal matrix gives its entries") {
  std::vector<double> d;
  for (int i = 40; i >= 1; --i) d.push_back(i);
  const auto r = bottom_spectrum(diagonal(d), 1.0, 5, 1e-9, 100, 3);
  REQUIRE(r.eigenvalues.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(r.eigenvalues[static_cast<std::size_t>(i)] == doctest::Approx(i + 1).epsilon(1e-12));
  for (double res : r.residuals) CHECK(res <= 1e-9);
}

TEST_CASE("repeated eigenvalues are all found") {
  const std::vector<double> d = {7, 2, 2, 9, 2, 5, 3, 11, 13, 4, 6, 8, 10, 12, 14, 15, 16, 17, 18, 19};
  const auto r = bottom_spectrum(diagonal(d), 2.0, 5, 1e-9, 100, 11);
  const std::vector<double> want = {2, 2, 2, 3, 4};
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(r.eigenvalues[i] == doctest::Approx(want[i]).epsilon(1e-10));
}

TEST_CASE("abelian box matches the Dirichlet Laplacian at 64 x 64") {
  const double wx = 1.0;
  const double wy = 1.5;
  const auto op = assemble_flat_hamiltonian({wx, wy}, {64, 64});
  const auto r = bottom_spectrum(op.H, 0.0, 6, 1e-8, 300, 1);
  std::vector<double> exact;
  for (int k = 1; k <= 6; ++k) {
    for (int l = 1; l <= 6; ++l) {
      exact.push_back(std::numbers::pi * std::numbers::pi * (k * k / (4 * wx * wx) + l * l / (4 * wy * wy)));
    }
  }
  std::sort(exact.begin(), exact.end());
  for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(r.eigenvalues[i] - exact[i]) / exact[i] < 0.02);
}

TEST_CASE("assembled operator is exactly symmetric") {
  const auto model = heis(TamingSpec::additive_power(0.5, 1.0));
  const auto op = assemble_hamiltonian(model, SpectrumConfig::weighted(model, 3.0, 12));
  const SparseMat Ht = op.H.transpose();
  CHECK((op.H - Ht).norm() == 0.0);
  CHECK(op.nodes() == 12u * 12u * 12u);
}

TEST_CASE("weighted box follows the dilation weights") {
  const auto model = heis(TamingSpec::none());
  const auto cfg = SpectrumConfig::weighted(model, 3.0, 16);
  REQUIRE(cfg.half_widths.size() == 3);
  CHECK(cfg.half_widths[0] == 3.0);
  CHECK(cfg.half_widths[2] == doctest::Approx(9.0 / 4.0));
}

TEST_CASE("configuration errors") {
  const auto model = heis(TamingSpec::additive_power(0.5, 1.0));
  auto cfg = SpectrumConfig::weighted(model, 3.0, 6);
  try {
    assemble_hamiltonian(model, cfg);
    FAIL("expected GridTooCoarse");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GridTooCoarse);
  }
  cfg = SpectrumConfig::weighted(model, 3.0, 13);
  CHECK_THROWS_AS(assemble_hamiltonian(model, cfg), Error);
  cfg = SpectrumConfig::weighted(model, 3.0, 64);
  cfg.memory_budget_mb = 1.0;
  try {
    assemble_hamiltonian(model, cfg);
    FAIL("expected MemoryBudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MemoryBudgetExceeded);
  }
}

TEST_CASE("potential clamping is counted") {
  const auto V = [](const Vec& c) { return c(0) < 0.0 ? std::nan("") : 1e9; };
  const auto op = assemble_flat_hamiltonian({1.0, 1.0}, {8, 8}, V, 100.0);
  CHECK(op.clamp_events == 32u);
  CHECK(op.potential.maxCoeff() == 100.0);
  CHECK(op.potential.minCoeff() == 100.0);
}

TEST_CASE("Rayleigh quotient of an eigenvector") {
  const auto op = assemble_flat_hamiltonian({1.0, 1.0}, {16, 16});
  const auto r = bottom_spectrum(op.H, 0.0, 2, 1e-10, 200, 5);
  CHECK(r.eigenvalues[0] > 0.0);
  Eigen::VectorXd u(static_cast<long>(op.nodes()));
  for (std::size_t i = 0; i < op.nodes(); ++i) {
    const Vec c = op.node(i);
    u(static_cast<long>(i)) = std::cos(std::numbers::pi * c(0) / 2) * std::cos(std::numbers::pi * c(1) / 2);
  }
  // The sampled continuum mode is close to the discrete one.
  CHECK(rayleigh_quotient(op.H, u) == doctest::Approx(r.eigenvalues[0]).epsilon(0.01));
  CHECK_THROWS_AS(rayleigh_quotient(op.H, Eigen::VectorXd::Zero(u.size())), Error);
}

TEST_CASE("tamed Heisenberg at 24^3: positive gap and ground state below the gap") {
  const auto model = heis(TamingSpec::additive_power(0.5, 1.0));
  auto cfg = SpectrumConfig::weighted(model, 3.0, 24);
  cfg.k = 3;
  const auto r = compute_spectrum(model, cfg);
  REQUIRE(r.eigenvalues.size() == 3);
  CHECK(std::is_sorted(r.eigenvalues.begin(), r.eigenvalues.end()));
  CHECK(r.eigenvalues[1] - r.eigenvalues[0] > 0.1);
  CHECK(r.ground_state_rq < r.eigenvalues[1]);
  CHECK(r.eigenvalues[0] >= -(cfg.tol + r.max_negative));
  // The x-plane symmetry gives a degenerate pair.
  CHECK(r.eigenvalues[2] == doctest::Approx(r.eigenvalues[1]).epsilon(1e-6));
}

TEST_CASE("dropping the negative part of the potential leaves a nonnegative operator") {
  const auto model = heis(TamingSpec::additive_power(0.5, 1.0));
  auto op = assemble_hamiltonian(model, SpectrumConfig::weighted(model, 3.0, 16));
  for (long i = 0; i < op.potential.size(); ++i) {
    if (op.potential(i) < 0.0) op.H.coeffRef(i, i) -= op.potential(i);
  }
  const double tol = 1e-8;
  const auto r = bottom_spectrum(op.H, 0.0, 2, tol, 300, 2);
  CHECK(r.eigenvalues[0] >= -tol);
}

TEST_CASE("untamed gap shrinks as the box grows") {
  const auto model = heis(TamingSpec::none());
  auto small = SpectrumConfig::weighted(model, 2.0, 16);
  auto large = SpectrumConfig::weighted(model, 3.0, 24);
  large.grid[2] = 36;  // same spacing per unit as the small box
  small.k = large.k = 2;
  const auto a = compute_spectrum(model, small);
  const auto b = compute_spectrum(model, large);
  CHECK(b.eigenvalues[1] - b.eigenvalues[0] < a.eigenvalues[1] - a.eigenvalues[0]);
}

TEST_CASE("matrix dump writes zero-based triplets") {
  const auto op = assemble_flat_hamiltonian({1.0}, {8});
  const std::string path = "test_spectrum_dump.txt";
  dump_triplets(op.H, path);
  std::ifstream is(path);
  long r = 0, c = 0;
  double v = 0.0;
  std::size_t lines = 0;
  long max_index = 0;
  while (is >> r >> c >> v) {
    ++lines;
    max_index = std::max({max_index, r, c});
    CHECK(v == op.H.coeff(r, c));
  }
  CHECK(lines == static_cast<std::size_t>(op.H.nonZeros()));
  CHECK(max_index == 7);
  std::remove(path.c_str());
}
