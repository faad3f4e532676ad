#include "carnot/errors.hpp"
#include "carnot/norms.hpp"
#include "carnot/subriem.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace carnot;
using carnot::testing::point;
using carnot::testing::random_points;

TEST_CASE("frame rows") {
  const auto g = Step2Group::heisenberg();
  const auto F = frame_at(g, point({0.4, -1.5}, {2.0}));
  CHECK(F.rows() == 2);
  CHECK(F.cols() == 3);
  CHECK(F(0, 0) == 1.0);
  CHECK(F(0, 1) == 0.0);
  CHECK(F(1, 1) == 1.0);
  // 1/2 (L x) with L = [[0, 1], [-1, 0]].
  CHECK(F(0, 2) == doctest::Approx(0.5 * -1.5));
  CHECK(F(1, 2) == doctest::Approx(-0.5 * 0.4));

  const auto F0 = frame_at(g, point({0, 0}, {5.0}));
  CHECK(F0.col(2).isZero(0.0));

  const auto gh = Step2Group::generalized_heisenberg({{1.0, 1.0}});
  const auto Fg = frame_at(gh, point({1, 0, 0, 0}, {0}));
  CHECK(Fg(0, 4) == doctest::Approx(0.0));
  CHECK(Fg(2, 4) == doctest::Approx(1.0));
}

TEST_CASE("fd subgradient examples") {
  const auto g = Step2Group::heisenberg();
  const auto p = point({1, 0}, {0});
  const auto x1 = [](const GroupPoint& q) { return q.x(0); };
  const Vec gx = fd_subgradient(g, x1, p, 1e-4);
  CHECK(gx(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(gx(1)) <= 1e-12);

  const auto z1 = [](const GroupPoint& q) { return q.z(0); };
  const Vec gz = fd_subgradient(g, z1, p, 1e-4);
  CHECK(std::abs(gz(0)) <= 1e-12);
  CHECK(gz(1) == doctest::Approx(-0.5).epsilon(1e-10));

  const auto N = NormSpec::type_two_smooth(16.0);
  const auto f = [&](const GroupPoint& q) { return norm_value(g, N, q); };
  const Vec gn = fd_subgradient(g, f, p, 1e-4);
  const auto b = norm_bundle(g, N, p);
  CHECK((gn - b.grad).norm() <= 1e-6);
  CHECK(b.grad.norm() == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(fd_subgradient(g, x1, p, 0.0), Error);
  const auto singular = [](const GroupPoint& q) { return 1.0 / q.x(0) - (q.x(0) > 0 ? 0.0 : INFINITY); };
  CHECK_THROWS_AS(fd_subgradient(g, singular, point({1e-5, 0}, {0}), 1e-4), Error);
}

TEST_CASE("fd sublaplacian examples") {
  const auto g = Step2Group::heisenberg();
  const auto p = point({0.7, -0.2}, {1.3});
  const auto r2 = [](const GroupPoint& q) { return q.x.squaredNorm(); };
  CHECK(fd_sublaplacian(g, r2, p, 1e-3) == doctest::Approx(4.0).epsilon(1e-8));
  const auto z1 = [](const GroupPoint& q) { return q.z(0); };
  CHECK(std::abs(fd_sublaplacian(g, z1, p, 1e-3)) <= 1e-8);

  const auto N = NormSpec::type_two_smooth(16.0);
  const auto f = [&](const GroupPoint& q) { return norm_value(g, N, q); };
  CHECK(fd_sublaplacian(g, f, point({1, 0}, {0}), 1e-3) == doctest::Approx(3.0).epsilon(1e-4));
}

TEST_CASE("chain rule bundle") {
  const auto g = Step2Group::heisenberg();
  const auto N = norm_bundle(g, NormSpec::type_two_smooth(16.0), point({1, 0}, {0}));

  const auto id = chain_rule_bundle(N, {N.value, 1.0, 0.0});
  CHECK(id.value == N.value);
  CHECK((id.grad - N.grad).norm() == 0.0);
  CHECK(id.laplacian == N.laplacian);

  const auto sq = chain_rule_bundle(N, {N.value * N.value, 2.0 * N.value, 2.0});
  CHECK(sq.grad.norm() == doctest::Approx(2.0));
  CHECK(sq.laplacian == doctest::Approx(8.0));
  const auto f = [&](const GroupPoint& q) {
    const double v = norm_value(g, NormSpec::type_two_smooth(16.0), q);
    return v * v;
  };
  CHECK(fd_sublaplacian(g, f, point({1, 0}, {0}), 1e-3) == doctest::Approx(8.0).epsilon(1e-5));

  DerivativeBundle flat;
  flat.value = 2.0;
  flat.grad = Vec::Zero(2);
  flat.laplacian = 1.5;
  // V'' is irrelevant (even infinite) where the inner gradient vanishes.
  const auto c = chain_rule_bundle(flat, {8.0, 12.0, INFINITY});
  CHECK(c.grad.norm() == 0.0);
  CHECK(c.laplacian == doctest::Approx(18.0));
}

TEST_CASE("product and linear combination") {
  const auto g = Step2Group::heisenberg();
  const auto p = point({0.6, 0.9}, {-0.4});
  const auto A = norm_bundle(g, NormSpec::type_two_smooth(16.0), p);
  const auto B = norm_bundle(g, NormSpec::type_two_smooth(1.0), p);
  const auto prod = product_bundle(A, B);
  const auto f = [&](const GroupPoint& q) {
    return norm_value(g, NormSpec::type_two_smooth(16.0), q) * norm_value(g, NormSpec::type_two_smooth(1.0), q);
  };
  CHECK((fd_subgradient(g, f, p, 1e-5) - prod.grad).norm() <= 1e-8);
  CHECK(fd_sublaplacian(g, f, p, 1e-3) == doctest::Approx(prod.laplacian).epsilon(1e-5));
  const auto lin = combine_bundles(2.0, A, -3.0, B);
  CHECK(lin.value == doctest::Approx(2.0 * A.value - 3.0 * B.value));
  CHECK(lin.laplacian == doctest::Approx(2.0 * A.laplacian - 3.0 * B.laplacian));
}

TEST_CASE("commutator of the generalized heisenberg frame") {
  const std::vector<double> L = {0.8, -1.7};
  const auto g = Step2Group::generalized_heisenberg({L});
  const auto ps = random_points(g, 5, 3);
  const double h = 1e-3;
  const auto z1 = [](const GroupPoint& q) { return q.z(0); };
  for (const auto& p : ps) {
    for (int j = 0; j < 2; ++j) {
      const auto Xj = [&](const GroupPoint& q) { return fd_subgradient(g, z1, q, h)(j); };
      const auto Xjn = [&](const GroupPoint& q) { return fd_subgradient(g, z1, q, h)(j + 2); };
      const double bracket = fd_subgradient(g, Xjn, p, h)(j) - fd_subgradient(g, Xj, p, h)(j + 2);
      CHECK(bracket == doctest::Approx(2.0 * L[j]).epsilon(1e-6));
    }
  }
}

TEST_CASE("flow derivative matches the frame directional derivative") {
  const auto g = carnot::testing::sample_step2_group();
  const auto N = NormSpec::type_two_smooth(3.0);
  const auto f = [&](const GroupPoint& q) { return norm_value(g, N, q); };
  for (const auto& p : random_points(g, 20, 9, 0.2)) {
    const Vec flow = fd_subgradient(g, f, p, 1e-5);
    const auto F = frame_at(g, p);
    const Vec s = p.stacked();
    for (int i = 0; i < g.n(); ++i) {
      const double t = 1e-5;
      const double dir = (f(GroupPoint::from_stacked(s + t * F.row(i).transpose(), g.n())) -
                          f(GroupPoint::from_stacked(s - t * F.row(i).transpose(), g.n()))) /
                         (2 * t);
      CHECK(std::abs(flow(i) - dir) <= 1e-8);
    }
  }
}

TEST_CASE("default step") {
  CHECK(default_fd_step(point({0.1, 0.1}, {0.1})) == doctest::Approx(1e-4));
  CHECK(default_fd_step(point({3, 0}, {4})) == doctest::Approx(5e-4));
}
