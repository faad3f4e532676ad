#pragma once

#include "carnot/group.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace carnot::testing {

/// Gaussian points of R^{n+m}, rejecting |x| < min_x.
inline std::vector<GroupPoint> random_points(const Step2Group& g, std::size_t count, std::uint64_t seed,
                                             double min_x = 0.0, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  std::vector<GroupPoint> out;
  while (out.size() < count) {
    GroupPoint p(Vec(g.n()), Vec(g.m()));
    for (int i = 0; i < g.n(); ++i) p.x(i) = gauss(rng);
    for (int k = 0; k < g.m(); ++k) p.z(k) = gauss(rng);
    if (p.x.norm() >= min_x) out.push_back(p);
  }
  return out;
}

inline double rel_err(double a, double b, double floor = 1.0) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline GroupPoint point(std::initializer_list<double> x, std::initializer_list<double> z) {
  Vec xv(static_cast<int>(x.size()));
  Vec zv(static_cast<int>(z.size()));
  int i = 0;
  for (double v : x) xv(i++) = v;
  i = 0;
  for (double v : z) zv(i++) = v;
  return {xv, zv};
}

/// A genuinely non-Heisenberg step-2 group: n = 3, m = 2.
inline Step2Group sample_step2_group() {
  Mat L1 = Mat::Zero(3, 3);
  L1(0, 1) = 1.0;
  L1(1, 0) = -1.0;
  Mat L2 = Mat::Zero(3, 3);
  L2(1, 2) = 1.0;
  L2(2, 1) = -1.0;
  L2(0, 2) = 0.5;
  L2(2, 0) = -0.5;
  return Step2Group::make(3, 2, {L1, L2});
}

}  // namespace carnot::testing
