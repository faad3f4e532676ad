#pragma once

#include "carnot/group.hpp"

#include <functional>
#include <optional>

namespace carnot {

/// Value, horizontal gradient (X_i phi) and sub-Laplacian (sum X_i^2 phi) of
/// a scalar at one point. This is the currency between norms, tamings and
/// the coercivity potential.
struct DerivativeBundle {
  double value = 0.0;
  Vec grad;
  double laplacian = 0.0;

  double grad_norm2() const { return grad.squaredNorm(); }
  bool finite() const;
};

/// Row i holds the R^{n+m} coordinates of X_i at p: identity block on the
/// left, center block entry (i, k) = 1/2 sum_l L^(k)_{il} x_l.
using HorizontalFrame = Mat;

HorizontalFrame frame_at(const Step2Group& g, const GroupPoint& p);

/// A scalar field with an optional closed-form bundle and an optional
/// declared homogeneity degree.
struct ScalarField {
  std::function<double(const GroupPoint&)> value;
  std::function<DerivativeBundle(const GroupPoint&)> bundle;
  std::optional<double> homogeneity_degree;

  double operator()(const GroupPoint& p) const { return value(p); }
};

/// Default step 1e-4 * max(1, |p|).
double default_fd_step(const GroupPoint& p);

/// Centered differences of t -> f(p o (t e_i)) at t = 0. The flow of X_i is
/// right translation by a horizontal element, evaluated exactly with the
/// group law. Throws EvaluationFailure if f is not finite at a probe.
Vec fd_subgradient(const Step2Group& g, const std::function<double(const GroupPoint&)>& f,
                   const GroupPoint& p, double h);

double fd_sublaplacian(const Step2Group& g, const std::function<double(const GroupPoint&)>& f,
                       const GroupPoint& p, double h);

/// Outer function values V(s), V'(s), V''(s).
struct OuterJet {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// |grad V(phi)|^2 = V'^2 |grad phi|^2, Lap V(phi) = V' Lap phi + V'' |grad phi|^2.
DerivativeBundle chain_rule_bundle(const DerivativeBundle& inner, const OuterJet& outer);

/// Product rule for a * b.
DerivativeBundle product_bundle(const DerivativeBundle& a, const DerivativeBundle& b);

/// Linear combination alpha * a + beta * b.
DerivativeBundle combine_bundles(double alpha, const DerivativeBundle& a, double beta, const DerivativeBundle& b);

}  // namespace carnot
