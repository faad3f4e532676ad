#include "carnot/subriem.hpp"

#include "carnot/errors.hpp"

#include <algorithm>
#include <cmath>

namespace carnot {

bool DerivativeBundle::finite() const {
  return std::isfinite(value) && std::isfinite(laplacian) && grad.allFinite();
}

HorizontalFrame frame_at(const Step2Group& g, const GroupPoint& p) {
  g.check_point(p);
  const int n = g.n();
  const int m = g.m();
  HorizontalFrame F = HorizontalFrame::Zero(n, n + m);
  F.leftCols(n).setIdentity();
  for (int k = 0; k < m; ++k) {
    F.col(n + k) = 0.5 * (g.lambdas()[k] * p.x);
  }
  return F;
}

double default_fd_step(const GroupPoint& p) {
  const double r = std::sqrt(p.x.squaredNorm() + p.z.squaredNorm());
  return 1e-4 * std::max(1.0, r);
}

namespace {

double probe(const std::function<double(const GroupPoint&)>& f, const GroupPoint& q) {
  const double v = f(q);
  if (!std::isfinite(v)) throw Error(ErrorKind::EvaluationFailure, "field is not finite at a probe point");
  return v;
}

}  // namespace

Vec fd_subgradient(const Step2Group& g, const std::function<double(const GroupPoint&)>& f,
                   const GroupPoint& p, double h) {
  g.check_point(p);
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidParameter, "step must be positive");
  const int n = g.n();
  Vec out(n);
  Vec c = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    c(i) = h;
    const double fp = probe(f, g.translate_horizontal(p, c));
    c(i) = -h;
    const double fm = probe(f, g.translate_horizontal(p, c));
    c(i) = 0.0;
    out(i) = (fp - fm) / (2.0 * h);
  }
  return out;
}

double fd_sublaplacian(const Step2Group& g, const std::function<double(const GroupPoint&)>& f,
                       const GroupPoint& p, double h) {
  g.check_point(p);
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidParameter, "step must be positive");
  const int n = g.n();
  const double f0 = probe(f, p);
  double acc = 0.0;
  Vec c = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    c(i) = h;
    const double fp = probe(f, g.translate_horizontal(p, c));
    c(i) = -h;
    const double fm = probe(f, g.translate_horizontal(p, c));
    c(i) = 0.0;
    acc += (fp - 2.0 * f0 + fm);
  }
  return acc / (h * h);
}

DerivativeBundle chain_rule_bundle(const DerivativeBundle& inner, const OuterJet& outer) {
  DerivativeBundle out;
  out.value = outer.v;
  out.grad = outer.d1 * inner.grad;
  // V'' is only needed where the inner gradient is nonzero.
  const double g2 = inner.grad_norm2();
  out.laplacian = outer.d1 * inner.laplacian + (g2 == 0.0 ? 0.0 : outer.d2 * g2);
  return out;
}

DerivativeBundle product_bundle(const DerivativeBundle& a, const DerivativeBundle& b) {
  DerivativeBundle out;
  out.value = a.value * b.value;
  out.grad = a.value * b.grad + b.value * a.grad;
  out.laplacian = a.value * b.laplacian + 2.0 * a.grad.dot(b.grad) + b.value * a.laplacian;
  return out;
}

DerivativeBundle combine_bundles(double alpha, const DerivativeBundle& a, double beta, const DerivativeBundle& b) {
  DerivativeBundle out;
  out.value = alpha * a.value + beta * b.value;
  out.grad = alpha * a.grad + beta * b.grad;
  out.laplacian = alpha * a.laplacian + beta * b.laplacian;
  return out;
}

}  // namespace carnot
