#include "carnot/outer.hpp"

#include "carnot/errors.hpp"

#include <cmath>
#include <sstream>

namespace carnot {

namespace {

bool is_integer(double v) { return std::floor(v) == v; }

/// s^e with its two derivatives; integer exponents extend to s < 0.
OuterJet power_jet(double s, double e) {
  if (e == 0.0) return {1.0, 0.0, 0.0};
  if (s < 0.0 && !is_integer(e)) {
    throw Error(ErrorKind::OuterSingularity, "non-integer power of a negative argument");
  }
  if (s == 0.0) {
    if (e < 2.0 && e != 1.0) throw Error(ErrorKind::OuterSingularity, "second derivative unbounded at 0");
    return {0.0, e == 1.0 ? 1.0 : 0.0, e == 2.0 ? 2.0 : 0.0};
  }
  const double v = std::pow(s, e);
  const double d1 = e * std::pow(s, e - 1.0);
  const double d2 = e == 1.0 ? 0.0 : e * (e - 1.0) * std::pow(s, e - 2.0);
  return {v, d1, d2};
}

}  // namespace

OuterFunction OuterFunction::power(double p) {
  if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidParameter, "power exponent must be >= 0");
  OuterFunction f;
  f.family_ = OuterFamily::Power;
  f.p_ = p;
  return f;
}

OuterFunction OuterFunction::exp_power(double kappa, double q) {
  if (!(kappa > 0.0) || !(q >= 1.0)) throw Error(ErrorKind::InvalidParameter, "exp_power needs kappa > 0 and q >= 1");
  OuterFunction f;
  f.family_ = OuterFamily::ExpPower;
  f.kappa_ = kappa;
  f.q_ = q;
  return f;
}

OuterFunction OuterFunction::custom(std::string name, std::function<OuterJet(double)> jet) {
  if (!jet) throw Error(ErrorKind::InvalidParameter, "custom outer function needs an evaluator");
  OuterFunction f;
  f.family_ = OuterFamily::Custom;
  f.name_ = std::move(name);
  f.custom_ = std::move(jet);
  return f;
}

OuterJet OuterFunction::jet(double s) const {
  switch (family_) {
    case OuterFamily::Power:
      return power_jet(s, p_);
    case OuterFamily::ExpPower: {
      const OuterJet w = power_jet(s, q_);
      const double v = std::exp(kappa_ * w.v);
      const double g = kappa_ * w.d1;
      return {v, g * v, (kappa_ * w.d2 + g * g) * v};
    }
    case OuterFamily::Custom:
      return custom_(s);
  }
  return {};
}

double OuterFunction::value(double s) const {
  if (family_ == OuterFamily::Power) {
    if (p_ == 0.0) return 1.0;
    if (s < 0.0 && !is_integer(p_)) {
      throw Error(ErrorKind::OuterSingularity, "non-integer power of a negative argument");
    }
    return std::pow(s, p_);
  }
  if (family_ == OuterFamily::ExpPower) {
    if (s < 0.0 && !is_integer(q_)) {
      throw Error(ErrorKind::OuterSingularity, "non-integer power of a negative argument");
    }
    return std::exp(kappa_ * std::pow(s, q_));
  }
  return custom_(s).v;
}

std::string OuterFunction::describe() const {
  std::ostringstream os;
  switch (family_) {
    case OuterFamily::Power:
      os << "power(p=" << p_ << ")";
      break;
    case OuterFamily::ExpPower:
      os << "exp_power(kappa=" << kappa_ << ", q=" << q_ << ")";
      break;
    case OuterFamily::Custom:
      os << "custom(" << name_ << ")";
      break;
  }
  return os.str();
}

}  // namespace carnot
