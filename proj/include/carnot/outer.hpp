#pragma once

#include "carnot/subriem.hpp"

#include <functional>
#include <string>

namespace carnot {

enum class OuterFamily { Power, ExpPower, Custom };

/// The outer profile V in U = V(inner). Power(p) is s^p; ExpPower(kappa, q)
/// is exp(kappa s^q), a super-polynomial profile for which V/V' -> 0;
/// Custom carries only a jet evaluator and is certified numerically.
class OuterFunction {
 public:
  /// p >= 0. p = 0 gives the constant 1 (a non-integrable density).
  static OuterFunction power(double p);
  static OuterFunction exp_power(double kappa, double q);
  static OuterFunction custom(std::string name, std::function<OuterJet(double)> jet);

  OuterFamily family() const { return family_; }
  double p() const { return p_; }
  double kappa() const { return kappa_; }
  double q() const { return q_; }

  /// V, V', V''. Throws OuterSingularity where V is not twice differentiable
  /// (negative argument with a non-integer exponent, or s = 0 with exponent < 2
  /// where V'' blows up).
  OuterJet jet(double s) const;
  double value(double s) const;

  std::string describe() const;

 private:
  OuterFamily family_ = OuterFamily::Power;
  double p_ = 2.0;
  double kappa_ = 1.0;
  double q_ = 1.0;
  std::string name_;
  std::function<OuterJet(double)> custom_;
};

}  // namespace carnot
