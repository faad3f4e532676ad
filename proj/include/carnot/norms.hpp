#pragma once

#include "carnot/group.hpp"
#include "carnot/subriem.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace carnot {

/// Positive profile used by the perspective composite K = B zeta(N~ / B).
struct Zeta {
  enum class Kind { Constant, Root, Linear, Table };

  Kind kind = Kind::Constant;
  double alpha = 0.0;
  /// Only for Kind::Table.
  std::function<OuterJet(double)> table;

  static Zeta constant_one();
  /// s -> s^alpha.
  static Zeta root(double alpha);
  /// s -> (1 - alpha) + alpha s, so that B zeta(N~/B) = (1 - alpha) B + alpha N~.
  static Zeta linear(double alpha);
  static Zeta from_table(std::function<OuterJet(double)> fn, std::string label);

  OuterJet operator()(double s) const;
  std::string name() const;

 private:
  std::string label_;
};

enum class NormKind { TypeTwoSmooth, TypeTwoAugmented, KaplanGeneralizedHeisenberg, PerspectiveComposite, GeometricMean };

std::string_view to_string(NormKind kind);

class NormSpec {
 public:
  /// (|x|^4 + a|z|^2)^{1/4}.
  static NormSpec type_two_smooth(double a);
  /// ((|x|^4 + a|z|^2)^{1/2} + |x|^2)^{1/2}.
  static NormSpec type_two_augmented(double a);
  /// ((sum 2|L_j|(x_j^2 + x_{j+n}^2))^2 + 16 z^2)^{1/4}; L comes from the group.
  static NormSpec kaplan_gh();
  static NormSpec perspective(const NormSpec& base, const NormSpec& other, Zeta zeta);
  static NormSpec geometric_mean(const NormSpec& base, const NormSpec& other, double alpha);

  NormKind kind() const { return kind_; }
  double a() const { return a_; }
  double alpha() const { return alpha_; }
  const NormSpec& base() const;
  const NormSpec& other() const;
  const Zeta& zeta() const { return zeta_; }

  /// True when the value depends on (|x|, |z|) only.
  bool radial() const;
  std::string describe() const;

  /// Throws ValidationError when the family cannot live on g.
  void check_group(const Step2Group& g) const;

 private:
  NormKind kind_ = NormKind::TypeTwoSmooth;
  double a_ = 16.0;
  double alpha_ = 0.0;
  Zeta zeta_;
  std::shared_ptr<const NormSpec> base_;
  std::shared_ptr<const NormSpec> other_;
};

double norm_value(const Step2Group& g, const NormSpec& spec, const GroupPoint& p);

/// Closed-form value, horizontal gradient and sub-Laplacian.
/// Throws OriginSingularity at p = 0.
DerivativeBundle norm_bundle(const Step2Group& g, const NormSpec& spec, const GroupPoint& p);

ScalarField norm_field(const Step2Group& g, const NormSpec& spec);

/// Lap N - (Q - 1)|grad N|^2 / N; zero for a Kaplan norm.
double kaplan_residual(const Step2Group& g, const NormSpec& spec, const GroupPoint& p);

struct LemmaSample {
  std::size_t index = 0;
  double x_norm = 0.0;
  double N = 0.0;
  double grad_ratio = 0.0;  // |grad N|^2 N^2 / |x|^2
  double lap_ratio = 0.0;   // Lap N * N^3 / |x|^2
  double radial_identity_error = 0.0;  // |(x/|x|).grad N - |x|^3/N^3|
};

struct LemmaConstants {
  double A_est = 0.0;
  double C_est = 0.0;
  double B_est = 0.0;
  double max_radial_identity_error = 0.0;
  std::vector<LemmaSample> samples;

  std::string to_csv() const;
};

/// Extremes of |grad N|^2 N^2/|x|^2 and |Lap N| N^3/|x|^2 over the unit level
/// set, |x| >= 1e-6. Requires a TypeTwoSmooth spec.
LemmaConstants lemma_constants(const Step2Group& g, const NormSpec& spec, std::size_t sample_size,
                               std::uint64_t seed);

/// Smallest c >= 1 with A/c <= B <= c A on the sampled unit level set of A.
double equivalence_constant(const Step2Group& g, const NormSpec& specA, const NormSpec& specB,
                            std::size_t sample_size, std::uint64_t seed);

/// sup |grad K - grad K0| over the sampled unit level set of K0.
double perturbation_gap(const Step2Group& g, const NormSpec& specK, const NormSpec& specK0,
                        std::size_t sample_size, std::uint64_t seed);

/// sup |grad N| over the sampled unit level set.
double gradient_sup(const Step2Group& g, const NormSpec& spec, std::size_t sample_size, std::uint64_t seed);

/// min of x.grad N over the sampled unit level set (>= 0 is the sign condition
/// used by the second multiplicative taming).
double min_radial_derivative(const Step2Group& g, const NormSpec& spec, std::size_t sample_size,
                             std::uint64_t seed);

}  // namespace carnot
