#pragma once

#include "carnot/norms.hpp"
#include "carnot/outer.hpp"
#include "carnot/taming.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace carnot {

enum class VerdictStatus { Pass, WeakPass, Fail, NotApplicable };

std::string_view to_string(VerdictStatus s);

/// A boundary value (margin exactly 0 on a non-strict condition) is a WeakPass.
struct HypothesisVerdict {
  std::string name;
  VerdictStatus status = VerdictStatus::Fail;
  double margin = 0.0;
  std::string detail;

  bool satisfied() const { return status == VerdictStatus::Pass || status == VerdictStatus::WeakPass; }
};

/// Theorem tags understood by the checker.
enum class Theorem { HeisAdd, Type2Add, Type2Mult, KaplanMult, Mult2, PoincareLog };

std::string_view to_string(Theorem t);
Theorem parse_theorem(std::string_view tag);  // throws UnknownFamily
std::vector<Theorem> all_theorems();

struct RuleSet {
  Theorem theorem;
  std::vector<std::string> outer;
  std::vector<std::string> geometry;
  /// What the theorem concludes when every rule holds.
  std::string conclusion;
};

const RuleSet& rule_set(Theorem t);

/// Conditions on V alone. Power has closed-form margins; other families are
/// probed numerically on s in [10, 1e6]. taming supplies sigma for the
/// growth condition of the type-2 Poincare clause.
std::vector<HypothesisVerdict> check_outer_conditions(const OuterFunction& V, Theorem t,
                                                      const TamingSpec* taming = nullptr);

/// Numeric limit probing used for non-Power families (exposed for tests).
HypothesisVerdict probe_outer_condition(const OuterFunction& V, const std::string& name, double sigma = 1.0);

struct GeometryConstants {
  std::optional<double> A_est;
  std::optional<double> C_est;
  std::optional<double> kaplan_residual_max;
  std::optional<double> min_x_dot_grad;
};

std::vector<HypothesisVerdict> check_geometry_conditions(const EnergyModel& model, Theorem t, std::size_t budget,
                                                         std::uint64_t seed, GeometryConstants* constants = nullptr);

struct ScanRow {
  double R = 0.0;
  double min_v2 = 0.0;
  GroupPoint argmin;
  double dominance = 0.0;
  double excluded_fraction = 0.0;
  std::size_t samples = 0;
};

struct ScanTable {
  std::vector<ScanRow> rows;
  bool diverges = false;
  bool bounded = false;
  double a_emp = 0.0;
  std::string trend_note;

  std::string to_csv() const;
};

/// Both scans make one pass over the shells {N = R}: random directions common
/// to all shells plus the exact center-axis directions (where the gradient of
/// every type-2 norm vanishes and V2 of an untamed model is smallest). Points
/// with |x|/R < 1e-6 are excluded for singular tamings. Both verdicts are
/// filled in either case.
///
/// "diverges": min V2 strictly increasing over the top half of the ladder and
/// last minimum >= 10 max(first minimum, 1). Needs at least 4 rungs.
ScanTable divergence_scan(const EnergyModel& model, const std::vector<double>& radii, std::size_t samples,
                          std::uint64_t seed);

/// "bounded": sup (|grad U|^2 + U)/(1 + max(V2, 0)) non-increasing over the
/// top half; a_emp is its maximum there.
ScanTable dominance_scan(const EnergyModel& model, const std::vector<double>& radii, std::size_t samples,
                         std::uint64_t seed);

/// sup_t |U'(c^2 t)| / |U'(t)|. Power(p): c^{2(p-1)} exactly.
double doubling_constant(const OuterFunction& V, double c);

struct PerturbationCertificate {
  double q = 1.0;
  double alpha_q = 0.0;
  double epsilon = 0.0;
  double A_c = 1.0;
  double coefficient = 0.0;
  bool verdict = false;
  /// 2^{q-1} C and D of the perturbed inequality, when supplied.
  std::optional<double> bound_C;
  std::optional<double> bound_D;
};

PerturbationCertificate perturbation_certificate(double q, double alpha_q, double epsilon, double A_c,
                                                 std::optional<double> C = std::nullopt,
                                                 std::optional<double> D = std::nullopt);

/// |grad(beta N + |x|^-sigma)|^2 on the Heisenberg group over a grid in (|x|, z).
struct CancellationScan {
  double r_star = 0.0;       // (sigma/beta)^{1/(1+sigma)}
  double r0 = 0.0;           // (sigma/(1+beta))^{1/(1+sigma)}
  double cell_r = 0.0;
  double cell_z = 0.0;
  std::vector<std::pair<double, double>> zeros;  // refined (|x|, z)
  bool zeros_on_locus = false;
  /// min of |grad|^2 N^6 where N >= 1 and (|x| <= r0 or z^2 >= 1/(a beta^2 r0^2)).
  double min_scaled_bound = 0.0;
  std::size_t bound_points = 0;
};

CancellationScan cancellation_scan(double a, double sigma, double beta, int grid);

struct CertifyOptions {
  std::vector<double> radii = {1, 2, 4, 8, 16, 32};
  std::size_t samples = 4096;
  std::size_t geometry_budget = 20000;
  std::uint64_t seed = 0;
};

struct CertifyReport {
  Theorem theorem = Theorem::HeisAdd;
  std::vector<HypothesisVerdict> verdicts;
  bool hypotheses_hold = false;
  GeometryConstants constants;
  /// One shell pass carries both the divergence and the dominance verdicts.
  ScanTable scans;
};

CertifyReport certify(const EnergyModel& model, Theorem t, const CertifyOptions& options);

}  // namespace carnot
