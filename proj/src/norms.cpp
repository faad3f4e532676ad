#include "carnot/norms.hpp"

#include "carnot/errors.hpp"
#include "carnot/kernels.hpp"
#include "carnot/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace carnot {

namespace {

constexpr std::uint64_t kLemmaStream = 0x4c454d4dULL;
constexpr std::uint64_t kEquivStream = 0x45515549ULL;
constexpr std::uint64_t kGapStream = 0x47415050ULL;
constexpr std::uint64_t kSupStream = 0x53555052ULL;
constexpr std::uint64_t kRadialStream = 0x52414449ULL;

/// Weights and center coefficient of the quartic gauge F = (x^T D x)^2 + a|z|^2.
struct Quartic {
  Vec d;
  double a = 0.0;
};

Quartic quartic_for(const Step2Group& g, const NormSpec& spec) {
  Quartic q;
  switch (spec.kind()) {
    case NormKind::TypeTwoSmooth:
    case NormKind::TypeTwoAugmented:
      q.d = Vec::Ones(g.n());
      q.a = spec.a();
      return q;
    case NormKind::KaplanGeneralizedHeisenberg: {
      spec.check_group(g);
      const auto& L = g.gh_params()->L;
      const int half = static_cast<int>(L.size());
      q.d.resize(2 * half);
      for (int j = 0; j < half; ++j) {
        q.d(j) = 2.0 * std::abs(L[j]);
        q.d(j + half) = 2.0 * std::abs(L[j]);
      }
      q.a = 16.0;
      return q;
    }
    default:
      break;
  }
  throw Error(ErrorKind::InvalidParameter, "not a quartic gauge");
}

double quartic_F(const Quartic& q, const GroupPoint& p) {
  const double S = (q.d.array() * p.x.array().square()).sum();
  return S * S + q.a * p.z.squaredNorm();
}

/// F together with its horizontal gradient and sub-Laplacian.
///   X_i S = 2 d_i x_i,  X_i |z|^2 = 2 sum_k z_k c_ik,  c_ik = 1/2 (L^(k) x)_i,
///   Lap F = 8 |D x|^2 + 4 S tr D + 2 a sum c_ik^2.
DerivativeBundle quartic_bundle(const Step2Group& g, const Quartic& q, const GroupPoint& p) {
  const int n = g.n();
  const int m = g.m();
  const Vec Dx = q.d.cwiseProduct(p.x);
  const double S = Dx.dot(p.x);
  Mat c(n, m);
  for (int k = 0; k < m; ++k) c.col(k) = 0.5 * (g.lambdas()[k] * p.x);
  DerivativeBundle b;
  b.value = S * S + q.a * p.z.squaredNorm();
  b.grad = 4.0 * S * Dx + 2.0 * q.a * (c * p.z);
  b.laplacian = 8.0 * Dx.squaredNorm() + 4.0 * S * q.d.sum() + 2.0 * q.a * c.squaredNorm();
  return b;
}

/// N = F^{1/4}.
DerivativeBundle quartic_root_bundle(const DerivativeBundle& F) {
  const double N = std::pow(F.value, 0.25);
  const double N3 = N * N * N;
  DerivativeBundle b;
  b.value = N;
  b.grad = F.grad / (4.0 * N3);
  b.laplacian = F.laplacian / (4.0 * N3) - (3.0 / 16.0) * F.grad_norm2() / (N3 * N3 * N);
  return b;
}

/// N~ = (sqrt F + |x|^2)^{1/2}.
DerivativeBundle augmented_bundle(const Step2Group& g, const DerivativeBundle& F, const GroupPoint& p) {
  const double rootF = std::sqrt(F.value);
  DerivativeBundle G;
  G.value = rootF + p.x.squaredNorm();
  if (rootF > 0.0) {
    G.grad = F.grad / (2.0 * rootF) + 2.0 * p.x;
    G.laplacian = F.laplacian / (2.0 * rootF) - F.grad_norm2() / (4.0 * rootF * rootF * rootF) + 2.0 * g.n();
  } else {
    G.grad = 2.0 * p.x;
    G.laplacian = 2.0 * g.n();
  }
  const double Nt = std::sqrt(G.value);
  DerivativeBundle b;
  b.value = Nt;
  b.grad = G.grad / (2.0 * Nt);
  b.laplacian = G.laplacian / (2.0 * Nt) - G.grad_norm2() / (4.0 * G.value * Nt);
  return b;
}

void require_nonzero(const GroupPoint& p) {
  if (p.x.isZero(0.0) && p.z.isZero(0.0)) throw Error(ErrorKind::OriginSingularity, "norm derivatives at the identity");
}

/// Samples on {N = 1}; optionally drops points with |x| below the center guard.
std::vector<GroupPoint> unit_shell(const Step2Group& g, const NormSpec& spec, std::size_t count, std::uint64_t seed,
                                   std::uint64_t stream) {
  if (count == 0) throw Error(ErrorKind::EmptySample, "sample size is zero");
  return sample_level_set(g, spec, count, 1.0, seed, stream);
}

}  // namespace

Zeta Zeta::constant_one() {
  Zeta z;
  z.kind = Kind::Constant;
  return z;
}

Zeta Zeta::root(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvalidParameter, "root exponent must lie in (0, 1]");
  Zeta z;
  z.kind = Kind::Root;
  z.alpha = alpha;
  return z;
}

Zeta Zeta::linear(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidParameter, "linear weight must lie in [0, 1)");
  Zeta z;
  z.kind = Kind::Linear;
  z.alpha = alpha;
  return z;
}

Zeta Zeta::from_table(std::function<OuterJet(double)> fn, std::string label) {
  Zeta z;
  z.kind = Kind::Table;
  z.table = std::move(fn);
  z.label_ = std::move(label);
  return z;
}

OuterJet Zeta::operator()(double s) const {
  switch (kind) {
    case Kind::Constant:
      return {1.0, 0.0, 0.0};
    case Kind::Root: {
      const double v = std::pow(s, alpha);
      return {v, alpha * v / s, alpha * (alpha - 1.0) * v / (s * s)};
    }
    case Kind::Linear:
      return {1.0 - alpha + alpha * s, alpha, 0.0};
    case Kind::Table:
      return table(s);
  }
  return {};
}

std::string Zeta::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Constant:
      return "constant";
    case Kind::Root:
      os << "root(" << alpha << ")";
      return os.str();
    case Kind::Linear:
      os << "linear(" << alpha << ")";
      return os.str();
    case Kind::Table:
      return label_.empty() ? "table" : label_;
  }
  return "?";
}

std::string_view to_string(NormKind kind) {
  switch (kind) {
    case NormKind::TypeTwoSmooth:
      return "type2";
    case NormKind::TypeTwoAugmented:
      return "type2aug";
    case NormKind::KaplanGeneralizedHeisenberg:
      return "kaplan_gh";
    case NormKind::PerspectiveComposite:
      return "perspective";
    case NormKind::GeometricMean:
      return "geomean";
  }
  return "?";
}

NormSpec NormSpec::type_two_smooth(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorKind::InvalidParameter, "type2 coefficient a must be positive");
  NormSpec s;
  s.kind_ = NormKind::TypeTwoSmooth;
  s.a_ = a;
  return s;
}

NormSpec NormSpec::type_two_augmented(double a) {
  NormSpec s = type_two_smooth(a);
  s.kind_ = NormKind::TypeTwoAugmented;
  return s;
}

NormSpec NormSpec::kaplan_gh() {
  NormSpec s;
  s.kind_ = NormKind::KaplanGeneralizedHeisenberg;
  s.a_ = 16.0;
  return s;
}

NormSpec NormSpec::perspective(const NormSpec& base, const NormSpec& other, Zeta zeta) {
  NormSpec s;
  s.kind_ = NormKind::PerspectiveComposite;
  s.zeta_ = std::move(zeta);
  s.alpha_ = s.zeta_.alpha;
  s.base_ = std::make_shared<const NormSpec>(base);
  s.other_ = std::make_shared<const NormSpec>(other);
  return s;
}

NormSpec NormSpec::geometric_mean(const NormSpec& base, const NormSpec& other, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidParameter, "geomean alpha must lie in (0, 1)");
  NormSpec s;
  s.kind_ = NormKind::GeometricMean;
  s.alpha_ = alpha;
  s.zeta_ = Zeta::root(alpha);
  s.base_ = std::make_shared<const NormSpec>(base);
  s.other_ = std::make_shared<const NormSpec>(other);
  return s;
}

const NormSpec& NormSpec::base() const {
  if (!base_) throw Error(ErrorKind::InvalidParameter, "norm has no base component");
  return *base_;
}

const NormSpec& NormSpec::other() const {
  if (!other_) throw Error(ErrorKind::InvalidParameter, "norm has no other component");
  return *other_;
}

bool NormSpec::radial() const {
  switch (kind_) {
    case NormKind::TypeTwoSmooth:
    case NormKind::TypeTwoAugmented:
      return true;
    case NormKind::KaplanGeneralizedHeisenberg:
      return false;
    case NormKind::PerspectiveComposite:
    case NormKind::GeometricMean:
      return base_->radial() && other_->radial();
  }
  return false;
}

std::string NormSpec::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case NormKind::TypeTwoSmooth:
    case NormKind::TypeTwoAugmented:
      os << to_string(kind_) << "(a=" << a_ << ")";
      break;
    case NormKind::KaplanGeneralizedHeisenberg:
      os << "kaplan_gh";
      break;
    case NormKind::PerspectiveComposite:
      os << "perspective(base=" << base_->describe() << ", other=" << other_->describe() << ", zeta=" << zeta_.name()
         << ")";
      break;
    case NormKind::GeometricMean:
      os << "geomean(base=" << base_->describe() << ", other=" << other_->describe() << ", alpha=" << alpha_ << ")";
      break;
  }
  return os.str();
}

void NormSpec::check_group(const Step2Group& g) const {
  switch (kind_) {
    case NormKind::KaplanGeneralizedHeisenberg:
      if (g.kind() != GroupKind::GeneralizedHeisenberg || !g.gh_params()) {
        throw Error(ErrorKind::ValidationError, "kaplan_gh norm requires a generalized_heisenberg group");
      }
      break;
    case NormKind::PerspectiveComposite:
    case NormKind::GeometricMean:
      base_->check_group(g);
      other_->check_group(g);
      break;
    default:
      break;
  }
}

double norm_value(const Step2Group& g, const NormSpec& spec, const GroupPoint& p) {
  g.check_point(p);
  switch (spec.kind()) {
    case NormKind::TypeTwoSmooth:
    case NormKind::KaplanGeneralizedHeisenberg:
      return std::pow(quartic_F(quartic_for(g, spec), p), 0.25);
    case NormKind::TypeTwoAugmented:
      return std::sqrt(std::sqrt(quartic_F(quartic_for(g, spec), p)) + p.x.squaredNorm());
    case NormKind::PerspectiveComposite: {
      const double B = norm_value(g, spec.base(), p);
      if (B == 0.0) return 0.0;
      const double O = norm_value(g, spec.other(), p);
      return B * spec.zeta()(O / B).v;
    }
    case NormKind::GeometricMean: {
      const double B = norm_value(g, spec.base(), p);
      const double O = norm_value(g, spec.other(), p);
      return std::pow(B, 1.0 - spec.alpha()) * std::pow(O, spec.alpha());
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

DerivativeBundle norm_bundle(const Step2Group& g, const NormSpec& spec, const GroupPoint& p) {
  g.check_point(p);
  require_nonzero(p);
  switch (spec.kind()) {
    case NormKind::TypeTwoSmooth:
    case NormKind::KaplanGeneralizedHeisenberg:
      return quartic_root_bundle(quartic_bundle(g, quartic_for(g, spec), p));
    case NormKind::TypeTwoAugmented:
      return augmented_bundle(g, quartic_bundle(g, quartic_for(g, spec), p), p);
    case NormKind::PerspectiveComposite:
    case NormKind::GeometricMean: {
      const DerivativeBundle B = norm_bundle(g, spec.base(), p);
      const DerivativeBundle O = norm_bundle(g, spec.other(), p);
      const double u = O.value / B.value;
      const OuterJet z = spec.zeta()(u);
      DerivativeBundle K;
      K.value = B.value * z.v;
      if (spec.kind() == NormKind::GeometricMean) {
        const double al = spec.alpha();
        K.grad = (1.0 - al) * std::pow(u, al) * B.grad + al * std::pow(1.0 / u, 1.0 - al) * O.grad;
      } else {
        K.grad = (z.v - u * z.d1) * B.grad + z.d1 * O.grad;
      }
      const Vec mixed = O.grad - u * B.grad;
      K.laplacian = (z.v - u * z.d1) * B.laplacian + z.d2 * mixed.squaredNorm() / B.value + z.d1 * O.laplacian;
      return K;
    }
  }
  throw Error(ErrorKind::InvalidParameter, "unknown norm kind");
}

ScalarField norm_field(const Step2Group& g, const NormSpec& spec) {
  ScalarField f;
  f.value = [g, spec](const GroupPoint& p) { return norm_value(g, spec, p); };
  f.bundle = [g, spec](const GroupPoint& p) { return norm_bundle(g, spec, p); };
  f.homogeneity_degree = 1.0;
  return f;
}

double kaplan_residual(const Step2Group& g, const NormSpec& spec, const GroupPoint& p) {
  const DerivativeBundle b = norm_bundle(g, spec, p);
  return b.laplacian - (g.homogeneous_dimension() - 1.0) * b.grad_norm2() / b.value;
}

std::string LemmaConstants::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "index,x_norm,N,grad_ratio,lap_ratio\n";
  for (const auto& s : samples) {
    os << s.index << ',' << s.x_norm << ',' << s.N << ',' << s.grad_ratio << ',' << s.lap_ratio << '\n';
  }
  return os.str();
}

LemmaConstants lemma_constants(const Step2Group& g, const NormSpec& spec, std::size_t sample_size,
                               std::uint64_t seed) {
  if (spec.kind() != NormKind::TypeTwoSmooth) {
    throw Error(ErrorKind::InvalidParameter, "lemma constants are defined for the type2 norm");
  }
  const auto pts = unit_shell(g, spec, sample_size, seed, kLemmaStream);
  std::vector<LemmaSample> rows(pts.size());
  std::vector<char> keep(pts.size(), 0);
  kernels::for_each_index(kernels::default_exec(), pts.size(), [&](std::size_t i) {
    const GroupPoint& p = pts[i];
    const double r = p.x.norm();
    if (r < 1e-6) return;
    const DerivativeBundle b = norm_bundle(g, spec, p);
    LemmaSample s;
    s.index = i;
    s.x_norm = r;
    s.N = b.value;
    const double N2 = b.value * b.value;
    s.grad_ratio = b.grad_norm2() * N2 / (r * r);
    s.lap_ratio = b.laplacian * N2 * b.value / (r * r);
    s.radial_identity_error = std::abs(p.x.dot(b.grad) / r - r * r * r / (N2 * b.value));
    rows[i] = s;
    keep[i] = 1;
  });
  LemmaConstants out;
  out.A_est = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!keep[i]) continue;
    const auto& s = rows[i];
    out.A_est = std::min(out.A_est, s.grad_ratio);
    out.C_est = std::max(out.C_est, s.grad_ratio);
    out.B_est = std::max(out.B_est, std::abs(s.lap_ratio));
    out.max_radial_identity_error = std::max(out.max_radial_identity_error, s.radial_identity_error);
    out.samples.push_back(s);
  }
  if (out.samples.empty()) throw Error(ErrorKind::EmptySample, "no sample point with |x| >= 1e-6");
  return out;
}

double equivalence_constant(const Step2Group& g, const NormSpec& specA, const NormSpec& specB,
                            std::size_t sample_size, std::uint64_t seed) {
  specA.check_group(g);
  specB.check_group(g);
  const auto pts = unit_shell(g, specA, sample_size, seed, kEquivStream);
  std::vector<double> ratio(pts.size());
  kernels::for_each_index(kernels::default_exec(), pts.size(),
                          [&](std::size_t i) { ratio[i] = norm_value(g, specB, pts[i]); });
  double c = 1.0;
  for (double b : ratio) c = std::max({c, b, 1.0 / b});
  return c;
}

double perturbation_gap(const Step2Group& g, const NormSpec& specK, const NormSpec& specK0, std::size_t sample_size,
                        std::uint64_t seed) {
  specK.check_group(g);
  specK0.check_group(g);
  const auto pts = unit_shell(g, specK0, sample_size, seed, kGapStream);
  std::vector<double> gap(pts.size());
  kernels::for_each_index(kernels::default_exec(), pts.size(), [&](std::size_t i) {
    gap[i] = (norm_bundle(g, specK, pts[i]).grad - norm_bundle(g, specK0, pts[i]).grad).norm();
  });
  double sup = 0.0;
  for (double v : gap) sup = std::max(sup, v);
  return sup;
}

double gradient_sup(const Step2Group& g, const NormSpec& spec, std::size_t sample_size, std::uint64_t seed) {
  spec.check_group(g);
  const auto pts = unit_shell(g, spec, sample_size, seed, kSupStream);
  std::vector<double> gn(pts.size());
  kernels::for_each_index(kernels::default_exec(), pts.size(),
                          [&](std::size_t i) { gn[i] = norm_bundle(g, spec, pts[i]).grad.norm(); });
  double sup = 0.0;
  for (double v : gn) sup = std::max(sup, v);
  return sup;
}

double min_radial_derivative(const Step2Group& g, const NormSpec& spec, std::size_t sample_size,
                             std::uint64_t seed) {
  spec.check_group(g);
  const auto pts = unit_shell(g, spec, sample_size, seed, kRadialStream);
  std::vector<double> v(pts.size());
  kernels::for_each_index(kernels::default_exec(), pts.size(),
                          [&](std::size_t i) { v[i] = pts[i].x.dot(norm_bundle(g, spec, pts[i]).grad); });
  double lo = std::numeric_limits<double>::infinity();
  for (double t : v) lo = std::min(lo, t);
  return lo;
}

}  // namespace carnot
