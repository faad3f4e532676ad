#include "carnot/group.hpp"

#include "carnot/errors.hpp"

#include <cmath>
#include <string>

namespace carnot {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SkewSymmetryViolation: return "SkewSymmetryViolation";
    case ErrorKind::LinearDependence: return "LinearDependence";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonpositiveScale: return "NonpositiveScale";
    case ErrorKind::EvaluationFailure: return "EvaluationFailure";
    case ErrorKind::OuterSingularity: return "OuterSingularity";
    case ErrorKind::OriginSingularity: return "OriginSingularity";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorKind::NonIntegrable: return "NonIntegrable";
    case ErrorKind::UnknownFamily: return "UnknownFamily";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::InconclusiveTrend: return "InconclusiveTrend";
    case ErrorKind::StartOnSingularSet: return "StartOnSingularSet";
    case ErrorKind::NonfiniteEnergy: return "NonfiniteEnergy";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::MemoryBudgetExceeded: return "MemoryBudgetExceeded";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Error";
}

Vec GroupPoint::stacked() const {
  Vec v(x.size() + z.size());
  v << x, z;
  return v;
}

GroupPoint GroupPoint::from_stacked(const Vec& v, int n) {
  return GroupPoint(v.head(n), v.tail(v.size() - n));
}

Step2Group Step2Group::make(int n, int m, std::vector<Mat> lambdas) {
  if (n <= 0 || m <= 0) {
    throw Error(ErrorKind::DimensionMismatch, "n and m must be positive");
  }
  if (static_cast<int>(lambdas.size()) != m) {
    throw Error(ErrorKind::DimensionMismatch,
                "expected " + std::to_string(m) + " matrices, got " + std::to_string(lambdas.size()));
  }
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    const Mat& L = lambdas[j];
    if (L.rows() != n || L.cols() != n) {
      throw Error(ErrorKind::DimensionMismatch, "Lambda(" + std::to_string(j + 1) + ") is not n x n");
    }
    if (!L.allFinite()) {
      throw Error(ErrorKind::SkewSymmetryViolation, "Lambda(" + std::to_string(j + 1) + ") has non-finite entries");
    }
    const double asym = (L + L.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) {
      throw Error(ErrorKind::SkewSymmetryViolation,
                  "Lambda(" + std::to_string(j + 1) + ") deviates from skew-symmetry by " + std::to_string(asym));
    }
  }
  // Stack vec(L^(j)) as columns; independence <=> smallest singular value > 1e-10.
  Mat stackedCols(n * n, m);
  for (int j = 0; j < m; ++j) {
    stackedCols.col(j) = Eigen::Map<const Vec>(lambdas[j].data(), n * n);
  }
  Eigen::JacobiSVD<Mat> svd(stackedCols);
  const Vec sv = svd.singularValues();
  if (sv.size() < m || sv(m - 1) <= 1e-10) {
    throw Error(ErrorKind::LinearDependence, "Lambda matrices are linearly dependent");
  }
  return Step2Group(n, m, std::move(lambdas), GroupKind::Step2);
}

Step2Group Step2Group::heisenberg() {
  Mat J(2, 2);
  J << 0.0, 1.0, -1.0, 0.0;
  Step2Group g = make(2, 1, {J});
  g.kind_ = GroupKind::Heisenberg;
  return g;
}

Step2Group Step2Group::generalized_heisenberg(const GeneralizedHeisenbergParams& params) {
  const int pairs = static_cast<int>(params.L.size());
  if (pairs == 0) throw Error(ErrorKind::DimensionMismatch, "generalized Heisenberg needs at least one L_j");
  Mat lam = Mat::Zero(2 * pairs, 2 * pairs);
  for (int j = 0; j < pairs; ++j) {
    const double Lj = params.L[j];
    if (Lj == 0.0 || !std::isfinite(Lj)) {
      throw Error(ErrorKind::InvalidParameter, "L_" + std::to_string(j + 1) + " must be a nonzero real");
    }
    lam(j + pairs, j) = 2.0 * Lj;
    lam(j, j + pairs) = -2.0 * Lj;
  }
  Step2Group g = make(2 * pairs, 1, {lam});
  g.kind_ = GroupKind::GeneralizedHeisenberg;
  g.gh_ = params;
  return g;
}

bool Step2Group::is_heisenberg() const {
  if (n_ != 2 || m_ != 1) return false;
  const Mat& L = lambdas_[0];
  return std::abs(std::abs(L(0, 1)) - 1.0) < 1e-12 && L(0, 0) == 0.0 && L(1, 1) == 0.0;
}

GroupPoint Step2Group::identity() const { return GroupPoint(Vec::Zero(n_), Vec::Zero(m_)); }

void Step2Group::check_point(const GroupPoint& p) const {
  if (p.x.size() != n_ || p.z.size() != m_) {
    throw Error(ErrorKind::DimensionMismatch,
                "point has dims (" + std::to_string(p.x.size()) + ", " + std::to_string(p.z.size()) +
                    "), group has (" + std::to_string(n_) + ", " + std::to_string(m_) + ")");
  }
  if (!p.x.allFinite() || !p.z.allFinite()) throw Error(ErrorKind::EvaluationFailure, "point has non-finite coordinates");
}

GroupPoint Step2Group::compose(const GroupPoint& p, const GroupPoint& q) const {
  check_point(p);
  check_point(q);
  GroupPoint r(p.x + q.x, p.z + q.z);
  for (int j = 0; j < m_; ++j) {
    r.z(j) += 0.5 * (lambdas_[j] * p.x).dot(q.x);
  }
  return r;
}

GroupPoint Step2Group::invert(const GroupPoint& p) const {
  check_point(p);
  return GroupPoint(-p.x, -p.z);
}

GroupPoint Step2Group::dilate(const GroupPoint& p, double lambda) const {
  check_point(p);
  if (!(lambda > 0.0)) throw Error(ErrorKind::NonpositiveScale, "dilation factor must be positive");
  return GroupPoint(lambda * p.x, (lambda * lambda) * p.z);
}

GroupPoint Step2Group::translate_horizontal(const GroupPoint& p, const Vec& c) const {
  GroupPoint r(p.x + c, p.z);
  for (int j = 0; j < m_; ++j) {
    r.z(j) += 0.5 * (lambdas_[j] * p.x).dot(c);
  }
  return r;
}

}  // namespace carnot
