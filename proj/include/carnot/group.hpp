#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace carnot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Coordinates (x, z) of a point of a step-2 group: x horizontal, z central.
struct GroupPoint {
  Vec x;
  Vec z;

  GroupPoint() = default;
  GroupPoint(Vec x_, Vec z_) : x(std::move(x_)), z(std::move(z_)) {}

  /// Concatenated (x, z) in R^{n+m}.
  Vec stacked() const;
  static GroupPoint from_stacked(const Vec& v, int n);
};

/// Parameters of the generalized Heisenberg group on R^{2n+1}: L_j != 0.
struct GeneralizedHeisenbergParams {
  std::vector<double> L;
};

enum class GroupKind { Heisenberg, GeneralizedHeisenberg, Step2 };

/// A step-2 Carnot group with law
///   (x, z) o (x', z') = (x + x', z_j + z'_j + 1/2 <L^(j) x, x'>).
/// Immutable once constructed; all members are pure.
class Step2Group {
 public:
  /// Validates skew-symmetry (1e-12) and linear independence of the L^(j)
  /// (singular values, threshold 1e-10).
  static Step2Group make(int n, int m, std::vector<Mat> lambdas);

  /// n = 2, m = 1, L = [[0, 1], [-1, 0]].
  static Step2Group heisenberg();

  /// Expands the law x_j y_{j+n} - y_j x_{j+n} pairing into a single 2n x 2n
  /// matrix with L_{j+n, j} = 2 L_j and L_{j, j+n} = -2 L_j.
  static Step2Group generalized_heisenberg(const GeneralizedHeisenbergParams& params);

  int n() const noexcept { return n_; }
  int m() const noexcept { return m_; }
  int dim() const noexcept { return n_ + m_; }
  const std::vector<Mat>& lambdas() const noexcept { return lambdas_; }
  GroupKind kind() const noexcept { return kind_; }

  /// L_j values when the group came from generalized_heisenberg().
  const std::optional<GeneralizedHeisenbergParams>& gh_params() const noexcept { return gh_; }

  /// True for n = 2, m = 1 with L^(1) = +-[[0,1],[-1,0]] (orthogonal).
  bool is_heisenberg() const;

  int homogeneous_dimension() const noexcept { return n_ + 2 * m_; }

  GroupPoint identity() const;
  GroupPoint compose(const GroupPoint& p, const GroupPoint& q) const;
  GroupPoint invert(const GroupPoint& p) const;
  GroupPoint dilate(const GroupPoint& p, double lambda) const;

  /// Right translation by the horizontal element (c, 0): the exact flow of
  /// sum_i c_i X_i for unit time.
  GroupPoint translate_horizontal(const GroupPoint& p, const Vec& c) const;

  /// Throws DimensionMismatch (or EvaluationFailure for non-finite entries).
  void check_point(const GroupPoint& p) const;

 private:
  Step2Group(int n, int m, std::vector<Mat> lambdas, GroupKind kind)
      : n_(n), m_(m), lambdas_(std::move(lambdas)), kind_(kind) {}

  int n_;
  int m_;
  std::vector<Mat> lambdas_;
  GroupKind kind_;
  std::optional<GeneralizedHeisenbergParams> gh_;
};

}  // namespace carnot
