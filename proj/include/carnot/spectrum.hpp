#pragma once

#include "carnot/taming.hpp"

#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace carnot {

using SparseMat = Eigen::SparseMatrix<double>;

struct SpectrumConfig {
  /// Half-widths per coordinate, x first then z.
  std::vector<double> half_widths;
  /// Interior nodes per coordinate; node j sits at -w + (j + 1) h with h = 2w/(N + 1).
  std::vector<int> grid;
  int k = 5;
  double tol = 1e-6;
  double clamp = 1e6;
  int max_iter = 300;
  std::uint64_t seed = 0;
  double memory_budget_mb = 4096.0;

  /// Box [-w, w]^n x [-w^2/sqrt(a), w^2/sqrt(a)]^m with `nodes` per axis; the z
  /// extent follows the dilation weights. a is the norm parameter (16 for Kaplan).
  static SpectrumConfig weighted(const EnergyModel& model, double w, int nodes);

  void validate(int dim) const;
};

struct GridOperator {
  SparseMat H;
  std::vector<int> dims;
  std::vector<double> half_widths;
  std::vector<double> spacing;
  /// Potential on the nodes after clamping.
  Eigen::VectorXd potential;
  std::size_t clamp_events = 0;
  /// Largest negative part of the clamped potential.
  double max_negative = 0.0;

  std::size_t nodes() const { return static_cast<std::size_t>(H.rows()); }
  /// Coordinates of node `index` (x first then z).
  Vec node(std::size_t index) const;
};

/// H = 1/2 sum_i (D+_i^T D+_i + D-_i^T D-_i) + diag(V2), where D+-_i f(p) = +-(f(p o (+-h e_i, 0)) - f(p))/h
/// follows the exact flow of X_i; the center coordinates of p o (+-h e_i, 0) are
/// off-grid and read by 4-point Lagrange interpolation. Difference rows also start
/// at the ghost layer, so the exterior is Dirichlet. V2 is clamped to [-clamp, clamp]
/// (+inf on the singular set counts as +clamp). H is symmetrized exactly.
GridOperator assemble_hamiltonian(const EnergyModel& model, const SpectrumConfig& cfg);

/// The same scheme on the abelian R^d (no center coupling) with potential V.
GridOperator assemble_flat_hamiltonian(const std::vector<double>& half_widths, const std::vector<int>& grid,
                                       const std::function<double(const Vec&)>& V = {}, double clamp = 1e6);

struct SpectrumResult {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  double shift = 0.0;
  int iterations = 0;
  /// Rayleigh quotient of the grid samples of e^{-U/2}; NaN when not requested.
  double ground_state_rq = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> dims;
  std::vector<double> half_widths;
  std::size_t nnz = 0;
  std::size_t clamp_events = 0;
  double max_negative = 0.0;
};

/// k smallest eigenvalues by Lanczos with full reorthogonalization on the
/// shift-inverted operator (H - shift)^{-1}, shift below min(diag potential),
/// factorized once by supernodal Cholesky, with converged pairs locked and the
/// complement probed for missed multiplicities. Converged when every Ritz pair has
/// ||H v - lambda v|| <= tol ||v||. Throws NoConvergence at max_iter.
SpectrumResult bottom_spectrum(const SparseMat& H, double potential_min, int k, double tol, int max_iter,
                               std::uint64_t seed);

/// u^T H u / u^T u.
double rayleigh_quotient(const SparseMat& H, const Eigen::VectorXd& u);

/// e^{-(U - min U)/2} on the nodes (0 on the singular set).
Eigen::VectorXd ground_state_vector(const EnergyModel& model, const GridOperator& op);

/// assemble_hamiltonian + bottom_spectrum + the ground-state Rayleigh quotient.
SpectrumResult compute_spectrum(const EnergyModel& model, const SpectrumConfig& cfg);

/// "row col value" lines, 0-based, upper and lower triangles.
void dump_triplets(const SparseMat& H, const std::string& path);

}  // namespace carnot
