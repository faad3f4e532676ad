#include "carnot/spectrum.hpp"

#include "carnot/errors.hpp"
#include "carnot/kernels.hpp"
#include "carnot/sampling.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace carnot {

namespace {

constexpr std::uint64_t kLanczosStream = 0x4c414e43ULL;

struct Layout {
  std::vector<int> dims;
  std::vector<double> w;
  std::vector<double> h;
  std::vector<std::size_t> stride;
  std::size_t total = 1;

  Layout(std::vector<double> half_widths, std::vector<int> grid) : dims(std::move(grid)), w(std::move(half_widths)) {
    stride.resize(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
      h.push_back(2.0 * w[k] / (dims[k] + 1));
      stride[k] = total;
      total *= static_cast<std::size_t>(dims[k]);
    }
  }

  double coord(std::size_t axis, long j) const { return -w[axis] + (static_cast<double>(j) + 1.0) * h[axis]; }

  std::vector<long> unravel(std::size_t index) const {
    std::vector<long> j(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
      j[k] = static_cast<long>(index % static_cast<std::size_t>(dims[k]));
      index /= static_cast<std::size_t>(dims[k]);
    }
    return j;
  }

  bool inside(std::size_t axis, long j) const { return j >= 0 && j < dims[axis]; }
};

using Triplet = Eigen::Triplet<double, long>;

/// Appends the rows of D+_i (sign = +1) or D-_i (sign = -1) scaled by `scale`.
/// Rows are indexed by base nodes whose axis-i index runs over the interior
/// plus one ghost layer on the side the flow enters from.
void difference_rows(const Layout& L, int n, int m, const std::vector<Mat>& lambdas, int i, int sign, double scale,
                     long& row, std::vector<Triplet>& out) {
  const double h = L.h[static_cast<std::size_t>(i)];
  const std::size_t dim = L.dims.size();
  // Iterate over all interior nodes with axis i replaced by the extended index range.
  const long Ni = L.dims[static_cast<std::size_t>(i)];
  const long lo = sign > 0 ? -1 : 0;
  const long hi = sign > 0 ? Ni - 1 : Ni;
  const std::size_t others = L.total / static_cast<std::size_t>(Ni);
  Vec x(n);
  std::vector<long> jq(dim);
  for (std::size_t o = 0; o < others; ++o) {
    // Unravel o over the axes other than i.
    std::vector<long> j(dim);
    std::size_t rem = o;
    for (std::size_t k = 0; k < dim; ++k) {
      if (static_cast<int>(k) == i) continue;
      j[k] = static_cast<long>(rem % static_cast<std::size_t>(L.dims[k]));
      rem /= static_cast<std::size_t>(L.dims[k]);
    }
    for (long ji = lo; ji <= hi; ++ji, ++row) {
      j[static_cast<std::size_t>(i)] = ji;
      if (L.inside(static_cast<std::size_t>(i), ji)) {
        std::size_t p = 0;
        for (std::size_t k = 0; k < dim; ++k) p += static_cast<std::size_t>(j[k]) * L.stride[k];
        out.emplace_back(row, static_cast<long>(p), -scale / h);
      }
      const long jqi = ji + sign;
      if (!L.inside(static_cast<std::size_t>(i), jqi)) continue;
      for (int a = 0; a < n; ++a) x(a) = L.coord(static_cast<std::size_t>(a), j[static_cast<std::size_t>(a)]);
      // Center shift of p o (sign h e_i, 0), read by 4-point Lagrange interpolation
      // per center axis. Linear interpolation would leave an O(h_z^2/h^2) = O(1)
      // artificial z-diffusion under refinement at fixed aspect ratio.
      std::vector<long> base(static_cast<std::size_t>(m));
      std::vector<std::array<double, 4>> lw(static_cast<std::size_t>(m));
      for (int c = 0; c < m; ++c) {
        const std::size_t axis = static_cast<std::size_t>(n + c);
        const double zq = L.coord(axis, j[axis]) + sign * 0.5 * h * (lambdas[static_cast<std::size_t>(c)] * x)(i);
        const double u = (zq + L.w[axis]) / L.h[axis] - 1.0;
        const double fl = std::floor(u);
        const double t = u - fl;
        base[static_cast<std::size_t>(c)] = static_cast<long>(fl) - 1;
        lw[static_cast<std::size_t>(c)] = {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                                           -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
      }
      int stencil = 1;
      for (int c = 0; c < m; ++c) stencil *= 4;
      for (int corner = 0; corner < stencil; ++corner) {
        double weight = 1.0;
        bool ok = true;
        jq = j;
        jq[static_cast<std::size_t>(i)] = jqi;
        int code = corner;
        for (int c = 0; c < m; ++c, code /= 4) {
          const std::size_t axis = static_cast<std::size_t>(n + c);
          const int off = code % 4;
          weight *= lw[static_cast<std::size_t>(c)][static_cast<std::size_t>(off)];
          jq[axis] = base[static_cast<std::size_t>(c)] + off;
          if (!L.inside(axis, jq[axis])) ok = false;
        }
        if (!ok || weight == 0.0) continue;
        std::size_t q = 0;
        for (std::size_t k = 0; k < dim; ++k) q += static_cast<std::size_t>(jq[k]) * L.stride[k];
        out.emplace_back(row, static_cast<long>(q), scale * weight / h);
      }
    }
  }
}

GridOperator assemble(int n, int m, const std::vector<Mat>& lambdas, const std::vector<double>& widths,
                      const std::vector<int>& grid, const std::function<double(const Vec&)>& V, double clamp,
                      double budget_mb) {
  const Layout L(widths, grid);
  const std::size_t N = L.total;
  std::size_t corners = 1;
  for (int c = 0; c < m; ++c) corners *= 4;
  // Rows of the stacked differences, H nonzeros and the Cholesky fill, all rough upper estimates.
  const double rows = 2.0 * n * static_cast<double>(N) * 1.1;
  const double h_nnz = static_cast<double>(N) * 2.0 * n * static_cast<double>((1 + corners) * (1 + corners));
  const double mb = (rows * static_cast<double>(1 + corners) * 16.0 + h_nnz * 12.0 * 20.0) / 1e6;
  if (mb > budget_mb) {
    throw Error(ErrorKind::MemoryBudgetExceeded,
                "estimated " + std::to_string(static_cast<long>(mb)) + " MB exceeds the budget");
  }

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(rows) * (1 + corners));
  long row = 0;
  const double s = std::sqrt(0.5);
  for (int i = 0; i < n; ++i) {
    difference_rows(L, n, m, lambdas, i, +1, s, row, trip);
    difference_rows(L, n, m, lambdas, i, -1, s, row, trip);
  }
  Eigen::SparseMatrix<double, Eigen::ColMajor, long> A(row, static_cast<long>(N));
  A.setFromTriplets(trip.begin(), trip.end());
  trip.clear();
  trip.shrink_to_fit();
  Eigen::SparseMatrix<double, Eigen::ColMajor, long> K = (A.transpose() * A).pruned();

  GridOperator op;
  op.dims = L.dims;
  op.half_widths = L.w;
  op.spacing = L.h;
  op.potential = Eigen::VectorXd::Zero(static_cast<long>(N));
  if (V) {
    for (std::size_t idx = 0; idx < N; ++idx) {
      const auto j = L.unravel(idx);
      Vec c(static_cast<long>(j.size()));
      for (std::size_t k = 0; k < j.size(); ++k) c(static_cast<long>(k)) = L.coord(k, j[k]);
      double v = V(c);
      if (std::isnan(v)) v = clamp;
      if (v > clamp || v < -clamp) {
        ++op.clamp_events;
        v = std::clamp(v, -clamp, clamp);
      }
      op.potential(static_cast<long>(idx)) = v;
      op.max_negative = std::max(op.max_negative, -v);
    }
  }
  SparseMat H = K.cast<double>();
  for (long idx = 0; idx < static_cast<long>(N); ++idx) H.coeffRef(idx, idx) += op.potential(idx);
  // Exact symmetry: (a + b)/2 is computed identically for both triangles.
  SparseMat Ht = H.transpose();
  op.H = 0.5 * (H + Ht);
  op.H.makeCompressed();
  return op;
}

}  // namespace

SpectrumConfig SpectrumConfig::weighted(const EnergyModel& model, double w, int nodes) {
  if (!(w > 0.0)) throw Error(ErrorKind::InvalidParameter, "box half-width must be positive");
  const double a = model.norm.kind() == NormKind::KaplanGeneralizedHeisenberg ? 16.0 : model.norm.a();
  SpectrumConfig cfg;
  for (int i = 0; i < model.group.n(); ++i) cfg.half_widths.push_back(w);
  for (int j = 0; j < model.group.m(); ++j) cfg.half_widths.push_back(w * w / std::sqrt(a));
  cfg.grid.assign(static_cast<std::size_t>(model.group.dim()), nodes);
  return cfg;
}

void SpectrumConfig::validate(int dim) const {
  if (static_cast<int>(half_widths.size()) != dim || static_cast<int>(grid.size()) != dim) {
    throw Error(ErrorKind::DimensionMismatch, "spectrum box needs one half-width and one grid size per coordinate");
  }
  for (int g : grid) {
    if (g < 8) throw Error(ErrorKind::GridTooCoarse, "grid sizes must be at least 8");
  }
  for (double w : half_widths) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorKind::InvalidParameter, "half-widths must be positive");
  }
  if (k < 2) throw Error(ErrorKind::InvalidParameter, "need at least 2 eigenvalues");
  if (!(tol > 0.0) || !(clamp > 0.0) || max_iter < k) throw Error(ErrorKind::InvalidParameter, "bad solver settings");
}

Vec GridOperator::node(std::size_t index) const {
  const Layout L(half_widths, dims);
  const auto j = L.unravel(index);
  Vec c(static_cast<long>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) c(static_cast<long>(k)) = L.coord(k, j[k]);
  return c;
}

GridOperator assemble_hamiltonian(const EnergyModel& model, const SpectrumConfig& cfg) {
  model.validate();
  const Step2Group& g = model.group;
  cfg.validate(g.dim());
  for (int i = 0; i < g.n(); ++i) {
    // Even x counts keep every node off the planes x_i = 0, hence off the singular center.
    if (cfg.grid[static_cast<std::size_t>(i)] % 2 != 0) {
      throw Error(ErrorKind::InvalidParameter, "horizontal grid sizes must be even");
    }
  }
  const int n = g.n();
  const auto V = [&](const Vec& c) {
    const GroupPoint p(c.head(n), c.tail(g.m()));
    try {
      return v2_closed(model, p);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  return assemble(n, g.m(), g.lambdas(), cfg.half_widths, cfg.grid, V, cfg.clamp, cfg.memory_budget_mb);
}

GridOperator assemble_flat_hamiltonian(const std::vector<double>& half_widths, const std::vector<int>& grid,
                                       const std::function<double(const Vec&)>& V, double clamp) {
  if (half_widths.size() != grid.size() || grid.empty()) {
    throw Error(ErrorKind::DimensionMismatch, "one half-width and one grid size per coordinate");
  }
  for (int g : grid) {
    if (g < 8) throw Error(ErrorKind::GridTooCoarse, "grid sizes must be at least 8");
  }
  return assemble(static_cast<int>(grid.size()), 0, {}, half_widths, grid, V, clamp, 1e9);
}

double rayleigh_quotient(const SparseMat& H, const Eigen::VectorXd& u) {
  const double uu = u.squaredNorm();
  if (uu == 0.0) throw Error(ErrorKind::EmptySample, "Rayleigh quotient of the zero vector");
  return u.dot(H * u) / uu;
}

SpectrumResult bottom_spectrum(const SparseMat& H, double potential_min, int k, double tol, int max_iter,
                               std::uint64_t seed) {
  const long n = H.rows();
  if (H.rows() != H.cols()) throw Error(ErrorKind::DimensionMismatch, "H must be square");
  if (k < 1 || k > n) throw Error(ErrorKind::InvalidParameter, "k out of range");
  max_iter = static_cast<int>(std::min<long>(max_iter, n));

  // The kinetic part is positive semidefinite, so H - shift >= I.
  SpectrumResult res;
  res.shift = potential_min - 1.0;
  SparseMat S = H;
  for (long i = 0; i < n; ++i) S.coeffRef(i, i) -= res.shift;
  Eigen::CholmodSupernodalLLT<SparseMat, Eigen::Lower> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "Cholesky factorization of H - shift failed");

  const kernels::RowSparse Hr(H);
  Rng rng = substream(seed, kLanczosStream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto random_unit = [&]() {
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v(i) = gauss(rng);
    return Eigen::VectorXd(v / v.norm());
  };

  // One Lanczos run on (H - shift)^{-1} restricted to the complement of the locked
  // vectors, returning the `want` lowest converged Ritz pairs.
  std::vector<Eigen::VectorXd> locked;
  std::vector<double> locked_values, locked_residuals;
  int total_iterations = 0;
  const auto run = [&](int want) {
    std::vector<Eigen::VectorXd> Q;
    std::vector<double> alpha, beta;
    const auto orthogonalize = [&](Eigen::VectorXd& w) {
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& y : locked) w -= y.dot(w) * y;
        for (const auto& q : Q) w -= q.dot(w) * q;
      }
    };
    Eigen::VectorXd start = random_unit();
    orthogonalize(start);
    Q.push_back(start / start.norm());
    const long limit = std::min<long>(max_iter, n - static_cast<long>(locked.size()));
    for (long j = 0; j < limit; ++j) {
      Eigen::VectorXd w = llt.solve(Q.back());
      alpha.push_back(Q.back().dot(w));
      orthogonalize(w);
      const double b = w.norm();
      const long m = j + 1;
      ++total_iterations;
      if (m >= want && (m % 5 == 0 || m == limit || b < 1e-12)) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (long i = 0; i < m; ++i) {
          T(i, i) = alpha[static_cast<std::size_t>(i)];
          if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        std::vector<Eigen::VectorXd> ys;
        std::vector<double> lam, resid;
        for (int i = 0; i < want; ++i) {
          // Largest mu of the inverse are the smallest lambda = shift + 1/mu.
          const long col = m - 1 - i;
          Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
          for (long r = 0; r < m; ++r) y += es.eigenvectors()(r, col) * Q[static_cast<std::size_t>(r)];
          y /= y.norm();
          const double l = res.shift + 1.0 / es.eigenvalues()(col);
          Eigen::VectorXd Hy(n);
          kernels::spmv(kernels::default_exec(), Hr, y, Hy);
          const double rn = (Hy - l * y).norm();
          if (!(rn <= tol)) break;
          ys.push_back(std::move(y));
          lam.push_back(l);
          resid.push_back(rn);
        }
        if (static_cast<int>(lam.size()) == want) {
          for (int i = 0; i < want; ++i) {
            locked.push_back(std::move(ys[static_cast<std::size_t>(i)]));
            locked_values.push_back(lam[static_cast<std::size_t>(i)]);
            locked_residuals.push_back(resid[static_cast<std::size_t>(i)]);
          }
          return;
        }
      }
      if (b < 1e-12) break;
      Q.push_back(w / b);
      beta.push_back(b);
    }
    throw Error(ErrorKind::NoConvergence, "Lanczos did not converge in " + std::to_string(max_iter) + " iterations");
  };

  // A single Krylov sequence can miss one copy of a degenerate eigenvalue, and the
  // x-plane symmetries make such pairs common. So after the first k pairs, the
  // lowest pair of the complement is locked too, until it lies above the k-th value.
  run(k);
  const auto kth = [&]() {
    std::vector<double> v = locked_values;
    std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
    return v[static_cast<std::size_t>(k - 1)];
  };
  while (static_cast<long>(locked.size()) < n) {
    const double bound = kth();
    run(1);
    if (locked_values.back() >= bound - 10.0 * tol) break;
  }
  std::vector<std::size_t> order(locked_values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t c) { return locked_values[a] < locked_values[c]; });
  for (int i = 0; i < k; ++i) {
    res.eigenvalues.push_back(locked_values[order[static_cast<std::size_t>(i)]]);
    res.residuals.push_back(locked_residuals[order[static_cast<std::size_t>(i)]]);
  }
  res.iterations = total_iterations;
  return res;
}

Eigen::VectorXd ground_state_vector(const EnergyModel& model, const GridOperator& op) {
  const int n = model.group.n();
  const int m = model.group.m();
  Eigen::VectorXd U(static_cast<long>(op.nodes()));
  double umin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < op.nodes(); ++i) {
    const Vec c = op.node(i);
    const double u = energy_value(model, GroupPoint(c.head(n), c.tail(m)));
    U(static_cast<long>(i)) = u;
    if (std::isfinite(u)) umin = std::min(umin, u);
  }
  Eigen::VectorXd g(U.size());
  for (long i = 0; i < U.size(); ++i) g(i) = std::isfinite(U(i)) ? std::exp(-0.5 * (U(i) - umin)) : 0.0;
  return g;
}

SpectrumResult compute_spectrum(const EnergyModel& model, const SpectrumConfig& cfg) {
  const GridOperator op = assemble_hamiltonian(model, cfg);
  SpectrumResult res = bottom_spectrum(op.H, op.potential.minCoeff(), cfg.k, cfg.tol, cfg.max_iter, cfg.seed);
  res.ground_state_rq = rayleigh_quotient(op.H, ground_state_vector(model, op));
  res.dims = op.dims;
  res.half_widths = op.half_widths;
  res.nnz = static_cast<std::size_t>(op.H.nonZeros());
  res.clamp_events = op.clamp_events;
  res.max_negative = op.max_negative;
  return res;
}

void dump_triplets(const SparseMat& H, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::EvaluationFailure, "cannot open " + path + " for writing");
  os.precision(17);
  for (int c = 0; c < H.outerSize(); ++c) {
    for (SparseMat::InnerIterator it(H, c); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  }
}

}  // namespace carnot
