#include "carnot/oracle.hpp"

#include "carnot/errors.hpp"
#include "carnot/kernels.hpp"
#include "carnot/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace carnot {

namespace {
constexpr std::uint64_t kOracleStream = 0x4f524143ULL;
}

std::vector<V2Cell> standard_v2_cells() {
  const auto H = Step2Group::heisenberg();
  const auto GH = Step2Group::generalized_heisenberg({{1.0, 1.0}});
  const std::vector<std::pair<std::string, TamingSpec>> tamings = {
      {"none", TamingSpec::none()},
      {"additive_power", TamingSpec::additive_power(1.0, 1.0)},
      {"additive_log", TamingSpec::additive_log(1.0)},
      {"mult_power", TamingSpec::mult_power(2.0)},
      {"mult2", TamingSpec::mult2(0.5, 0.5)},
  };
  std::vector<V2Cell> cells;
  for (const auto& [tname, taming] : tamings) {
    for (double p : {2.0, 8.0}) {
      std::ostringstream a;
      a << tname << "/type2(a=16)/power(" << p << ")";
      cells.push_back({a.str(), {H, NormSpec::type_two_smooth(16.0), taming, OuterFunction::power(p)}});
      std::ostringstream b;
      b << tname << "/kaplan_gh/power(" << p << ")";
      cells.push_back({b.str(), {GH, NormSpec::kaplan_gh(), taming, OuterFunction::power(p)}});
    }
  }
  return cells;
}

double v2_relative_error(const DerivativeBundle& U, double v2_fd) {
  const double v2 = v2_from_bundle(U);
  const double scale = std::max({std::abs(v2), 0.25 * U.grad_norm2() + 0.5 * std::abs(U.laplacian), 1e-300});
  return std::abs(v2_fd - v2) / scale;
}

double oracle_step(const GroupPoint& p) { return std::min(default_fd_step(p), 1e-3 * p.x.norm()); }

std::vector<GroupPoint> oracle_points(const EnergyModel& model, std::size_t count, std::uint64_t seed) {
  Rng rng = substream(seed, kOracleStream);
  std::uniform_real_distribution<double> level(0.2, 10.0);
  std::vector<GroupPoint> out;
  out.reserve(count);
  while (out.size() < count) {
    const Vec d = random_direction(rng, model.group.dim());
    const GroupPoint p = onto_level_set(model.group, model.norm, d, level(rng));
    const double r = p.x.norm();
    if (r < 0.1) continue;
    if (model.taming.kind == TamingKind::MultiplicativeII && std::abs(r - 1.0) < 0.05) continue;
    out.push_back(p);
  }
  return out;
}

V2CheckReport run_v2_check(const std::vector<V2Cell>& cells, std::size_t points_per_cell, std::uint64_t seed,
                           bool keep_rows) {
  if (points_per_cell == 0) throw Error(ErrorKind::EmptySample, "no oracle points requested");
  V2CheckReport report;
  report.min_halving = std::numeric_limits<double>::infinity();
  report.max_halving = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    const auto pts = oracle_points(cell.model, points_per_cell, seed + c);
    std::vector<V2CheckRow> rows(pts.size());
    kernels::for_each_index(kernels::default_exec(), pts.size(), [&](std::size_t i) {
      const DerivativeBundle U = energy_bundle(cell.model, pts[i]);
      const double h = oracle_step(pts[i]);
      const double fd = v2_fd_oracle(cell.model, pts[i], h);
      rows[i] = {cell.label, i, h, v2_from_bundle(U), fd, v2_relative_error(U, fd)};
    });
    V2CellSummary s;
    s.cell = cell.label;
    s.points = pts.size();
    for (const auto& r : rows) s.max_rel_error = std::max(s.max_rel_error, r.rel_error);

    // Convergence order from the first three points. Large steps are
    // pre-asymptotic near the singular factors and small ones hit rounding, at
    // a point-dependent scale, so each point walks a ladder of halvings and
    // reports the triple (4h, 2h, h) whose two ratios agree best. A first-order
    // error would settle at 2 and a wrong closed form at 1.
    for (std::size_t i = 0; i < std::min<std::size_t>(3, pts.size()); ++i) {
      const DerivativeBundle U = energy_bundle(cell.model, pts[i]);
      const double top = 0.08 * std::min(1.0, pts[i].x.norm());
      constexpr int kRungs = 9;
      double e[kRungs];
      for (int k = 0; k < kRungs; ++k) {
        e[k] = v2_relative_error(U, v2_fd_oracle(cell.model, pts[i], std::ldexp(top, -k)));
      }
      int best = 0;
      double best_spread = std::numeric_limits<double>::infinity();
      for (int k = 0; k + 2 < kRungs; ++k) {
        const double spread = std::abs(std::log((e[k] / e[k + 1]) / (e[k + 1] / e[k + 2])));
        if (spread < best_spread) {
          best_spread = spread;
          best = k;
        }
      }
      s.halving_factors.push_back(e[best] / e[best + 1]);
      s.halving_factors.push_back(e[best + 1] / e[best + 2]);
      if (keep_rows) {
        for (int k = best; k < best + 3; ++k) {
          report.rows.push_back({cell.label, i, std::ldexp(top, -k), v2_from_bundle(U), 0.0, e[k]});
        }
      }
    }
    for (double f : s.halving_factors) {
      report.min_halving = std::min(report.min_halving, f);
      report.max_halving = std::max(report.max_halving, f);
    }
    report.max_rel_error = std::max(report.max_rel_error, s.max_rel_error);
    if (keep_rows) report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    report.cells.push_back(std::move(s));
  }
  return report;
}

std::string V2CheckReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "family,point,h,error\n";
  for (const auto& r : rows) os << r.cell << ',' << r.point << ',' << r.h << ',' << r.rel_error << '\n';
  return os.str();
}

}  // namespace carnot
