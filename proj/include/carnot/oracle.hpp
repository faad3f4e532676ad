#pragma once

#include "carnot/taming.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace carnot {

/// One (taming x norm x V) combination of the finite-difference check matrix.
struct V2Cell {
  std::string label;
  EnergyModel model;
};

/// 20 cells: five tamings x {type2 a=16 on Heisenberg, Kaplan norm on a
/// generalized Heisenberg group} x {Power(2), Power(8)}.
std::vector<V2Cell> standard_v2_cells();

/// Relative error of an FD value of V2 against the closed form, measured
/// against the size of the terms that cancel in 1/4|grad U|^2 - 1/2 Lap U.
double v2_relative_error(const DerivativeBundle& U, double v2_fd);

/// Points with 0.2 <= N <= 10 and |x| >= 0.1, drawn on random level sets;
/// for MultiplicativeII, points within 0.05 of the seam |x| = 1 are redrawn.
std::vector<GroupPoint> oracle_points(const EnergyModel& model, std::size_t count, std::uint64_t seed);

/// FD step at p: the default step, capped at 1e-3 |x| so the stencil
/// stays well inside the smooth region of singular tamings.
double oracle_step(const GroupPoint& p);

struct V2CheckRow {
  std::string cell;
  std::size_t point = 0;
  double h = 0.0;
  double closed = 0.0;
  double fd = 0.0;
  double rel_error = 0.0;
};

struct V2CellSummary {
  std::string cell;
  std::size_t points = 0;
  double max_rel_error = 0.0;
  /// Error ratios e(h)/e(h/2) at three points per cell, taken on the triple of
  /// consecutive steps in the asymptotic range (the one with the most consistent ratios).
  std::vector<double> halving_factors;
};

struct V2CheckReport {
  std::vector<V2CellSummary> cells;
  std::vector<V2CheckRow> rows;
  double max_rel_error = 0.0;
  double min_halving = 0.0;
  double max_halving = 0.0;

  std::string to_csv() const;
};

/// Runs the matrix; rows are kept only when keep_rows is set.
V2CheckReport run_v2_check(const std::vector<V2Cell>& cells, std::size_t points_per_cell, std::uint64_t seed,
                           bool keep_rows = false);

}  // namespace carnot
