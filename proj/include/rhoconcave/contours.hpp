#pragma once

#include <span>
#include <vector>

#include "rhoconcave/estimator.hpp"
#include "rhoconcave/mesh.hpp"

namespace rhoconcave {

struct Polyline {
  double level = 0.0;
  bool closed = false;  ///< first point repeated as the last when closed
  std::vector<Point2> points;
};

/// Marching squares on node values of a regular grid; −∞ counts as below
/// every level. Saddle cells are split by the cell-center average.
std::vector<Polyline> contour_lines(const Grid2D& grid, std::span<const double> values, double level);

/// One pass per level, in the order given.
std::vector<Polyline> contour_lines(const Grid2D& grid, std::span<const double> values,
                                    std::span<const double> levels);

/// Contours of log f̂ at the grid nodes of a 2D estimate.
std::vector<Polyline> log_density_contours(const DensityEstimate& est, std::span<const double> levels);

}  // namespace rhoconcave
