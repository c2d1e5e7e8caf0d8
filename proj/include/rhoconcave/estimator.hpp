#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rhoconcave/entropy.hpp"
#include "rhoconcave/mesh.hpp"
#include "rhoconcave/solver.hpp"

namespace rhoconcave {

struct FitOptions {
  SolverOptions solver;
  /// 1D node count; 0 selects default_grid_size_1d.
  std::size_t grid_1d = 0;
  std::size_t grid_x = 40;
  std::size_t grid_y = 40;
  /// Fraction of the bounding-box width added on each side in 2D.
  double margin = 0.1;
};

struct Diagnostics {
  double gap = 0.0;
  double relative_gap = 0.0;
  double normalization = 0.0;        ///< sᵀφ
  double normalization_error = 0.0;  ///< |sᵀφ − 1|
  double mean_match_error = 0.0;     ///< max over coordinates of |Σ sφξ − sample mean|
  double min_cone_residual = 0.0;
  double min_phi = 0.0;
  /// Mass Σ sφ at nodes outside the convex hull of the data; NaN in 1D.
  double off_hull_mass = std::numeric_limits<double>::quiet_NaN();
  double kkt_residual = 0.0;
  double fidelity = 0.0;  ///< wᵀLγ
  int iterations = 0;
  SolverStatus status = SolverStatus::kMaxIters;
  std::string message;
};

using Grid = std::variant<Grid1D, Grid2D>;

/// Fitted grid values and their diagnostics. Immutable; evaluation is pure.
class DensityEstimate {
 public:
  DensityEstimate(Sample sample, Grid grid, EntropySpec entropy, std::vector<double> gamma, std::vector<double> phi,
                  std::vector<double> eta, Diagnostics diagnostics);

  int dim() const { return sample_.dim(); }
  double alpha() const { return entropy_.alpha(); }
  const EntropySpec& entropy() const { return entropy_; }
  const Sample& sample() const { return sample_; }
  const Grid& grid() const { return grid_; }
  /// Throws std::logic_error when the estimate has the other dimension.
  const Grid1D& grid_1d() const;
  const Grid2D& grid_2d() const;
  std::span<const double> weights() const;
  std::span<const double> gamma() const { return gamma_; }
  std::span<const double> phi() const { return phi_; }
  std::span<const double> eta() const { return eta_; }
  const Diagnostics& diagnostics() const { return diagnostics_; }

 private:
  Sample sample_;
  Grid grid_;
  EntropySpec entropy_;
  std::vector<double> gamma_;
  std::vector<double> phi_;
  std::vector<double> eta_;
  Diagnostics diagnostics_;
};

/// Builds the grid for the sample's dimension, assembles, solves and wraps.
/// Throws DegenerateSampleError when the data hull has empty interior.
DensityEstimate fit(const Sample& sample, double alpha, const FitOptions& options = {});
DensityEstimate fit(const Sample& sample, const Grid1D& grid, double alpha, const SolverOptions& options = {});
DensityEstimate fit(const Sample& sample, const Grid2D& grid, double alpha, const SolverOptions& options = {});

/// Linear interpolation of γ in 1D; +∞ outside the grid.
double eval_g(const DensityEstimate& est, double x);
/// Bilinear interpolation of γ in 2D; +∞ outside the grid.
double eval_g(const DensityEstimate& est, Point2 x);

/// −ψ′(ĝ(x)); zero outside the grid.
double eval_density(const DensityEstimate& est, double x);
double eval_density(const DensityEstimate& est, Point2 x);

/// Trapezoid integral of the density from the left edge to x, with four
/// subintervals per grid cell.
double cdf_1d(const DensityEstimate& est, double x);

const Diagnostics& diagnostics(const DensityEstimate& est);

/// Diagnostics recomputed from the sample, grid, γ and φ. Iteration count,
/// status, message and KKT residual are copied from the stored record.
Diagnostics recompute_diagnostics(const DensityEstimate& est);

/// Vertices of the convex hull of a planar point set, counterclockwise.
std::vector<Point2> convex_hull(std::span<const Point2> points);

}  // namespace rhoconcave
