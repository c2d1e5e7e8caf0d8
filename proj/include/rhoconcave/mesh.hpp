#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rhoconcave {

/// Raised when the data cannot support a fit: all points coincide in 1D, or
/// the bounding box is flat in 2D, so the convex hull has empty interior.
class DegenerateSampleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Point2 = std::array<double, 2>;

/// Observed data in one or two dimensions, with fidelity weights.
class Sample {
 public:
  /// Weights default to 1/n. Throws std::invalid_argument on n < 2,
  /// non-finite values, negative weights, or weights not summing to one.
  static Sample univariate(std::vector<double> x, std::vector<double> weights = {});
  static Sample bivariate(std::vector<Point2> points, std::vector<double> weights = {});

  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }

  /// Coordinate of the i-th observation in 1D.
  double x(std::size_t i) const { return coords_[i]; }
  Point2 point(std::size_t i) const;
  std::span<const double> weights() const { return weights_; }

  /// Weighted mean of the observations (per coordinate).
  Point2 mean() const;

  /// Raw coordinate storage, row-major with stride dim().
  std::span<const double> coords() const { return coords_; }

 private:
  Sample(int dim, std::vector<double> coords, std::vector<double> weights);

  int dim_;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

/// Univariate evaluation grid with Riemann weights.
struct Grid1D {
  std::vector<double> xi;  ///< strictly increasing abscissae
  std::vector<double> s;   ///< quadrature weight per node

  std::size_t size() const { return xi.size(); }
  double span() const { return xi.back() - xi.front(); }

  /// Validates nodes and computes weights.
  static Grid1D from_nodes(std::vector<double> nodes);
};

/// Regular rectangular grid; node (i, j) has flat index j * nx() + i.
struct Grid2D {
  std::vector<double> x_coords;
  std::vector<double> y_coords;
  std::vector<double> s;
  double margin = 0.0;

  std::size_t nx() const { return x_coords.size(); }
  std::size_t ny() const { return y_coords.size(); }
  std::size_t size() const { return nx() * ny(); }
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx() + i; }
  double dx() const { return x_coords[1] - x_coords[0]; }
  double dy() const { return y_coords[1] - y_coords[0]; }
  double area() const {
    return (x_coords.back() - x_coords.front()) * (y_coords.back() - y_coords.front());
  }
  Point2 node(std::size_t k) const { return {x_coords[k % nx()], y_coords[k / nx()]}; }
};

/// Sparse interpolation map from grid values to values at the observations.
/// Row i holds (column, coefficient) pairs with coefficients summing to one.
class EvalOperator {
 public:
  struct Entry {
    std::size_t col;
    double coef;
  };

  EvalOperator(std::size_t cols, std::vector<std::size_t> row_ptr, std::vector<Entry> entries);

  std::size_t rows() const { return row_ptr_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::span<const Entry> row(std::size_t i) const {
    return {entries_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  /// (Lγ)_i: value at the i-th observation.
  std::vector<double> apply(std::span<const double> gamma) const;
  /// Lᵀw as an m-vector.
  std::vector<double> apply_transpose(std::span<const double> w) const;

 private:
  std::size_t cols_;
  std::vector<std::size_t> row_ptr_;
  std::vector<Entry> entries_;
};

/// Grid containing every distinct data value, with extra nodes inserted into
/// the widest gaps until at least target_m nodes exist.
Grid1D build_grid_1d(const Sample& sample, std::size_t target_m);

/// Default node count for a 1D sample of size n: max(2n + 1, 301) capped at
/// 2000, but never fewer than the number of distinct values.
std::size_t default_grid_size_1d(const Sample& sample);

/// Averages of adjacent spacings; half spacings at the two ends.
std::vector<double> riemann_weights(std::span<const double> xi);

/// Uniform grid over the data bounding box widened by margin × width on each
/// side, with tensor-product trapezoid weights.
Grid2D build_grid_2d(const Sample& sample, std::size_t m1, std::size_t m2, double margin);

EvalOperator build_eval_operator(const Grid1D& grid, const Sample& sample);
EvalOperator build_eval_operator(const Grid2D& grid, const Sample& sample);

/// Lower convex hull interpolant of the points (X_i, Y_i) evaluated at x;
/// +∞ outside [min X, max X].
double convex_minorant_1d(std::span<const double> X, std::span<const double> Y, double x);

/// Locates the cell [xi[k], xi[k+1]] containing x (clamped to the last cell).
/// Returns nodes.size() when x lies outside the grid.
std::size_t locate_cell(std::span<const double> nodes, double x);

}  // namespace rhoconcave
