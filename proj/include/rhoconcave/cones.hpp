#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "rhoconcave/mesh.hpp"

namespace rhoconcave {

/// Sparse divided-second-difference operator on an ordered 1D grid. Row j
/// corresponds to interior node j + 1 and touches nodes j, j + 1, j + 2.
/// Dγ ≥ 0 exactly when γ is discretely convex.
class DifferenceOperator {
 public:
  DifferenceOperator() = default;
  explicit DifferenceOperator(std::size_t cols, std::vector<std::array<double, 3>> coefs)
      : cols_(cols), coefs_(std::move(coefs)) {}

  std::size_t rows() const { return coefs_.size(); }
  std::size_t cols() const { return cols_; }
  /// Coefficients on (γ_j, γ_{j+1}, γ_{j+2}) for row j.
  const std::array<double, 3>& row(std::size_t j) const { return coefs_[j]; }

  std::vector<double> apply(std::span<const double> gamma) const;
  std::vector<double> apply_transpose(std::span<const double> eta) const;

 private:
  std::size_t cols_ = 0;
  std::vector<std::array<double, 3>> coefs_;
};

DifferenceOperator second_difference_operator(const Grid1D& grid);

/// Raw finite-difference Hessian entries at one 2D node.
struct HessianEntries {
  double h11 = 0.0;
  double h22 = 0.0;
  double h12 = 0.0;
};

/// Linear functional of γ: Σ coef · γ[col].
template <std::size_t N>
struct Stencil {
  std::array<std::size_t, N> cols{};
  std::array<double, N> coefs{};

  double apply(std::span<const double> gamma) const {
    double v = 0.0;
    for (std::size_t k = 0; k < N; ++k) v += coefs[k] * gamma[cols[k]];
    return v;
  }
};

/// Stencils producing (H11, H22, H12) at one interior node.
struct NodeStencil {
  std::size_t node = 0;
  Stencil<3> h11;
  Stencil<3> h22;
  Stencil<4> h12;

  HessianEntries apply(std::span<const double> gamma) const {
    return {h11.apply(gamma), h22.apply(gamma), h12.apply(gamma)};
  }
};

/// Discrete Hessian stencils at every interior node of a regular grid.
struct HessianStencil {
  std::size_t cols = 0;
  std::vector<NodeStencil> nodes;
};

HessianStencil build_hessian_stencil(const Grid2D& grid);

/// H11 = g(x+δ, y) − 2g(x, y) + g(x−δ, y), H22 likewise along y, and
/// H12 = [g(+,+) − g(+,−) − g(−,+) + g(−,−)] / 4. Throws
/// std::out_of_range for boundary nodes.
HessianEntries discrete_hessian(const Grid2D& grid, std::span<const double> gamma, std::size_t node);

/// Diagonal entries and determinant of H: H ⪰ 0 iff all three are ≥ 0.
struct PsdResiduals {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;

  double min() const { return std::min(r1, std::min(r2, r3)); }
  bool psd(double tol = 0.0) const { return min() >= -tol; }
};

PsdResiduals psd_residuals(const HessianEntries& h);

}  // namespace rhoconcave
