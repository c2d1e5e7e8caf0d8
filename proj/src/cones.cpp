#include "rhoconcave/cones.hpp"

#include <sstream>
#include <stdexcept>

namespace rhoconcave {

std::vector<double> DifferenceOperator::apply(std::span<const double> gamma) const {
  std::vector<double> out(rows());
  for (std::size_t j = 0; j < rows(); ++j) {
    const auto& c = coefs_[j];
    out[j] = c[0] * gamma[j] + c[1] * gamma[j + 1] + c[2] * gamma[j + 2];
  }
  return out;
}

std::vector<double> DifferenceOperator::apply_transpose(std::span<const double> eta) const {
  std::vector<double> out(cols_, 0.0);
  for (std::size_t j = 0; j < rows(); ++j) {
    const auto& c = coefs_[j];
    out[j] += c[0] * eta[j];
    out[j + 1] += c[1] * eta[j];
    out[j + 2] += c[2] * eta[j];
  }
  return out;
}

DifferenceOperator second_difference_operator(const Grid1D& grid) {
  const std::size_t m = grid.size();
  if (m < 3) throw std::invalid_argument("second differences need at least three nodes");
  std::vector<std::array<double, 3>> coefs(m - 2);
  for (std::size_t j = 0; j + 2 < m; ++j) {
    const double hl = grid.xi[j + 1] - grid.xi[j];
    const double hr = grid.xi[j + 2] - grid.xi[j + 1];
    const double a = 2.0 / (hl * (hl + hr));
    const double c = 2.0 / (hr * (hl + hr));
    // Middle coefficient as −(a + c) so that rows annihilate constants
    // exactly; algebraically equal to −2/(hl·hr).
    coefs[j] = {a, -(a + c), c};
  }
  return DifferenceOperator(m, std::move(coefs));
}

HessianStencil build_hessian_stencil(const Grid2D& grid) {
  HessianStencil st;
  st.cols = grid.size();
  const std::size_t nx = grid.nx(), ny = grid.ny();
  if (nx < 3 || ny < 3) return st;
  st.nodes.reserve((nx - 2) * (ny - 2));
  for (std::size_t j = 1; j + 1 < ny; ++j) {
    for (std::size_t i = 1; i + 1 < nx; ++i) {
      NodeStencil ns;
      ns.node = grid.index(i, j);
      ns.h11.cols = {grid.index(i + 1, j), grid.index(i, j), grid.index(i - 1, j)};
      ns.h11.coefs = {1.0, -2.0, 1.0};
      ns.h22.cols = {grid.index(i, j + 1), grid.index(i, j), grid.index(i, j - 1)};
      ns.h22.coefs = {1.0, -2.0, 1.0};
      ns.h12.cols = {grid.index(i + 1, j + 1), grid.index(i + 1, j - 1), grid.index(i - 1, j + 1),
                     grid.index(i - 1, j - 1)};
      ns.h12.coefs = {0.25, -0.25, -0.25, 0.25};
      st.nodes.push_back(ns);
    }
  }
  return st;
}

HessianEntries discrete_hessian(const Grid2D& grid, std::span<const double> gamma, std::size_t node) {
  const std::size_t i = node % grid.nx(), j = node / grid.nx();
  if (node >= grid.size() || i == 0 || j == 0 || i + 1 == grid.nx() || j + 1 == grid.ny()) {
    std::ostringstream os;
    os << "node " << node << " is on the grid boundary; the Hessian stencil needs all 8 neighbors";
    throw std::out_of_range(os.str());
  }
  auto g = [&](std::size_t a, std::size_t b) { return gamma[grid.index(a, b)]; };
  HessianEntries h;
  h.h11 = g(i + 1, j) - 2.0 * g(i, j) + g(i - 1, j);
  h.h22 = g(i, j + 1) - 2.0 * g(i, j) + g(i, j - 1);
  h.h12 = (g(i + 1, j + 1) - g(i + 1, j - 1) - g(i - 1, j + 1) + g(i - 1, j - 1)) / 4.0;
  return h;
}

PsdResiduals psd_residuals(const HessianEntries& h) {
  return {h.h11, h.h22, h.h11 * h.h22 - h.h12 * h.h12};
}

}  // namespace rhoconcave
