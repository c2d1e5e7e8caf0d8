#include "rhoconcave/cones.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace rhoconcave {
namespace {

Grid1D random_grid(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> gap(0.05, 1.0);
  std::vector<double> x(m);
  x[0] = -2.0;
  for (std::size_t i = 1; i < m; ++i) x[i] = x[i - 1] + gap(rng);
  return Grid1D::from_nodes(x);
}

Grid2D unit_grid(std::size_t nx, std::size_t ny) {
  // Spacing 1 in both directions.
  std::vector<Point2> corners{{0.0, 0.0}, {static_cast<double>(nx - 1), static_cast<double>(ny - 1)}};
  return build_grid_2d(Sample::bivariate(corners), nx, ny, 0.0);
}

TEST(SecondDifference, Examples) {
  const Grid1D g = Grid1D::from_nodes({0.0, 1.0, 2.0});
  const DifferenceOperator D = second_difference_operator(g);
  ASSERT_EQ(D.rows(), 1u);
  const std::vector<double> spike{0.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(D.apply(spike)[0], -2.0);

  const Grid1D u = Grid1D::from_nodes({-1.0, -0.5, 0.0, 0.5, 1.0, 1.5});
  std::vector<double> sq(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) sq[i] = u.xi[i] * u.xi[i];
  for (double v : second_difference_operator(u).apply(sq)) EXPECT_NEAR(v, 2.0, 1e-12);
}

TEST(SecondDifference, RowStructure) {
  std::mt19937_64 rng(1);
  const Grid1D g = random_grid(rng, 40);
  const DifferenceOperator D = second_difference_operator(g);
  EXPECT_EQ(D.rows(), 38u);
  EXPECT_EQ(D.cols(), 40u);
  for (std::size_t j = 0; j < D.rows(); ++j) {
    const auto& r = D.row(j);
    EXPECT_NEAR(r[0] + r[1] + r[2], 0.0, 1e-14 * std::abs(r[1]));
    EXPECT_GT(r[0], 0.0);
    EXPECT_LT(r[1], 0.0);
    EXPECT_GT(r[2], 0.0);
  }
}

TEST(SecondDifference, TransposeIsAdjoint) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  const Grid1D g = random_grid(rng, 25);
  const DifferenceOperator D = second_difference_operator(g);
  std::vector<double> gamma(25), eta(23);
  for (double& v : gamma) v = z(rng);
  for (double& v : eta) v = z(rng);
  const auto Dg = D.apply(gamma);
  const auto Dte = D.apply_transpose(eta);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t j = 0; j < eta.size(); ++j) lhs += eta[j] * Dg[j];
  for (std::size_t i = 0; i < gamma.size(); ++i) rhs += gamma[i] * Dte[i];
  EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs)));
}

TEST(SecondDifference, AffineAnnihilationAndQuadraticExactness) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Grid1D g = random_grid(rng, 30);
    const DifferenceOperator D = second_difference_operator(g);
    const double a = u(rng), b = u(rng), c = u(rng);
    std::vector<double> affine(g.size()), quad(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      affine[i] = a + b * g.xi[i];
      quad[i] = affine[i] + c * g.xi[i] * g.xi[i];
    }
    for (double v : D.apply(affine)) EXPECT_NEAR(v, 0.0, 1e-12);
    for (double v : D.apply(quad)) EXPECT_NEAR(v, 2.0 * c, 1e-10);
  }
  // Geometric grid.
  std::vector<double> geo{1.0};
  for (int i = 1; i < 20; ++i) geo.push_back(geo.back() * 1.3);
  const Grid1D gg = Grid1D::from_nodes(geo);
  std::vector<double> q(gg.size());
  for (std::size_t i = 0; i < gg.size(); ++i) q[i] = 0.5 * gg.xi[i] * gg.xi[i] - gg.xi[i];
  for (double v : second_difference_operator(gg).apply(q)) EXPECT_NEAR(v, 1.0, 1e-10);
}

TEST(SecondDifference, AgreesWithConvexMinorantOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution perturb(0.5);
  int convex_cases = 0, nonconvex_cases = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Grid1D g = random_grid(rng, 12);
    const double k1 = u(rng), k2 = u(rng), c = std::abs(u(rng));
    std::vector<double> gamma(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      gamma[i] = c * g.xi[i] * g.xi[i] + std::abs(g.xi[i] - k1) + k2 * g.xi[i];
    }
    if (perturb(rng)) gamma[1 + static_cast<std::size_t>(trial) % 10] += 0.05 + 0.5 * std::abs(u(rng));
    const auto r = second_difference_operator(g).apply(gamma);
    const bool cone = std::all_of(r.begin(), r.end(), [](double v) { return v >= -1e-9; });
    bool hull = true;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(convex_minorant_1d(g.xi, gamma, g.xi[i]) - gamma[i]) > 1e-9) hull = false;
    }
    EXPECT_EQ(cone, hull) << "trial " << trial;
    (cone ? convex_cases : nonconvex_cases)++;
  }
  EXPECT_GT(convex_cases, 50);
  EXPECT_GT(nonconvex_cases, 50);
}

TEST(DiscreteHessian, Examples) {
  const Grid2D g = unit_grid(5, 5);
  std::vector<double> bowl(g.size()), saddle(g.size()), affine(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point2 p = g.node(k);
    bowl[k] = p[0] * p[0] + p[1] * p[1];
    saddle[k] = p[0] * p[1];
    affine[k] = 3.0 - p[0] + 0.5 * p[1];
  }
  const std::size_t center = g.index(2, 2);
  const HessianEntries hb = discrete_hessian(g, bowl, center);
  EXPECT_DOUBLE_EQ(hb.h11, 2.0);
  EXPECT_DOUBLE_EQ(hb.h22, 2.0);
  EXPECT_DOUBLE_EQ(hb.h12, 0.0);
  const HessianEntries hs = discrete_hessian(g, saddle, center);
  EXPECT_DOUBLE_EQ(hs.h11, 0.0);
  EXPECT_DOUBLE_EQ(hs.h22, 0.0);
  EXPECT_DOUBLE_EQ(hs.h12, 1.0);
  const HessianEntries ha = discrete_hessian(g, affine, center);
  EXPECT_NEAR(ha.h11, 0.0, 1e-14);
  EXPECT_NEAR(ha.h22, 0.0, 1e-14);
  EXPECT_NEAR(ha.h12, 0.0, 1e-14);
  EXPECT_THROW(discrete_hessian(g, bowl, g.index(0, 2)), std::out_of_range);
  EXPECT_THROW(discrete_hessian(g, bowl, g.index(2, 4)), std::out_of_range);
}

TEST(DiscreteHessian, StencilsMatchDirectFormulas) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Sample s = Sample::bivariate({{-1.0, 0.0}, {2.0, 1.5}});
  const Grid2D g = build_grid_2d(s, 9, 13, 0.1);
  const HessianStencil st = build_hessian_stencil(g);
  EXPECT_EQ(st.nodes.size(), 7u * 11u);
  std::vector<double> gamma(g.size());
  for (double& v : gamma) v = u(rng);
  for (const NodeStencil& ns : st.nodes) {
    const HessianEntries a = ns.apply(gamma);
    const HessianEntries b = discrete_hessian(g, gamma, ns.node);
    EXPECT_DOUBLE_EQ(a.h11, b.h11);
    EXPECT_DOUBLE_EQ(a.h22, b.h22);
    EXPECT_NEAR(a.h12, b.h12, 1e-15);
  }
  // Affine annihilation and quadratic exactness, δ²-scaled.
  const double a0 = u(rng), a1 = u(rng), a2 = u(rng);
  const double q11 = 1.3, q22 = 0.7, q12 = -0.4;
  std::vector<double> aff(g.size()), quad(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point2 p = g.node(k);
    aff[k] = a0 + a1 * p[0] + a2 * p[1];
    quad[k] = aff[k] + 0.5 * q11 * p[0] * p[0] + 0.5 * q22 * p[1] * p[1] + q12 * p[0] * p[1];
  }
  const double dx = g.dx(), dy = g.dy();
  for (const NodeStencil& ns : st.nodes) {
    const HessianEntries ha = ns.apply(aff);
    EXPECT_NEAR(ha.h11, 0.0, 1e-12);
    EXPECT_NEAR(ha.h22, 0.0, 1e-12);
    EXPECT_NEAR(ha.h12, 0.0, 1e-12);
    const HessianEntries hq = ns.apply(quad);
    EXPECT_NEAR(hq.h11, q11 * dx * dx, 1e-12);
    EXPECT_NEAR(hq.h22, q22 * dy * dy, 1e-12);
    EXPECT_NEAR(hq.h12, q12 * dx * dy, 1e-12);
  }
}

TEST(PsdResiduals, Examples) {
  const PsdResiduals a = psd_residuals({2.0, 2.0, 0.0});
  EXPECT_EQ(a.r1, 2.0);
  EXPECT_EQ(a.r2, 2.0);
  EXPECT_EQ(a.r3, 4.0);
  EXPECT_TRUE(a.psd());
  const PsdResiduals b = psd_residuals({0.0, 0.0, 1.0});
  EXPECT_EQ(b.r3, -1.0);
  EXPECT_FALSE(b.psd());
  const PsdResiduals c = psd_residuals({1.0, 1.0, 1.0});
  EXPECT_EQ(c.r3, 0.0);
  EXPECT_TRUE(c.psd());
  EXPECT_FALSE(psd_residuals({-1.0, -1.0, 0.0}).psd());
}

TEST(PsdResiduals, MatchesEigenvalueCharacterization) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const HessianEntries h{u(rng), u(rng), u(rng)};
    const double tr = h.h11 + h.h22;
    const double disc = std::sqrt(0.25 * (h.h11 - h.h22) * (h.h11 - h.h22) + h.h12 * h.h12);
    const double lmin = 0.5 * tr - disc;
    EXPECT_EQ(psd_residuals(h).psd(), lmin >= 0.0);
  }
}

}  // namespace
}  // namespace rhoconcave
