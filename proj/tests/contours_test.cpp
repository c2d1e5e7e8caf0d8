#include "rhoconcave/contours.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

namespace rhoconcave {
namespace {

Grid2D square_grid(std::size_t m, double half) {
  Grid2D g;
  for (std::size_t k = 0; k < m; ++k) {
    const double v = -half + 2.0 * half * k / (m - 1);
    g.x_coords.push_back(v);
    g.y_coords.push_back(v);
  }
  g.s.assign(m * m, 1.0);
  return g;
}

std::vector<double> radial_log_density(const Grid2D& g) {
  std::vector<double> v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point2 p = g.node(k);
    v[k] = -0.5 * (p[0] * p[0] + p[1] * p[1]) - std::log(2.0 * M_PI);
  }
  return v;
}

TEST(Contours, RadialFieldGivesCircles) {
  const Grid2D g = square_grid(41, 4.0);
  const auto v = radial_log_density(g);
  const double cell = g.dx();
  for (double level : {-2.5, -4.0, -6.0}) {
    const auto lines = contour_lines(g, v, level);
    ASSERT_EQ(lines.size(), 1u) << level;
    EXPECT_TRUE(lines[0].closed);
    EXPECT_EQ(lines[0].level, level);
    const double r = std::sqrt(-2.0 * (level + std::log(2.0 * M_PI)));
    for (const Point2& p : lines[0].points) {
      EXPECT_LT(std::abs(std::hypot(p[0], p[1]) - r), 2.0 * cell);
    }
    EXPECT_EQ(lines[0].points.front()[0], lines[0].points.back()[0]);
    EXPECT_EQ(lines[0].points.front()[1], lines[0].points.back()[1]);
  }
}

TEST(Contours, LevelsOutsideTheRangeAreEmpty) {
  const Grid2D g = square_grid(21, 3.0);
  const auto v = radial_log_density(g);
  EXPECT_TRUE(contour_lines(g, v, -1e3).empty());
  EXPECT_TRUE(contour_lines(g, v, 10.0).empty());
}

TEST(Contours, IntegerLevelsMatchAttainedRange) {
  const Grid2D g = square_grid(41, 4.0);
  const auto v = radial_log_density(g);
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  std::vector<double> levels;
  for (int k = -20; k <= 5; ++k) levels.push_back(k);
  const auto lines = contour_lines(g, v, levels);
  std::set<double> hit;
  for (const auto& l : lines) hit.insert(l.level);
  std::size_t attained = 0;
  for (double l : levels) attained += (l > lo && l < hi) ? 1 : 0;
  EXPECT_EQ(hit.size(), attained);
}

TEST(Contours, OpenLinesEndOnTheBoundary) {
  const Grid2D g = square_grid(11, 1.0);
  std::vector<double> v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = g.node(k)[0] + 0.3 * g.node(k)[1];
  const auto lines = contour_lines(g, v, 0.1);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_FALSE(lines[0].closed);
  for (const Point2& p : lines[0].points) EXPECT_NEAR(p[0] + 0.3 * p[1], 0.1, 1e-12);
  for (const Point2& end : {lines[0].points.front(), lines[0].points.back()}) {
    const bool on_edge = std::abs(std::abs(end[0]) - 1.0) < 1e-12 || std::abs(std::abs(end[1]) - 1.0) < 1e-12;
    EXPECT_TRUE(on_edge);
  }
}

TEST(Contours, NegativeInfinityIsBelowEveryLevel) {
  const Grid2D g = square_grid(9, 1.0);
  auto v = radial_log_density(g);
  v[0] = -std::numeric_limits<double>::infinity();
  EXPECT_NO_THROW(contour_lines(g, v, -10.0));
  for (const auto& l : contour_lines(g, v, -2.5)) {
    for (const Point2& p : l.points) EXPECT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
  }
}

TEST(Contours, FromAnEstimate) {
  std::vector<Point2> pts;
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) pts.push_back({i / 11.0, j / 11.0 + 0.02 * i});
  }
  FitOptions opts;
  opts.grid_x = opts.grid_y = 15;
  const auto est = fit(Sample::bivariate(pts), 1.0, opts);
  const std::vector<double> levels{-1.0, 0.0};
  for (const auto& l : log_density_contours(est, levels)) EXPECT_GE(l.points.size(), 2u);
}

}  // namespace
}  // namespace rhoconcave
