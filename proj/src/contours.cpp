#include "rhoconcave/contours.hpp"

#include <cmath>
#include <stdexcept>

namespace rhoconcave {

namespace {

struct Segment {
  std::size_t a;  // edge ids
  std::size_t b;
};

}  // namespace

std::vector<Polyline> contour_lines(const Grid2D& grid, std::span<const double> values, double level) {
  const std::size_t nx = grid.nx(), ny = grid.ny();
  if (values.size() != grid.size()) throw std::invalid_argument("contour values do not match the grid size");
  const std::size_t horizontal = (nx - 1) * ny;
  auto h_edge = [&](std::size_t i, std::size_t j) { return j * (nx - 1) + i; };
  auto v_edge = [&](std::size_t i, std::size_t j) { return horizontal + j * nx + i; };
  auto value = [&](std::size_t i, std::size_t j) { return values[grid.index(i, j)]; };

  // Crossing location on an edge between nodes p (value u) and q (value v).
  auto crossing = [&](Point2 p, Point2 q, double u, double v) -> Point2 {
    double t = 0.5;
    if (std::isinf(u) && std::isinf(v)) {
      t = 0.5;
    } else if (std::isinf(u)) {
      t = 0.0;
    } else if (std::isinf(v)) {
      t = 1.0;
    } else if (u != v) {
      t = (level - u) / (v - u);
    }
    return {p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
  };
  auto edge_point = [&](std::size_t id) -> Point2 {
    if (id < horizontal) {
      const std::size_t j = id / (nx - 1), i = id % (nx - 1);
      return crossing({grid.x_coords[i], grid.y_coords[j]}, {grid.x_coords[i + 1], grid.y_coords[j]}, value(i, j),
                      value(i + 1, j));
    }
    const std::size_t k = id - horizontal;
    const std::size_t j = k / nx, i = k % nx;
    return crossing({grid.x_coords[i], grid.y_coords[j]}, {grid.x_coords[i], grid.y_coords[j + 1]}, value(i, j),
                    value(i, j + 1));
  };

  std::vector<Segment> segments;
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const double v00 = value(i, j), v10 = value(i + 1, j), v11 = value(i + 1, j + 1), v01 = value(i, j + 1);
      const int mask = (v00 >= level ? 1 : 0) | (v10 >= level ? 2 : 0) | (v11 >= level ? 4 : 0) |
                       (v01 >= level ? 8 : 0);
      if (mask == 0 || mask == 15) continue;
      const std::size_t bottom = h_edge(i, j), top = h_edge(i, j + 1);
      const std::size_t left = v_edge(i, j), right = v_edge(i + 1, j);
      const bool center_above = 0.25 * (v00 + v10 + v11 + v01) >= level;
      switch (mask) {
        case 1: case 14: segments.push_back({left, bottom}); break;
        case 2: case 13: segments.push_back({bottom, right}); break;
        case 3: case 12: segments.push_back({left, right}); break;
        case 4: case 11: segments.push_back({right, top}); break;
        case 6: case 9: segments.push_back({bottom, top}); break;
        case 7: case 8: segments.push_back({left, top}); break;
        case 5:
          if (center_above) {
            segments.push_back({left, top});
            segments.push_back({bottom, right});
          } else {
            segments.push_back({left, bottom});
            segments.push_back({right, top});
          }
          break;
        case 10:
          if (center_above) {
            segments.push_back({left, bottom});
            segments.push_back({right, top});
          } else {
            segments.push_back({left, top});
            segments.push_back({bottom, right});
          }
          break;
        default: break;
      }
    }
  }

  // Join segments sharing an edge; every interior crossing has degree two.
  const std::size_t edges = horizontal + nx * (ny - 1);
  std::vector<std::vector<std::size_t>> at(edges);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    at[segments[s].a].push_back(s);
    at[segments[s].b].push_back(s);
  }
  std::vector<bool> used(segments.size(), false);
  std::vector<Polyline> out;
  auto walk = [&](std::size_t start_edge, std::size_t first) {
    Polyline line;
    line.level = level;
    std::size_t edge = start_edge, seg = first;
    line.points.push_back(edge_point(edge));
    while (true) {
      used[seg] = true;
      edge = segments[seg].a == edge ? segments[seg].b : segments[seg].a;
      line.points.push_back(edge_point(edge));
      std::size_t next = segments.size();
      for (std::size_t s : at[edge]) {
        if (!used[s]) next = s;
      }
      if (next == segments.size()) break;
      seg = next;
    }
    line.closed = edge == start_edge && line.points.size() > 2;
    out.push_back(std::move(line));
  };
  for (std::size_t e = 0; e < edges; ++e) {
    if (at[e].size() == 1 && !used[at[e][0]]) walk(e, at[e][0]);
  }
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (!used[s]) walk(segments[s].a, s);
  }
  return out;
}

std::vector<Polyline> contour_lines(const Grid2D& grid, std::span<const double> values,
                                    std::span<const double> levels) {
  std::vector<Polyline> out;
  for (double level : levels) {
    auto lines = contour_lines(grid, values, level);
    for (auto& l : lines) out.push_back(std::move(l));
  }
  return out;
}

std::vector<Polyline> log_density_contours(const DensityEstimate& est, std::span<const double> levels) {
  std::vector<double> logf(est.phi().size());
  for (std::size_t k = 0; k < logf.size(); ++k) logf[k] = std::log(est.phi()[k]);
  return contour_lines(est.grid_2d(), logf, levels);
}

}  // namespace rhoconcave
