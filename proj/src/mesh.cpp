#include "rhoconcave/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>
#include <tuple>

namespace rhoconcave {

namespace {

std::vector<double> normalized_weights(std::size_t n, std::vector<double> weights) {
  if (weights.empty()) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (weights.size() != n) throw std::invalid_argument("weight count does not match sample size");
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("weights must be finite and >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("weights must sum to one");
  return weights;
}

}  // namespace

Sample::Sample(int dim, std::vector<double> coords, std::vector<double> weights)
    : dim_(dim), coords_(std::move(coords)), weights_(std::move(weights)) {}

Sample Sample::univariate(std::vector<double> x, std::vector<double> weights) {
  if (x.size() < 2) throw std::invalid_argument("sample needs at least two observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      std::ostringstream os;
      os << "observation " << i << " is not finite";
      throw std::invalid_argument(os.str());
    }
  }
  auto w = normalized_weights(x.size(), std::move(weights));
  return Sample(1, std::move(x), std::move(w));
}

Sample Sample::bivariate(std::vector<Point2> points, std::vector<double> weights) {
  if (points.size() < 2) throw std::invalid_argument("sample needs at least two observations");
  std::vector<double> coords;
  coords.reserve(2 * points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i][0]) || !std::isfinite(points[i][1])) {
      std::ostringstream os;
      os << "observation " << i << " is not finite";
      throw std::invalid_argument(os.str());
    }
    coords.push_back(points[i][0]);
    coords.push_back(points[i][1]);
  }
  auto w = normalized_weights(points.size(), std::move(weights));
  return Sample(2, std::move(coords), std::move(w));
}

Point2 Sample::point(std::size_t i) const {
  if (dim_ == 1) return {coords_[i], 0.0};
  return {coords_[2 * i], coords_[2 * i + 1]};
}

Point2 Sample::mean() const {
  Point2 m{0.0, 0.0};
  for (std::size_t i = 0; i < size(); ++i) {
    const Point2 p = point(i);
    m[0] += weights_[i] * p[0];
    m[1] += weights_[i] * p[1];
  }
  return m;
}

std::vector<double> riemann_weights(std::span<const double> xi) {
  const std::size_t m = xi.size();
  std::vector<double> s(m, 0.0);
  if (m < 2) return s;
  s[0] = 0.5 * (xi[1] - xi[0]);
  s[m - 1] = 0.5 * (xi[m - 1] - xi[m - 2]);
  for (std::size_t i = 1; i + 1 < m; ++i) s[i] = 0.5 * (xi[i + 1] - xi[i - 1]);
  return s;
}

Grid1D Grid1D::from_nodes(std::vector<double> nodes) {
  if (nodes.size() < 3) throw std::invalid_argument("a 1D grid needs at least three nodes");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(nodes[i] > nodes[i - 1])) throw std::invalid_argument("grid nodes must be strictly increasing");
  }
  Grid1D g;
  g.s = riemann_weights(nodes);
  g.xi = std::move(nodes);
  return g;
}

namespace {

std::vector<double> distinct_sorted(const Sample& sample) {
  std::vector<double> v(sample.coords().begin(), sample.coords().end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::size_t default_grid_size_1d(const Sample& sample) {
  const std::size_t distinct = distinct_sorted(sample).size();
  const std::size_t wanted = std::min<std::size_t>(std::max<std::size_t>(2 * sample.size() + 1, 301), 2000);
  return std::max({wanted, distinct, std::size_t{3}});
}

Grid1D build_grid_1d(const Sample& sample, std::size_t target_m) {
  if (sample.dim() != 1) throw std::invalid_argument("build_grid_1d requires a univariate sample");
  const std::vector<double> v = distinct_sorted(sample);
  if (v.size() < 2) {
    throw DegenerateSampleError(
        "all observations coincide: the convex hull of the data has empty interior");
  }
  if (target_m < std::max<std::size_t>(3, v.size())) {
    throw std::invalid_argument("target grid size is smaller than the number of distinct values");
  }

  // Greedy subdivision: always split the gap whose current sub-spacing is the
  // largest. Ties go to the leftmost gap so the result is deterministic.
  const std::size_t gaps = v.size() - 1;
  std::vector<std::size_t> extra(gaps, 0);
  using Item = std::tuple<double, std::size_t>;  // (sub-spacing, -index ordering)
  auto cmp = [](const Item& a, const Item& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    return std::get<1>(a) > std::get<1>(b);
  };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> heap(cmp);
  for (std::size_t k = 0; k < gaps; ++k) heap.emplace(v[k + 1] - v[k], k);
  for (std::size_t added = v.size(); added < target_m; ++added) {
    auto [len, k] = heap.top();
    heap.pop();
    ++extra[k];
    heap.emplace((v[k + 1] - v[k]) / static_cast<double>(extra[k] + 1), k);
  }

  std::vector<double> nodes;
  nodes.reserve(target_m);
  for (std::size_t k = 0; k < gaps; ++k) {
    nodes.push_back(v[k]);
    const double h = (v[k + 1] - v[k]) / static_cast<double>(extra[k] + 1);
    for (std::size_t j = 1; j <= extra[k]; ++j) nodes.push_back(v[k] + h * static_cast<double>(j));
  }
  nodes.push_back(v.back());
  return Grid1D::from_nodes(std::move(nodes));
}

Grid2D build_grid_2d(const Sample& sample, std::size_t m1, std::size_t m2, double margin) {
  if (sample.dim() != 2) throw std::invalid_argument("build_grid_2d requires a bivariate sample");
  if (m1 < 5 || m2 < 5) throw std::invalid_argument("2D grid needs at least 5 nodes per axis");
  if (!std::isfinite(margin) || margin < 0.0) throw std::invalid_argument("margin must be >= 0");
  double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double hi[2] = {-lo[0], -lo[1]};
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const Point2 p = sample.point(i);
    for (int d = 0; d < 2; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  if (!(hi[0] > lo[0]) || !(hi[1] > lo[1])) {
    throw DegenerateSampleError(
        "bounding box of the data has zero area: the convex hull has empty interior");
  }

  auto axis = [&](int d, std::size_t count) {
    const double width = hi[d] - lo[d];
    const double a = lo[d] - margin * width;
    const double b = hi[d] + margin * width;
    std::vector<double> c(count);
    for (std::size_t i = 0; i < count; ++i) {
      c[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    c.back() = b;
    return c;
  };

  Grid2D g;
  g.x_coords = axis(0, m1);
  g.y_coords = axis(1, m2);
  g.margin = margin;
  const double cell = g.dx() * g.dy();
  g.s.resize(m1 * m2);
  for (std::size_t j = 0; j < m2; ++j) {
    const double wy = (j == 0 || j + 1 == m2) ? 0.5 : 1.0;
    for (std::size_t i = 0; i < m1; ++i) {
      const double wx = (i == 0 || i + 1 == m1) ? 0.5 : 1.0;
      g.s[g.index(i, j)] = cell * wx * wy;
    }
  }
  return g;
}

std::size_t locate_cell(std::span<const double> nodes, double x) {
  const std::size_t m = nodes.size();
  if (m < 2 || !(x >= nodes.front()) || !(x <= nodes.back())) return m;
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  std::size_t k = static_cast<std::size_t>(it - nodes.begin());
  k = k == 0 ? 0 : k - 1;
  return std::min(k, m - 2);
}

EvalOperator::EvalOperator(std::size_t cols, std::vector<std::size_t> row_ptr, std::vector<Entry> entries)
    : cols_(cols), row_ptr_(std::move(row_ptr)), entries_(std::move(entries)) {
  if (row_ptr_.empty() || row_ptr_.back() != entries_.size()) {
    throw std::invalid_argument("malformed evaluation operator");
  }
  for (const Entry& e : entries_) {
    if (e.col >= cols_ || !(e.coef >= 0.0)) throw std::invalid_argument("malformed evaluation operator");
  }
}

std::vector<double> EvalOperator::apply(std::span<const double> gamma) const {
  std::vector<double> out(rows(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    for (const Entry& e : row(i)) out[i] += e.coef * gamma[e.col];
  }
  return out;
}

std::vector<double> EvalOperator::apply_transpose(std::span<const double> w) const {
  std::vector<double> out(cols_, 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    for (const Entry& e : row(i)) out[e.col] += e.coef * w[i];
  }
  return out;
}

namespace {

[[noreturn]] void throw_outside(std::size_t i, Point2 p, int dim) {
  std::ostringstream os;
  os << "observation " << i << " at (" << p[0];
  if (dim == 2) os << ", " << p[1];
  os << ") lies outside the grid";
  throw std::out_of_range(os.str());
}

}  // namespace

EvalOperator build_eval_operator(const Grid1D& grid, const Sample& sample) {
  if (sample.dim() != 1) throw std::invalid_argument("1D evaluation operator needs a univariate sample");
  std::vector<std::size_t> row_ptr{0};
  std::vector<EvalOperator::Entry> entries;
  entries.reserve(2 * sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double x = sample.x(i);
    const std::size_t k = locate_cell(grid.xi, x);
    if (k == grid.size()) throw_outside(i, sample.point(i), 1);
    if (x == grid.xi[k]) {
      entries.push_back({k, 1.0});
    } else if (x == grid.xi[k + 1]) {
      entries.push_back({k + 1, 1.0});
    } else {
      const double t = (x - grid.xi[k]) / (grid.xi[k + 1] - grid.xi[k]);
      entries.push_back({k, 1.0 - t});
      entries.push_back({k + 1, t});
    }
    row_ptr.push_back(entries.size());
  }
  return EvalOperator(grid.size(), std::move(row_ptr), std::move(entries));
}

EvalOperator build_eval_operator(const Grid2D& grid, const Sample& sample) {
  if (sample.dim() != 2) throw std::invalid_argument("2D evaluation operator needs a bivariate sample");
  std::vector<std::size_t> row_ptr{0};
  std::vector<EvalOperator::Entry> entries;
  entries.reserve(4 * sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const Point2 p = sample.point(i);
    const std::size_t a = locate_cell(grid.x_coords, p[0]);
    const std::size_t b = locate_cell(grid.y_coords, p[1]);
    if (a == grid.nx() || b == grid.ny()) throw_outside(i, p, 2);
    const double t = std::clamp((p[0] - grid.x_coords[a]) / grid.dx(), 0.0, 1.0);
    const double u = std::clamp((p[1] - grid.y_coords[b]) / grid.dy(), 0.0, 1.0);
    entries.push_back({grid.index(a, b), (1.0 - t) * (1.0 - u)});
    entries.push_back({grid.index(a + 1, b), t * (1.0 - u)});
    entries.push_back({grid.index(a, b + 1), (1.0 - t) * u});
    entries.push_back({grid.index(a + 1, b + 1), t * u});
    row_ptr.push_back(entries.size());
  }
  return EvalOperator(grid.size(), std::move(row_ptr), std::move(entries));
}

double convex_minorant_1d(std::span<const double> X, std::span<const double> Y, double x) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (X.empty() || X.size() != Y.size()) return kInf;
  std::vector<std::size_t> order(X.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return X[a] < X[b]; });
  if (!(x >= X[order.front()]) || !(x <= X[order.back()])) return kInf;

  // Andrew's monotone chain, lower part only.
  std::vector<std::size_t> hull;
  for (std::size_t idx : order) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double cross = (X[b] - X[a]) * (Y[idx] - Y[a]) - (Y[b] - Y[a]) * (X[idx] - X[a]);
      if (cross > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(idx);
  }
  if (hull.size() == 1) return Y[hull.front()];
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    const std::size_t a = hull[k], b = hull[k + 1];
    if (x <= X[b]) {
      if (x == X[b]) return Y[b];
      const double t = (x - X[a]) / (X[b] - X[a]);
      return (1.0 - t) * Y[a] + t * Y[b];
    }
  }
  return Y[hull.back()];
}

}  // namespace rhoconcave
