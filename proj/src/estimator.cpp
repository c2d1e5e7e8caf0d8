#include "rhoconcave/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_point.hpp>

namespace rhoconcave {

namespace {

namespace bg = boost::geometry;
using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint, false>;  // counterclockwise

constexpr double kInf = std::numeric_limits<double>::infinity();

BgPolygon hull_polygon(std::span<const Point2> points) {
  bg::model::multi_point<BgPoint> mp;
  for (const Point2& p : points) mp.emplace_back(p[0], p[1]);
  BgPolygon hull;
  bg::convex_hull(mp, hull);
  return hull;
}

std::vector<Point2> sample_points(const Sample& sample) {
  std::vector<Point2> pts(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) pts[i] = sample.point(i);
  return pts;
}

DiscreteProblem problem_for(const Sample& sample, const Grid& grid, const EntropySpec& entropy) {
  return std::visit([&](const auto& g) { return assemble_problem(g, build_eval_operator(g, sample), entropy, sample); },
                    grid);
}

Diagnostics compute_diagnostics(const Sample& sample, const Grid& grid, const EntropySpec& entropy,
                                std::span<const double> gamma, std::span<const double> phi) {
  const DiscreteProblem problem = problem_for(sample, grid, entropy);
  Diagnostics d;
  const double primal = primal_objective(problem, gamma);
  d.gap = primal - dual_objective(problem, phi);
  d.relative_gap = d.gap / (1.0 + std::abs(primal));
  const auto lg = problem.L.apply(gamma);
  d.fidelity = std::inner_product(problem.w.begin(), problem.w.end(), lg.begin(), 0.0);

  const std::size_t m = problem.size();
  const int dim = problem.dim;
  double mass = 0.0;
  std::array<double, 2> moment{0.0, 0.0};
  for (std::size_t i = 0; i < m; ++i) {
    const double q = problem.s[i] * phi[i];
    mass += q;
    for (int c = 0; c < dim; ++c) moment[c] += q * problem.nodes[dim * i + c];
  }
  d.normalization = mass;
  d.normalization_error = std::abs(mass - 1.0);
  const Point2 mean = sample.mean();
  d.mean_match_error = 0.0;
  for (int c = 0; c < dim; ++c) d.mean_match_error = std::max(d.mean_match_error, std::abs(moment[c] - mean[c]));

  const auto res = cone_residuals(problem, gamma);
  d.min_cone_residual = res.empty() ? 0.0 : *std::min_element(res.begin(), res.end());
  d.min_phi = *std::min_element(phi.begin(), phi.end());

  if (dim == 2) {
    const BgPolygon hull = hull_polygon(sample_points(sample));
    const Grid2D& g2 = std::get<Grid2D>(grid);
    double off = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const Point2 p = g2.node(k);
      if (!bg::covered_by(BgPoint(p[0], p[1]), hull)) off += problem.s[k] * phi[k];
    }
    d.off_hull_mass = off;
  }
  return d;
}

DensityEstimate wrap(const Sample& sample, Grid grid, const EntropySpec& entropy, const SolverResult& r) {
  Diagnostics d = compute_diagnostics(sample, grid, entropy, r.gamma, r.phi);
  d.kkt_residual = r.kkt_residual;
  d.iterations = r.iterations;
  d.status = r.status;
  d.message = r.message;
  return DensityEstimate(sample, std::move(grid), entropy, r.gamma, r.phi, r.eta, std::move(d));
}

template <class G>
DensityEstimate fit_on(const Sample& sample, const G& grid, double alpha, const SolverOptions& options) {
  const EntropySpec entropy(alpha);
  const DiscreteProblem problem = assemble_problem(grid, build_eval_operator(grid, sample), entropy, sample);
  return wrap(sample, grid, entropy, solve(problem, options));
}

}  // namespace

DensityEstimate::DensityEstimate(Sample sample, Grid grid, EntropySpec entropy, std::vector<double> gamma,
                                 std::vector<double> phi, std::vector<double> eta, Diagnostics diagnostics)
    : sample_(std::move(sample)),
      grid_(std::move(grid)),
      entropy_(entropy),
      gamma_(std::move(gamma)),
      phi_(std::move(phi)),
      eta_(std::move(eta)),
      diagnostics_(std::move(diagnostics)) {
  const std::size_t m = std::visit([](const auto& g) { return g.size(); }, grid_);
  if (gamma_.size() != m || phi_.size() != m) throw std::invalid_argument("grid values do not match the grid size");
  const int grid_dim = std::holds_alternative<Grid1D>(grid_) ? 1 : 2;
  if (grid_dim != sample_.dim()) throw std::invalid_argument("grid and sample dimensions differ");
}

const Grid1D& DensityEstimate::grid_1d() const {
  if (const auto* g = std::get_if<Grid1D>(&grid_)) return *g;
  throw std::logic_error("estimate is bivariate");
}

const Grid2D& DensityEstimate::grid_2d() const {
  if (const auto* g = std::get_if<Grid2D>(&grid_)) return *g;
  throw std::logic_error("estimate is univariate");
}

std::span<const double> DensityEstimate::weights() const {
  return std::visit([](const auto& g) { return std::span<const double>(g.s); }, grid_);
}

DensityEstimate fit(const Sample& sample, double alpha, const FitOptions& options) {
  if (sample.dim() == 1) {
    const std::size_t m = options.grid_1d == 0 ? default_grid_size_1d(sample) : options.grid_1d;
    return fit(sample, build_grid_1d(sample, m), alpha, options.solver);
  }
  return fit(sample, build_grid_2d(sample, options.grid_x, options.grid_y, options.margin), alpha, options.solver);
}

DensityEstimate fit(const Sample& sample, const Grid1D& grid, double alpha, const SolverOptions& options) {
  return fit_on(sample, grid, alpha, options);
}

DensityEstimate fit(const Sample& sample, const Grid2D& grid, double alpha, const SolverOptions& options) {
  return fit_on(sample, grid, alpha, options);
}

double eval_g(const DensityEstimate& est, double x) {
  const Grid1D& g = est.grid_1d();
  const std::size_t k = locate_cell(g.xi, x);
  if (k == g.size()) return kInf;
  const auto gamma = est.gamma();
  if (x == g.xi[k]) return gamma[k];
  if (x == g.xi[k + 1]) return gamma[k + 1];
  const double t = (x - g.xi[k]) / (g.xi[k + 1] - g.xi[k]);
  return (1.0 - t) * gamma[k] + t * gamma[k + 1];
}

double eval_g(const DensityEstimate& est, Point2 x) {
  const Grid2D& g = est.grid_2d();
  const std::size_t a = locate_cell(g.x_coords, x[0]);
  const std::size_t b = locate_cell(g.y_coords, x[1]);
  if (a == g.nx() || b == g.ny()) return kInf;
  const double tx = (x[0] - g.x_coords[a]) / (g.x_coords[a + 1] - g.x_coords[a]);
  const double ty = (x[1] - g.y_coords[b]) / (g.y_coords[b + 1] - g.y_coords[b]);
  const auto gamma = est.gamma();
  auto v = [&](std::size_t i, std::size_t j) { return gamma[g.index(i, j)]; };
  // Exact node values when a weight vanishes, avoiding 0·∞ style rounding.
  const double lo = tx == 0.0 ? v(a, b) : tx == 1.0 ? v(a + 1, b) : (1.0 - tx) * v(a, b) + tx * v(a + 1, b);
  const double hi =
      tx == 0.0 ? v(a, b + 1) : tx == 1.0 ? v(a + 1, b + 1) : (1.0 - tx) * v(a, b + 1) + tx * v(a + 1, b + 1);
  if (ty == 0.0) return lo;
  if (ty == 1.0) return hi;
  return (1.0 - ty) * lo + ty * hi;
}

double eval_density(const DensityEstimate& est, double x) {
  const double g = eval_g(est, x);
  return g == kInf ? 0.0 : density_from_g(est.entropy(), g);
}

double eval_density(const DensityEstimate& est, Point2 x) {
  const double g = eval_g(est, x);
  return g == kInf ? 0.0 : density_from_g(est.entropy(), g);
}

double cdf_1d(const DensityEstimate& est, double x) {
  constexpr int kSub = 4;
  const Grid1D& g = est.grid_1d();
  if (!(x > g.xi.front())) return 0.0;
  const double end = std::min(x, g.xi.back());
  const auto gamma = est.gamma();
  const auto phi = est.phi();
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < g.size() && g.xi[k] < end; ++k) {
    const double a = g.xi[k];
    const double b = std::min(g.xi[k + 1], end);
    const double width = g.xi[k + 1] - a;
    const double h = (b - a) / kSub;
    double prev = phi[k];
    for (int j = 1; j <= kSub; ++j) {
      const double t = (h * j) / width;
      const double cur = (j == kSub && b == g.xi[k + 1])
                             ? phi[k + 1]
                             : density_from_g(est.entropy(), (1.0 - t) * gamma[k] + t * gamma[k + 1]);
      total += 0.5 * h * (prev + cur);
      prev = cur;
    }
  }
  return total;
}

const Diagnostics& diagnostics(const DensityEstimate& est) { return est.diagnostics(); }

Diagnostics recompute_diagnostics(const DensityEstimate& est) {
  Diagnostics d = compute_diagnostics(est.sample(), est.grid(), est.entropy(), est.gamma(), est.phi());
  const Diagnostics& stored = est.diagnostics();
  d.kkt_residual = stored.kkt_residual;
  d.iterations = stored.iterations;
  d.status = stored.status;
  d.message = stored.message;
  return d;
}

std::vector<Point2> convex_hull(std::span<const Point2> points) {
  const BgPolygon hull = hull_polygon(points);
  std::vector<Point2> out;
  const auto& ring = hull.outer();
  // Boost closes the ring by repeating the first vertex.
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) out.push_back({ring[i].x(), ring[i].y()});
  return out;
}

}  // namespace rhoconcave
