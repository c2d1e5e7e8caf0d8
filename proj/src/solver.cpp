#include "rhoconcave/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace rhoconcave {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Centering tolerances on λ²/μ, λ the Newton decrement of the barrier
// objective.
constexpr double kLooseCentering = 1.0;
constexpr double kTightCentering = 1e-14;
// Proximal weight keeping the Newton matrix definite when ψ″ vanishes.
constexpr double kProximal = 1e-10;
constexpr int kRefinementSweeps = 1;
// Density level at which nodes without data weight are capped.
constexpr double kCapDensity = 1e-9;
constexpr double kCapDistance = 1e3;

struct LocalBarrier {
  double value = 0.0;
  double grad[3] = {0.0, 0.0, 0.0};
  double hess[3][3] = {};
  // Share of the diagonal terms θ(−log a − log b) in grad and hess (2D).
  double theta_grad[2] = {0.0, 0.0};
  double theta_hess[2] = {0.0, 0.0};
};

// The linear map from γ to cone entries, grouped in blocks: one entry per
// row of D in 1D, (H11, H22, H12) per interior node in 2D, together with
// the log-barrier of each block.
class ConeView {
 public:
  ConeView(const DiscreteProblem& p, double theta)
      : diff_(std::get_if<DifferenceOperator>(&p.cone)),
        hess_(std::get_if<HessianStencil>(&p.cone)),
        theta_(theta) {}

  std::size_t blocks() const { return diff_ ? diff_->rows() : hess_->nodes.size(); }
  int block_size() const { return diff_ ? 1 : 3; }

  double degree() const {
    return diff_ ? static_cast<double>(blocks()) : (2.0 + 2.0 * theta_) * static_cast<double>(blocks());
  }

  std::vector<double> entries(std::span<const double> v) const {
    if (diff_) return diff_->apply(v);
    std::vector<double> e;
    e.reserve(3 * blocks());
    for (const NodeStencil& ns : hess_->nodes) {
      const HessianEntries h = ns.apply(v);
      e.push_back(h.h11);
      e.push_back(h.h22);
      e.push_back(h.h12);
    }
    return e;
  }

  // Barrier of block k with derivatives; false outside the open cone. In 2D
  // a separately maintained determinant may replace ab − c².
  bool local(const std::vector<double>& e, std::size_t k, LocalBarrier& out,
             const std::vector<double>* dets = nullptr) const {
    if (diff_) {
      const double r = e[k];
      if (!(r > 0.0)) return false;
      out.value = -std::log(r);
      out.grad[0] = -1.0 / r;
      out.hess[0][0] = 1.0 / (r * r);
      return true;
    }
    const double a = e[3 * k], b = e[3 * k + 1], c = e[3 * k + 2];
    const double det = dets ? (*dets)[k] : a * b - c * c;
    if (!(a > 0.0) || !(b > 0.0) || !(det > 0.0)) return false;
    const double id = 1.0 / det;
    const double id2 = id * id;
    out.value = -std::log(det) - theta_ * (std::log(a) + std::log(b));
    out.grad[0] = -b * id - theta_ / a;
    out.grad[1] = -a * id - theta_ / b;
    out.grad[2] = 2.0 * c * id;
    out.hess[0][0] = b * b * id2 + theta_ / (a * a);
    out.hess[1][1] = a * a * id2 + theta_ / (b * b);
    out.hess[0][1] = out.hess[1][0] = c * c * id2;
    out.hess[0][2] = out.hess[2][0] = -2.0 * b * c * id2;
    out.hess[1][2] = out.hess[2][1] = -2.0 * a * c * id2;
    out.hess[2][2] = 2.0 * id + 4.0 * c * c * id2;
    out.theta_grad[0] = -theta_ / a;
    out.theta_grad[1] = -theta_ / b;
    out.theta_hess[0] = theta_ / (a * a);
    out.theta_hess[1] = theta_ / (b * b);
    return true;
  }

  double barrier(const std::vector<double>& e, const std::vector<double>* dets = nullptr) const {
    double v = 0.0;
    LocalBarrier lb;
    for (std::size_t k = 0; k < blocks(); ++k) {
      if (!local(e, k, lb, dets)) return kInf;
      v += lb.value;
    }
    return v;
  }

  // Visits the (column, coefficient) pairs of entry q of block k.
  template <typename F>
  void for_each_term(std::size_t k, int q, F&& f) const {
    if (diff_) {
      const auto& c = diff_->row(k);
      for (std::size_t a = 0; a < 3; ++a) f(k + a, c[a]);
      return;
    }
    const NodeStencil& ns = hess_->nodes[k];
    if (q == 0) {
      for (std::size_t a = 0; a < 3; ++a) f(ns.h11.cols[a], ns.h11.coefs[a]);
    } else if (q == 1) {
      for (std::size_t a = 0; a < 3; ++a) f(ns.h22.cols[a], ns.h22.coefs[a]);
    } else {
      for (std::size_t a = 0; a < 4; ++a) f(ns.h12.cols[a], ns.h12.coefs[a]);
    }
  }

  // Adjoint of the entry map applied to block multipliers u, added to out.
  void subtract_adjoint(const std::vector<double>& u, std::vector<double>& out) const {
    const int bs = block_size();
    for (std::size_t k = 0; k < blocks(); ++k) {
      for (int q = 0; q < bs; ++q) {
        const double uq = u[k * bs + q];
        for_each_term(k, q, [&](std::size_t col, double coef) { out[col] -= uq * coef; });
      }
    }
  }

 private:
  const DifferenceOperator* diff_;
  const HessianStencil* hess_;
  double theta_;
};

double barrier_value(const DiscreteProblem& p, const ConeView& cone, std::span<const double> gamma,
                     const std::vector<double>& e, double mu, const std::vector<double>* dets = nullptr) {
  const double b = cone.barrier(e, dets);
  if (b == kInf) return kInf;
  const double f = primal_objective(p, gamma);
  if (f == kInf) return kInf;
  return f + mu * b;
}

// Gradient of the barrier objective at weight μ and its Hessian at weight
// mu_hess. Hessian terms are handed to add() in extended precision.
template <typename AddHessian>
void assemble_newton(const DiscreteProblem& p, const ConeView& cone, std::span<const double> gamma,
                     const std::vector<double>& e, const std::vector<double>& linear, double mu, double mu_hess,
                     Eigen::VectorXd& grad, AddHessian&& add) {
  const std::size_t m = p.size();
  grad.resize(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    grad[i] = linear[i] + p.s[i] * psi_prime(p.entropy, gamma[i]);
    add(i, i, p.s[i] * psi_second(p.entropy, gamma[i]));
  }
  const int bs = cone.block_size();
  LocalBarrier lb;
  for (std::size_t k = 0; k < cone.blocks(); ++k) {
    cone.local(e, k, lb);
    for (int q = 0; q < bs; ++q) {
      const double gq = mu * lb.grad[q];
      cone.for_each_term(k, q, [&](std::size_t col, double coef) { grad[col] += gq * coef; });
      for (int r = 0; r < bs; ++r) {
        const double h = mu_hess * lb.hess[q][r];
        if (h == 0.0) continue;
        cone.for_each_term(k, q, [&](std::size_t ci, double ai) {
          cone.for_each_term(k, r, [&](std::size_t cj, double aj) { add(ci, cj, h * ai * aj); });
        });
      }
    }
  }
}

// Block multipliers −μ∇B at the current entries; 1D values clipped at zero.
std::vector<double> block_multipliers(const ConeView& cone, const std::vector<double>& e, double mu,
                                      const std::vector<double>* dets) {
  const int bs = cone.block_size();
  std::vector<double> u(e.size());
  LocalBarrier lb;
  for (std::size_t k = 0; k < cone.blocks(); ++k) {
    cone.local(e, k, lb, dets);
    for (int q = 0; q < bs; ++q) u[k * bs + q] = -mu * lb.grad[q];
    if (bs == 1) u[k] = std::max(0.0, u[k]);
  }
  return u;
}

// Multipliers of the 1D problem read off from stationarity alone: pairing
// Dᵀη = v with the hinge (x − ξ_p)₊ isolates the row centred at node p.
// Tail sums keep the result accurate even when μ/(Dγ) is not.
std::vector<double> hinge_multipliers(const DiscreteProblem& p, const std::vector<double>& v) {
  const std::size_t m = p.size();
  std::vector<double> eta(m - 2);
  double tail = 0.0;    // Σ_{i ≥ q} v_i
  double moment = 0.0;  // Σ_{i > q} v_i (ξ_i − ξ_q)
  for (std::size_t q = m - 1; q >= 1; --q) {
    tail += v[q];
    moment += (p.nodes[q] - p.nodes[q - 1]) * tail;
    // moment now refers to node q − 1.
    if (q >= 2) eta[q - 2] = 0.5 * (p.nodes[q] - p.nodes[q - 2]) * moment;
  }
  return eta;
}

// Reported multipliers: 1D rows as is; 2D blocks as (Z11, Z22, Z12).
std::vector<double> reported_multipliers(const ConeView& cone, std::vector<double> u) {
  if (cone.block_size() == 3) {
    for (std::size_t k = 0; k < cone.blocks(); ++k) u[3 * k + 2] *= 0.5;
  }
  return u;
}

// Newton step in augmented form. With A = diag(sψ″) and per block the
// barrier Hessian B, the unknowns are the step Δγ and the refreshed block
// multipliers u:
//
//   [  A    −Eᵀ    ] [Δγ]   [ −∇f        ]
//   [ −E  −(μB)⁻¹  ] [ u ] = [ −e (μ/μ_h) ]
//
// Unlike the reduced Hessian A + μEᵀBE it never forms products of large
// barrier terms that have to cancel along affine directions. The pivoted LU
// keeps the elimination stable when block scales span many decades.
class KktSolver {
 public:
  using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1>;
  using SpMat = Eigen::SparseMatrix<double>;

  KktSolver(std::size_t m, std::size_t nb) : m_(m), n_(m + nb) {}

  void reset() { triplets_.clear(); }

  void add_entry(std::size_t i, std::size_t j, double v) {
    triplets_.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
  }

  // Adds v at (i, j) and, off the diagonal, at (j, i).
  void add(std::size_t i, std::size_t j, double v) {
    triplets_.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    if (i != j) triplets_.emplace_back(static_cast<int>(j), static_cast<int>(i), v);
  }

  // Raises a shift on the Δγ block until the factorization succeeds.
  bool solve(const Vec& rhs, double base_shift, Vec& x) {
    const auto n = static_cast<Eigen::Index>(n_);
    for (std::size_t i = 0; i < n_; ++i) triplets_.emplace_back(static_cast<int>(i), static_cast<int>(i), 0.0);
    SpMat k(n, n);
    k.setFromTriplets(triplets_.begin(), triplets_.end());
    double max_diag = 0.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m_); ++i) max_diag = std::max(max_diag, std::abs(k.coeff(i, i)));
    if (!analyzed_) {
      lu_.analyzePattern(k);
      analyzed_ = true;
    }
    double shift = base_shift;
    for (int attempt = 0; attempt < 12; ++attempt) {
      SpMat h = k;
      if (shift > 0.0) {
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m_); ++i) h.coeffRef(i, i) += shift;
      }
      lu_.factorize(h);
      if (lu_.info() == Eigen::Success) {
        x = lu_.solve(rhs);
        for (int sweep = 0; sweep < kRefinementSweeps && x.allFinite(); ++sweep) {
          const Vec resid = rhs - h * x;
          x += lu_.solve(resid);
        }
        if (x.allFinite()) {
          shift_ = shift;
          return true;
        }
      }
      shift = shift == 0.0 ? 1e-12 * std::max(max_diag, 1.0) : shift * 100.0;
    }
    return false;
  }

  double shift() const { return shift_; }

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<Eigen::Triplet<double>> triplets_;
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
  double shift_ = 0.0;
};

}  // namespace

void SolverOptions::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(gap_tol) || !positive(kkt_tol) || !positive(barrier_mu0) || !positive(armijo_slope) ||
      !positive(min_step) || max_newton_iters <= 0 || !(diagonal_barrier_weight >= 0.0)) {
    throw std::invalid_argument("solver options must be positive");
  }
  if (!(barrier_shrink > 0.0 && barrier_shrink < 1.0)) {
    throw std::invalid_argument("barrier_shrink must lie in (0, 1)");
  }
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("backtrack must lie in (0, 1)");
}

std::string to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::kConverged: return "converged";
    case SolverStatus::kMaxIters: return "max_iters";
    case SolverStatus::kInfeasibleInput: return "infeasible_input";
  }
  return "unknown";
}

double SolverResult::relative_gap() const { return gap / (1.0 + std::abs(primal_value)); }

DiscreteProblem assemble_problem(std::vector<double> w, EvalOperator eval_op, std::vector<double> s,
                                 EntropySpec entropy, ConeOperator cone, int dim, std::vector<double> nodes) {
  const std::size_t m = s.size();
  if (eval_op.rows() != w.size()) throw AssemblyError("evaluation operator rows do not match the weight count");
  if (eval_op.cols() != m) throw AssemblyError("evaluation operator columns do not match the grid size");
  const std::size_t cone_cols = std::visit(
      [](const auto& c) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, DifferenceOperator>) {
          return c.cols();
        } else {
          return c.cols;
        }
      },
      cone);
  if (cone_cols != m) throw AssemblyError("cone operator columns do not match the grid size");
  if (dim < 1 || dim > 2 || nodes.size() != m * static_cast<std::size_t>(dim)) {
    throw AssemblyError("node coordinates do not match the grid size");
  }

  const std::vector<double> ones(m, 1.0);
  const auto l_ones = eval_op.apply(ones);
  const double wl = std::inner_product(w.begin(), w.end(), l_ones.begin(), 0.0);
  if (std::abs(wl - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "precondition w'L1 = 1 violated (got " << wl << ")";
    throw AssemblyError(os.str());
  }
  double worst = 0.0;
  if (const auto* D = std::get_if<DifferenceOperator>(&cone)) {
    const auto r = D->apply(ones);
    for (std::size_t j = 0; j < r.size(); ++j) {
      const auto& c = D->row(j);
      worst = std::max(worst, std::abs(r[j]) / (std::abs(c[0]) + std::abs(c[1]) + std::abs(c[2])));
    }
  } else {
    for (const NodeStencil& ns : std::get<HessianStencil>(cone).nodes) {
      const HessianEntries h = ns.apply(ones);
      worst = std::max({worst, std::abs(h.h11), std::abs(h.h22), std::abs(h.h12)});
    }
  }
  if (worst > 1e-12) throw AssemblyError("precondition cone(1) = 0 violated");

  return DiscreteProblem{std::move(w), std::move(eval_op), std::move(s), entropy, std::move(cone), dim,
                         std::move(nodes)};
}

DiscreteProblem assemble_problem(const Grid1D& grid, const EvalOperator& eval_op, const EntropySpec& entropy,
                                 const Sample& sample) {
  if (sample.dim() != 1) throw AssemblyError("1D grid with a bivariate sample");
  return assemble_problem(std::vector<double>(sample.weights().begin(), sample.weights().end()), eval_op, grid.s,
                          entropy, second_difference_operator(grid), 1, grid.xi);
}

DiscreteProblem assemble_problem(const Grid2D& grid, const EvalOperator& eval_op, const EntropySpec& entropy,
                                 const Sample& sample) {
  if (sample.dim() != 2) throw AssemblyError("2D grid with a univariate sample");
  std::vector<double> nodes;
  nodes.reserve(2 * grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point2 p = grid.node(k);
    nodes.push_back(p[0]);
    nodes.push_back(p[1]);
  }
  return assemble_problem(std::vector<double>(sample.weights().begin(), sample.weights().end()), eval_op, grid.s,
                          entropy, build_hessian_stencil(grid), 2, std::move(nodes));
}

double primal_objective(const DiscreteProblem& problem, std::span<const double> gamma) {
  const auto lg = problem.L.apply(gamma);
  double v = std::inner_product(problem.w.begin(), problem.w.end(), lg.begin(), 0.0);
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const double p = psi(problem.entropy, gamma[i]);
    if (p == kInf) return kInf;
    v += problem.s[i] * p;
  }
  return v;
}

double dual_objective(const DiscreteProblem& problem, std::span<const double> phi) {
  double v = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i) {
    if (!(phi[i] >= 0.0)) return -kInf;
    const double c = psi_conjugate(problem.entropy, -phi[i]);
    if (c == kInf) return -kInf;
    v -= problem.s[i] * c;
  }
  return v;
}

double duality_gap(const DiscreteProblem& problem, std::span<const double> gamma, std::span<const double> phi) {
  return primal_objective(problem, gamma) - dual_objective(problem, phi);
}

std::vector<double> cone_residuals(const DiscreteProblem& problem, std::span<const double> gamma) {
  if (const auto* D = std::get_if<DifferenceOperator>(&problem.cone)) return D->apply(gamma);
  std::vector<double> out;
  for (const NodeStencil& ns : std::get<HessianStencil>(problem.cone).nodes) {
    const PsdResiduals r = psd_residuals(ns.apply(gamma));
    out.push_back(r.r1);
    out.push_back(r.r2);
    out.push_back(r.r3);
  }
  return out;
}

namespace detail {

double barrier_objective(const DiscreteProblem& problem, std::span<const double> gamma, double mu, double theta) {
  const ConeView cone(problem, theta);
  return barrier_value(problem, cone, gamma, cone.entries(gamma), mu);
}

std::vector<double> barrier_gradient(const DiscreteProblem& problem, std::span<const double> gamma, double mu,
                                     double theta) {
  const ConeView cone(problem, theta);
  const auto linear = problem.L.apply_transpose(problem.w);
  Eigen::VectorXd g;
  assemble_newton(problem, cone, gamma, cone.entries(gamma), linear, mu, mu, g,
                  [](std::size_t, std::size_t, double) {});
  return {g.data(), g.data() + g.size()};
}

std::vector<double> barrier_hessian_dense(const DiscreteProblem& problem, std::span<const double> gamma, double mu,
                                          double theta) {
  const ConeView cone(problem, theta);
  const std::size_t m = problem.size();
  const auto linear = problem.L.apply_transpose(problem.w);
  std::vector<double> h(m * m, 0.0);
  Eigen::VectorXd g;
  assemble_newton(problem, cone, gamma, cone.entries(gamma), linear, mu, mu, g,
                  [&](std::size_t i, std::size_t j, double v) { h[i * m + j] += v; });
  return {h.begin(), h.end()};
}

}  // namespace detail

SolverResult solve(const DiscreteProblem& problem, const SolverOptions& options) {
  options.validate();
  const EntropySpec& spec = problem.entropy;
  if (!spec.satisfies_vanishing_tail() && !options.allow_nonvanishing_tail) {
    throw std::invalid_argument(
        "alpha = 0 does not vanish at infinity, so existence of a solution is not guaranteed; "
        "enable allow_nonvanishing_tail to attempt it anyway");
  }

  const std::size_t m = problem.size();
  const double theta = problem.dim == 2 ? options.diagonal_barrier_weight : 0.0;
  const ConeView cone(problem, theta);
  const auto linear = problem.L.apply_transpose(problem.w);
  const double prox = spec.strictly_convex() ? 0.0 : 2.0 * kProximal;
  const double volume = std::accumulate(problem.s.begin(), problem.s.end(), 0.0);

  // Nodes without data weight may rise without bound while log det H grows,
  // so they get an upper bound far above the uniform level, where the
  // density is below kCapDensity / V.
  std::vector<std::size_t> capped;
  for (std::size_t i = 0; i < m; ++i) {
    if (linear[i] == 0.0) capped.push_back(i);
  }
  const double level = chi_inverse(spec, -1.0 / volume);
  const double cap = std::max(chi_inverse(spec, -kCapDensity / volume), level + kCapDistance * std::max(1.0, std::abs(level)));
  const double nu = cone.degree() + static_cast<double>(capped.size());
  auto cap_barrier = [&](std::span<const double> g) {
    double v = 0.0;
    for (std::size_t i : capped) {
      const double slack = cap - g[i];
      if (!(slack > 0.0)) return kInf;
      v -= std::log(slack);
    }
    return v;
  };

  SolverResult result;
  // barrier_mu0 is the duality gap of the first central point.
  double mu = options.barrier_mu0 / nu;
  auto total_barrier = [&](std::span<const double> g, const std::vector<double>& e, const std::vector<double>* d) {
    const double b = cap_barrier(g);
    return b == kInf ? kInf : barrier_value(problem, cone, g, e, mu, d) + mu * b;
  };

  // Uniform density on the grid plus a convex quadratic bump that moves it
  // into the interior of the cone. The bump size is the best one along the
  // ray, starting from 1e-6 of the objective scale.
  std::vector<double> center(static_cast<std::size_t>(problem.dim), 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    for (int d = 0; d < problem.dim; ++d) center[d] += problem.s[k] * problem.nodes[k * problem.dim + d] / volume;
  }
  std::vector<double> quad(m, 0.0);
  double quad_max = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    for (int d = 0; d < problem.dim; ++d) {
      const double dx = problem.nodes[k * problem.dim + d] - center[d];
      quad[k] += dx * dx;
    }
    quad_max = std::max(quad_max, quad[k]);
  }
  const double eps0 = 1e-6 * std::max(1.0, std::abs(level)) / std::max(quad_max, 1e-300);
  std::vector<double> gamma(m);
  // Constants lie in the null space of the entry map, so the entries of the
  // start are those of the bump alone.
  const std::vector<double> quad_entries = cone.entries(quad);
  std::vector<double> entries(quad_entries.size());
  // 2D determinants, carried like the entries.
  const bool has_dets = cone.block_size() == 3;
  std::vector<double> dets(has_dets ? cone.blocks() : 0);
  std::vector<double> quad_dets(dets.size());
  for (std::size_t k = 0; k < dets.size(); ++k) {
    const double* e = &quad_entries[3 * k];
    quad_dets[k] = e[0] * e[1] - e[2] * e[2];
  }
  const std::vector<double>* det_ptr = has_dets ? &dets : nullptr;
  auto bump = [&](double log_eps) {
    const double eps = std::exp(log_eps);
    for (std::size_t k = 0; k < m; ++k) gamma[k] = level + eps * quad[k];
    for (std::size_t k = 0; k < entries.size(); ++k) entries[k] = eps * quad_entries[k];
    for (std::size_t k = 0; k < dets.size(); ++k) dets[k] = eps * eps * quad_dets[k];
    return total_barrier(gamma, entries, det_ptr);
  };
  const double lo = std::log(eps0);
  const double f_lo = bump(lo);
  if (!std::isfinite(f_lo)) {
    result.gamma = gamma;
    result.status = SolverStatus::kInfeasibleInput;
    result.message = "no strictly feasible starting point";
    return result;
  }
  const auto best = boost::math::tools::brent_find_minima(bump, lo, lo + 40.0, 24);
  bump(best.second < f_lo ? best.first : lo);

  // From here on the cone entries are carried along with γ and updated by
  // the entry change of each step rather than recomputed, so small slacks
  // keep their accuracy.
  const int bs = cone.block_size();
  const std::size_t nb = entries.size();
  std::vector<double> trial(m), trial_entries(nb), step_entries, step_u(nb);
  std::vector<double> trial_dets(dets.size()), det_lin(dets.size()), det_quad(dets.size());
  const std::vector<double>* trial_det_ptr = has_dets ? &trial_dets : nullptr;
  KktSolver kkt(m, nb);
  KktSolver::Vec rhs(static_cast<Eigen::Index>(m + nb)), sol;
  std::vector<double> step(m), curvature(m);
  std::vector<char> augmented(cone.blocks());
  int iterations = 0;
  double fval = kInf;
  double decrement = 0.0;

  auto newton_step = [&](double mu_hess) {
    kkt.reset();
    for (std::size_t i = 0; i < m; ++i) {
      curvature[i] = problem.s[i] * psi_second(spec, gamma[i]);
      kkt.add(i, i, curvature[i]);
      rhs[static_cast<Eigen::Index>(i)] = -(linear[i] + problem.s[i] * psi_prime(spec, gamma[i]));
    }
    for (std::size_t i : capped) {
      const double slack = cap - gamma[i];
      kkt.add(i, i, mu_hess / (slack * slack));
      rhs[static_cast<Eigen::Index>(i)] -= mu / slack;
    }
    const double ratio = mu / mu_hess;
    LocalBarrier lb;
    for (std::size_t k = 0; k < cone.blocks(); ++k) {
      cone.local(entries, k, lb, det_ptr);
      const std::size_t row0 = m + k * bs;
      // Blocks whose barrier curvature dominates the entropy curvature keep
      // their multipliers as unknowns; the rest are eliminated in place.
      double entropy_scale = prox;
      double barrier_scale = 0.0;
      for (int q = 0; q < bs; ++q) {
        double norm2 = 0.0;
        cone.for_each_term(k, q, [&](std::size_t col, double coef) {
          entropy_scale = std::max(entropy_scale, curvature[col]);
          norm2 += coef * coef;
        });
        barrier_scale = std::max(barrier_scale, mu_hess * lb.hess[q][q] * norm2);
      }
      augmented[k] = barrier_scale > entropy_scale;
      const double keep = augmented[k] ? 1.0 : 0.0;
      const double fold = 1.0 - keep;
      for (int q = 0; q < bs; ++q) {
        cone.for_each_term(k, q, [&](std::size_t col, double coef) {
          kkt.add(row0 + q, col, -keep * coef);
          rhs[static_cast<Eigen::Index>(col)] -= fold * mu * lb.grad[q] * coef;
        });
        rhs[static_cast<Eigen::Index>(row0 + q)] = -keep * ratio * entries[k * bs + q];
        for (int r = 0; r < bs; ++r) {
          const double h = fold * mu_hess * lb.hess[q][r];
          cone.for_each_term(k, q, [&](std::size_t ci, double ai) {
            cone.for_each_term(k, r, [&](std::size_t cj, double aj) { kkt.add_entry(ci, cj, h * ai * aj); });
          });
        }
      }
      if (!augmented[k]) {
        for (int q = 0; q < bs; ++q) {
          for (int r = 0; r <= q; ++r) kkt.add(row0 + q, row0 + r, q == r ? 1.0 : 0.0);
        }
      } else if (bs == 1) {
        const double r = entries[k];
        kkt.add(row0, row0, -r * r / mu_hess);
      } else {
        // Inverse Hessian of −log det X is W ↦ XWX; the θ terms are folded.
        const double ea = entries[3 * k], eb = entries[3 * k + 1], ec = entries[3 * k + 2];
        const double inv[3][3] = {{ea * ea, ec * ec, ea * ec},
                                  {ec * ec, eb * eb, eb * ec},
                                  {ea * ec, eb * ec, 0.5 * (ea * eb + ec * ec)}};
        for (int q = 0; q < 3; ++q) {
          for (int r = 0; r <= q; ++r) kkt.add(row0 + q, row0 + r, -inv[q][r] / mu_hess);
        }
        for (int q = 0; q < 2; ++q) {
          const double h = mu_hess * lb.theta_hess[q];
          const double g = mu * lb.theta_grad[q];
          cone.for_each_term(k, q, [&](std::size_t ci, double ai) {
            rhs[static_cast<Eigen::Index>(ci)] -= g * ai;
            cone.for_each_term(k, q, [&](std::size_t cj, double aj) { kkt.add_entry(ci, cj, h * ai * aj); });
          });
        }
      }
    }
    if (!kkt.solve(rhs, prox, sol)) return false;
    for (std::size_t i = 0; i < m; ++i) step[i] = sol[static_cast<Eigen::Index>(i)];
    for (std::size_t k = 0; k < nb; ++k) step_u[k] = sol[static_cast<Eigen::Index>(m + k)];
    step_entries = cone.entries(step);
    // det(e + t·d) = det + t·(a d_b + b d_a − 2c d_c) + t²·(d_a d_b − d_c²)
    for (std::size_t k = 0; k < dets.size(); ++k) {
      const double* e = &entries[3 * k];
      const double* d = &step_entries[3 * k];
      det_lin[k] = e[0] * d[1] + e[1] * d[0] - 2.0 * e[2] * d[2];
      det_quad[k] = d[0] * d[1] - d[2] * d[2];
    }
    for (std::size_t k = 0; k < cone.blocks(); ++k) {
      cone.local(entries, k, lb, det_ptr);
      if (augmented[k]) {
        if (bs == 3) {
          for (int q = 0; q < 2; ++q) {
            step_u[3 * k + q] -= mu * lb.theta_grad[q] + mu_hess * lb.theta_hess[q] * step_entries[3 * k + q];
          }
        }
        continue;
      }
      for (int q = 0; q < bs; ++q) {
        double v = mu * lb.grad[q];
        for (int r = 0; r < bs; ++r) v += mu_hess * lb.hess[q][r] * step_entries[k * bs + r];
        step_u[k * bs + q] = -v;
      }
    }
    // λ² = Δγᵀ(A + μ_h EᵀBE)Δγ, summed term by term.
    double dec = 0.0;
    const double diag_shift = kkt.shift();
    for (std::size_t i = 0; i < m; ++i) dec += (curvature[i] + diag_shift) * step[i] * step[i];
    for (std::size_t i : capped) {
      const double slack = cap - gamma[i];
      dec += mu_hess * step[i] * step[i] / (slack * slack);
    }
    for (std::size_t k = 0; k < cone.blocks(); ++k) {
      cone.local(entries, k, lb, det_ptr);
      for (int q = 0; q < bs; ++q) {
        for (int r = 0; r < bs; ++r) {
          dec += mu_hess * lb.hess[q][r] * step_entries[k * bs + q] * step_entries[k * bs + r];
        }
      }
    }
    decrement = dec;
    return true;
  };

  // Damped Newton on the barrier objective at the current μ. With
  // mu_prev > μ the first Hessian is taken at mu_prev, which makes that step
  // a tangent step along the central path.
  enum class CenterOutcome { kCentered, kStalled, kIterLimit };
  auto center_at = [&](double tol, double mu_prev) -> CenterOutcome {
    fval = total_barrier(gamma, entries, det_ptr);
    double mu_hess = mu_prev;
    double last_decrement = kInf;
    while (true) {
      if (!newton_step(mu_hess)) return CenterOutcome::kStalled;
      const bool quadratic = mu_hess == mu && decrement <= 0.25 * mu;
      if (mu_hess == mu) {
        if (!(decrement > tol * mu)) return CenterOutcome::kCentered;
        // rounding-limited: the full step no longer shrinks the decrement
        if (quadratic && decrement > 0.25 * last_decrement) return CenterOutcome::kCentered;
      }
      if (iterations >= options.max_newton_iters) return CenterOutcome::kIterLimit;
      mu_hess = mu;
      ++iterations;

      double t = 1.0;
      double fnew = kInf;
      const double slack = 1e-14 * (1.0 + std::abs(fval));
      while (t >= options.min_step) {
        for (std::size_t i = 0; i < m; ++i) trial[i] = gamma[i] + t * step[i];
        for (std::size_t k = 0; k < entries.size(); ++k) trial_entries[k] = entries[k] + t * step_entries[k];
        for (std::size_t k = 0; k < dets.size(); ++k) trial_dets[k] = dets[k] + t * (det_lin[k] + t * det_quad[k]);
        fnew = total_barrier(trial, trial_entries, trial_det_ptr);
        if (quadratic && std::isfinite(fnew)) break;
        if (fnew <= fval - options.armijo_slope * t * decrement + slack) break;
        t *= options.backtrack;
      }
      if (t < options.min_step) return CenterOutcome::kStalled;
      gamma.swap(trial);
      entries.swap(trial_entries);
      dets.swap(trial_dets);
      fval = fnew;
      last_decrement = quadratic ? decrement : kInf;
    }
  };

  auto finish = [&](SolverStatus status) {
    result.gamma = gamma;
    result.phi.resize(m);
    for (std::size_t i = 0; i < m; ++i) result.phi[i] = density_from_g(spec, gamma[i]);
    result.primal_value = primal_objective(problem, gamma);
    result.dual_value = dual_objective(problem, result.phi);
    result.gap = result.primal_value - result.dual_value;
    std::vector<double> res(m);
    for (std::size_t i = 0; i < m; ++i) res[i] = linear[i] + problem.s[i] * psi_prime(spec, gamma[i]);
    std::vector<double> u;
    if (cone.block_size() == 1) {
      u = hinge_multipliers(problem, res);
      for (double& v : u) v = std::max(v, 0.0);
    } else {
      if (newton_step(mu)) {
        u = step_u;
      } else {
        u = block_multipliers(cone, entries, mu, det_ptr);
      }
    }
    cone.subtract_adjoint(u, res);
    result.kkt_residual = 0.0;
    for (double v : res) result.kkt_residual = std::max(result.kkt_residual, std::abs(v));
    result.eta = reported_multipliers(cone, u);
    result.mu = mu;
    result.iterations = iterations;
    result.status = status;
    return result;
  };

  double mu_prev = mu;
  while (true) {
    const CenterOutcome loose = center_at(kLooseCentering, mu_prev);
    if (loose == CenterOutcome::kIterLimit) {
      result.message = "Newton iteration limit reached";
      return finish(SolverStatus::kMaxIters);
    }
    const double primal = primal_objective(problem, gamma);
    if (!std::isfinite(primal) || primal < -1e15) {
      result.message = "objective unbounded below";
      return finish(SolverStatus::kMaxIters);
    }
    const double target = options.gap_tol * (1.0 + std::abs(primal));
    mu_prev = mu;
    if (nu * mu <= 0.5 * target) {
      const CenterOutcome tight = center_at(kTightCentering, mu);
      result.path_objective.push_back(primal_objective(problem, gamma));
      finish(SolverStatus::kConverged);
      if (std::abs(result.relative_gap()) <= options.gap_tol && result.kkt_residual <= options.kkt_tol) return result;
      if (tight == CenterOutcome::kIterLimit) {
        result.message = "Newton iteration limit reached";
        result.status = SolverStatus::kMaxIters;
        return result;
      }
      if (mu < 1e-300) {
        result.message = "barrier parameter underflow";
        result.status = SolverStatus::kMaxIters;
        return result;
      }
      mu *= options.barrier_shrink;
    } else {
      result.path_objective.push_back(primal);
      mu = std::max(mu * options.barrier_shrink, 0.5 * target / nu);
    }
  }
}

}  // namespace rhoconcave
