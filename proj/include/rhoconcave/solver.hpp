#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rhoconcave/cones.hpp"
#include "rhoconcave/entropy.hpp"
#include "rhoconcave/mesh.hpp"

namespace rhoconcave {

/// Convexity constraint: second differences in 1D, Hessian stencils in 2D.
using ConeOperator = std::variant<DifferenceOperator, HessianStencil>;

/// Raised when problem components are inconsistent.
class AssemblyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The finite-dimensional primal
///
///   minimize  wᵀLγ + sᵀΨ(γ)   subject to  γ in the discrete convex cone.
///
/// Assembly verifies wᵀLι = 1 and cone(ι) = 0, which make every dual
/// solution a probability vector (sᵀφ = 1, φ ≥ 0).
struct DiscreteProblem {
  std::vector<double> w;
  EvalOperator L;
  std::vector<double> s;
  EntropySpec entropy;
  ConeOperator cone;
  int dim = 1;
  std::vector<double> nodes;  ///< node coordinates, row-major with stride dim

  std::size_t size() const { return s.size(); }
};

DiscreteProblem assemble_problem(const Grid1D& grid, const EvalOperator& eval_op, const EntropySpec& entropy,
                                 const Sample& sample);
DiscreteProblem assemble_problem(const Grid2D& grid, const EvalOperator& eval_op, const EntropySpec& entropy,
                                 const Sample& sample);
/// Component-level assembly; throws AssemblyError naming the failed check.
DiscreteProblem assemble_problem(std::vector<double> w, EvalOperator eval_op, std::vector<double> s,
                                 EntropySpec entropy, ConeOperator cone, int dim, std::vector<double> nodes);

struct SolverOptions {
  double gap_tol = 1e-7;          ///< relative duality gap
  double kkt_tol = 1e-6;          ///< ∞-norm of the stationarity residual
  int max_newton_iters = 200;
  double barrier_mu0 = 1.0;
  double barrier_shrink = 0.2;
  double armijo_slope = 1e-4;
  double backtrack = 0.5;
  double min_step = 1e-12;
  /// Weight θ of the diagonal log terms in the 2D barrier.
  double diagonal_barrier_weight = 1e-8;
  /// Permit α = 0, whose ψ does not vanish at +∞.
  bool allow_nonvanishing_tail = false;

  void validate() const;
};

enum class SolverStatus { kConverged, kMaxIters, kInfeasibleInput };

std::string to_string(SolverStatus status);

struct SolverResult {
  std::vector<double> gamma;  ///< grid values of g
  std::vector<double> phi;    ///< density values −ψ′(γ)
  /// Cone multipliers: one per row of D in 1D; (Z11, Z22, Z12) of the 2×2
  /// dual matrix per interior node in 2D.
  std::vector<double> eta;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double kkt_residual = 0.0;
  double mu = 0.0;
  int iterations = 0;
  SolverStatus status = SolverStatus::kMaxIters;
  std::string message;
  /// Primal objective at the end of each outer barrier iteration.
  std::vector<double> path_objective;

  bool converged() const { return status == SolverStatus::kConverged; }
  double relative_gap() const;
};

/// wᵀLγ + Σ sᵢψ(γᵢ); +∞ outside dom ψ.
double primal_objective(const DiscreteProblem& problem, std::span<const double> gamma);

/// −Σ sᵢψ*(−φᵢ); −∞ if some φᵢ < 0.
double dual_objective(const DiscreteProblem& problem, std::span<const double> phi);

double duality_gap(const DiscreteProblem& problem, std::span<const double> gamma, std::span<const double> phi);

/// Cone residuals: Dγ in 1D; (H11, H22, det H) per interior node in 2D.
std::vector<double> cone_residuals(const DiscreteProblem& problem, std::span<const double> gamma);

/// Log-barrier path following with damped Newton steps.
SolverResult solve(const DiscreteProblem& problem, const SolverOptions& options = {});

namespace detail {

/// Barrier objective wᵀLγ + sᵀΨ(γ) + μ·B(γ); +∞ when infeasible.
double barrier_objective(const DiscreteProblem& problem, std::span<const double> gamma, double mu,
                         double theta);
std::vector<double> barrier_gradient(const DiscreteProblem& problem, std::span<const double> gamma, double mu,
                                     double theta);
/// Dense Hessian of the barrier objective, row-major m × m (for testing).
std::vector<double> barrier_hessian_dense(const DiscreteProblem& problem, std::span<const double> gamma,
                                          double mu, double theta);

}  // namespace detail

}  // namespace rhoconcave
