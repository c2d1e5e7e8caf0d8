#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rhoconcave/estimator.hpp"
#include "rhoconcave/quadrature.hpp"

namespace rhoconcave {

enum class ConcavityClass { kLogConcave, kMinusHalfConcave };

std::string to_string(ConcavityClass c);

/// Analytic univariate target with an inverse-CDF sampler.
struct TargetDensity {
  std::string name;
  RealFunction pdf;
  RealFunction cdf;
  RealFunction quantile;
  double lo = -std::numeric_limits<double>::infinity();  ///< support
  double hi = std::numeric_limits<double>::infinity();
  ConcavityClass concavity = ConcavityClass::kLogConcave;

  /// n draws, deterministic given seed.
  std::vector<double> sample(std::size_t n, std::uint64_t seed) const;
};

/// Targets by name: normal, laplace, gamma3, beta32, weibull31 (log-concave);
/// lognormal, t3, t6, f36, pareto5 (−1/2-concave). Parameterizations are
/// unit scale: Gamma(3, 1), Beta(3, 2), Weibull(shape 3, scale 1),
/// LogNormal(0, 1), F(3, 6), Pareto(scale 1, shape 5).
/// Throws std::invalid_argument for unknown names.
TargetDensity make_target(const std::string& name);

const std::vector<std::string>& log_concave_targets();
const std::vector<std::string>& heavy_tail_targets();

/// Integration range for the metrics; breakpoints mark kinks or jumps of
/// either density and are clipped to [lo, hi].
struct Support {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::vector<double> breakpoints;
};

/// 1 − ∫√(f·g), adaptive quadrature with absolute tolerance abs_tol.
double squared_hellinger(const RealFunction& f, const RealFunction& g, const Support& support,
                         double abs_tol = 1e-6);

/// ∫|f − g|.
double l1_distance(const RealFunction& f, const RealFunction& g, const Support& support, double abs_tol = 1e-6);

/// ∫ [χ⁻¹(−f)·f₀ + ψ*(−f₀) + ψ(χ⁻¹(−f))] over the support; the integrand is
/// pointwise ≥ 0 and vanishes where f = f₀. +∞ when f = 0 where f₀ > 0.
double fisher_gap(const RealFunction& f0, const RealFunction& f, double alpha, const Support& support,
                  double abs_tol = 1e-6);
double fisher_gap(const TargetDensity& f0, const RealFunction& f, double alpha, double abs_tol = 1e-6);

struct FitErrors {
  double hellinger = 0.0;
  double l1 = 0.0;
};

/// Both metrics between a 1D estimate (zero off its grid) and the target.
FitErrors fit_errors(const TargetDensity& target, const DensityEstimate& est, double abs_tol = 1e-6);

/// 64-bit seed for one replicate, independent of evaluation order.
std::uint64_t replicate_seed(std::uint64_t base_seed, const std::string& target, std::size_t n, std::size_t rep);

enum class Metric { kHellinger, kL1 };

std::string to_string(Metric metric);

struct ExperimentCell {
  std::string target;
  std::size_t n = 0;
  double alpha = 1.0;
  /// One entry per successful replicate, in replicate order.
  std::vector<double> hellinger;
  std::vector<double> l1;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;

  double mean(Metric metric) const;
  double median(Metric metric) const;
};

struct ExperimentTable {
  std::size_t reps = 0;
  /// Sorted by (target, n, alpha).
  std::vector<ExperimentCell> cells;
};

struct ExperimentOptions {
  FitOptions fit;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;
  double abs_tol = 1e-6;
};

/// Replicates that throw or do not converge count as failures and are
/// excluded from the error lists.
ExperimentTable run_experiment(const std::vector<std::string>& targets, const std::vector<std::size_t>& sizes,
                               std::size_t reps, const std::vector<double>& alphas, std::uint64_t base_seed,
                               const ExperimentOptions& options = {});

struct RateEstimate {
  double alpha = 1.0;
  double beta = 0.0;
  double std_err = 0.0;
  std::size_t observations = 0;
};

/// Least squares log y = a_target + β log n per estimator α, with y the cell
/// mean (or median). Throws std::invalid_argument with fewer than two sizes.
std::vector<RateEstimate> estimate_rate(const ExperimentTable& table, Metric metric, bool use_median = false);

}  // namespace rhoconcave
