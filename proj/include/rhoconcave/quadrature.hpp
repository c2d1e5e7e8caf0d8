#pragma once

#include <functional>
#include <span>
#include <stdexcept>

namespace rhoconcave {

/// Raised when adaptive quadrature misses its absolute tolerance.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using RealFunction = std::function<double(double)>;

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  ///< Kronrod error estimate
};

/// Adaptive 15-point Gauss–Kronrod over [a, b]; either end may be infinite.
QuadratureResult integrate_estimate(const RealFunction& f, double a, double b);

/// As integrate_estimate, throwing QuadratureError when the error estimate
/// exceeds abs_tol.
double integrate(const RealFunction& f, double a, double b, double abs_tol = 1e-6);

/// Integral over [breaks.front(), breaks.back()], split at every interior
/// break. The tolerance is shared across pieces.
double integrate_pieces(const RealFunction& f, std::span<const double> breaks, double abs_tol = 1e-6);

}  // namespace rhoconcave
