#include "rhoconcave/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace rhoconcave {

namespace {

constexpr unsigned kMaxDepth = 10;
constexpr double kRelativeTol = 1e-9;

[[noreturn]] void fail(double a, double b, double error, double tol) {
  std::ostringstream os;
  os << "quadrature on [" << a << ", " << b << "] has error estimate " << error << " above tolerance " << tol;
  throw QuadratureError(os.str());
}

}  // namespace

QuadratureResult integrate_estimate(const RealFunction& f, double a, double b) {
  QuadratureResult r;
  if (a == b) return r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, kMaxDepth, kRelativeTol, &r.error);
  if (r.error <= kRelativeTol * std::max(1.0, std::abs(r.value))) return r;
  // Endpoint singularities such as x^(1/2) at a support edge: retry with a
  // double-exponential rule suited to the interval type.
  QuadratureResult alt;
  try {
    if (std::isfinite(a) && std::isfinite(b)) {
      thread_local boost::math::quadrature::tanh_sinh<double> ts;
      alt.value = ts.integrate(f, a, b, kRelativeTol, &alt.error);
    } else if (std::isfinite(a) || std::isfinite(b)) {
      thread_local boost::math::quadrature::exp_sinh<double> es;
      alt.value = es.integrate(f, a, b, kRelativeTol, &alt.error);
    } else {
      thread_local boost::math::quadrature::sinh_sinh<double> ss;
      alt.value = ss.integrate(f, kRelativeTol, &alt.error);
    }
  } catch (const std::exception&) {
    return r;
  }
  if (std::isfinite(alt.value) && alt.error < r.error) r = alt;
  return r;
}

namespace {

double split_point(double a, double b) {
  if (std::isfinite(a) && std::isfinite(b)) return 0.5 * (a + b);
  if (std::isfinite(a)) return a + std::max(1.0, std::abs(a));
  if (std::isfinite(b)) return b - std::max(1.0, std::abs(b));
  return 0.0;
}

// Bisects until each piece meets its share of the error budget. A split
// that does not lower the error estimate means the estimate sits at a
// rounding floor (cancellation in the integrand), so bisection stops there.
QuadratureResult refine(const RealFunction& f, double a, double b, double budget, int depth,
                        const QuadratureResult& r) {
  constexpr int kMaxSplits = 30;
  if (r.error <= budget || depth >= kMaxSplits) return r;
  const double m = split_point(a, b);
  if (!(m > a && m < b)) return r;
  const QuadratureResult lo_est = integrate_estimate(f, a, m);
  const QuadratureResult hi_est = integrate_estimate(f, m, b);
  if (!(lo_est.error + hi_est.error < r.error)) return r;
  const QuadratureResult lo = refine(f, a, m, 0.5 * budget, depth + 1, lo_est);
  const QuadratureResult hi = refine(f, m, b, 0.5 * budget, depth + 1, hi_est);
  return {lo.value + hi.value, lo.error + hi.error};
}

QuadratureResult refine(const RealFunction& f, double a, double b, double budget) {
  return refine(f, a, b, budget, 0, integrate_estimate(f, a, b));
}

}  // namespace

double integrate(const RealFunction& f, double a, double b, double abs_tol) {
  const QuadratureResult r = refine(f, a, b, abs_tol);
  if (!std::isfinite(r.value) || r.error > abs_tol) fail(a, b, r.error, abs_tol);
  return r.value;
}

double integrate_pieces(const RealFunction& f, std::span<const double> breaks, double abs_tol) {
  double total = 0.0, error = 0.0;
  const double budget = abs_tol / static_cast<double>(std::max<std::size_t>(breaks.size(), 2) - 1);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const QuadratureResult r = refine(f, breaks[k], breaks[k + 1], budget);
    total += r.value;
    error += r.error;
  }
  if (!std::isfinite(total) || error > abs_tol) fail(breaks.front(), breaks.back(), error, abs_tol);
  return total;
}

}  // namespace rhoconcave
