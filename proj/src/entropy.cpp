#include "rhoconcave/entropy.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rhoconcave {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void throw_domain(const char* what, double x) {
  std::ostringstream os;
  os << what << ": argument " << x << " outside the domain";
  throw DomainError(os.str());
}

}  // namespace

EntropySpec::EntropySpec(double alpha) : alpha_(alpha), beta_(0.0) {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw std::invalid_argument("Rényi index must be finite and >= 0");
  }
  if (alpha == 0.0) {
    branch_ = EntropyBranch::kLogarithmic;
  } else if (alpha == 1.0) {
    branch_ = EntropyBranch::kShannon;
  } else {
    branch_ = alpha > 1.0 ? EntropyBranch::kPowerAbove : EntropyBranch::kPowerBelow;
    beta_ = alpha / (alpha - 1.0);
  }
}

std::optional<double> EntropySpec::beta() const {
  if (branch_ == EntropyBranch::kPowerAbove || branch_ == EntropyBranch::kPowerBelow) {
    return beta_;
  }
  return std::nullopt;
}

std::string EntropySpec::describe() const {
  std::ostringstream os;
  os << "alpha=" << alpha_;
  switch (branch_) {
    case EntropyBranch::kShannon: os << " (log-concave)"; break;
    case EntropyBranch::kLogarithmic: os << " (-1-concave)"; break;
    default: os << " (" << rho() << "-concave, beta=" << beta_ << ")"; break;
  }
  return os.str();
}

bool in_domain(const EntropySpec& spec, double x) {
  if (!std::isfinite(x)) return false;
  switch (spec.branch()) {
    case EntropyBranch::kPowerAbove:
    case EntropyBranch::kShannon:
      return true;
    case EntropyBranch::kPowerBelow:
    case EntropyBranch::kLogarithmic:
      return x > 0.0;
  }
  return false;
}

double psi(const EntropySpec& spec, double x) {
  if (std::isnan(x)) return kInf;
  switch (spec.branch()) {
    case EntropyBranch::kShannon:
      return std::exp(-x);
    case EntropyBranch::kPowerAbove: {
      if (x > 0.0) return 0.0;
      const double beta = *spec.beta();
      return std::pow(-x, beta) / beta;
    }
    case EntropyBranch::kPowerBelow: {
      if (x <= 0.0) return kInf;
      const double beta = *spec.beta();
      return -std::pow(x, beta) / beta;
    }
    case EntropyBranch::kLogarithmic:
      if (x <= 0.0) return kInf;
      return -0.5 - std::log(x);
  }
  return kInf;
}

double psi_prime(const EntropySpec& spec, double x) {
  if (!in_domain(spec, x)) throw_domain("psi_prime", x);
  switch (spec.branch()) {
    case EntropyBranch::kShannon:
      return -std::exp(-x);
    case EntropyBranch::kPowerAbove:
      if (x >= 0.0) return 0.0;
      return -std::pow(-x, *spec.beta() - 1.0);
    case EntropyBranch::kPowerBelow:
      return -std::pow(x, *spec.beta() - 1.0);
    case EntropyBranch::kLogarithmic:
      return -1.0 / x;
  }
  return 0.0;
}

double psi_second(const EntropySpec& spec, double x) {
  if (!in_domain(spec, x)) throw_domain("psi_second", x);
  switch (spec.branch()) {
    case EntropyBranch::kShannon:
      return std::exp(-x);
    case EntropyBranch::kPowerAbove: {
      if (x >= 0.0) return 0.0;
      const double beta = *spec.beta();
      return (beta - 1.0) * std::pow(-x, beta - 2.0);
    }
    case EntropyBranch::kPowerBelow: {
      const double beta = *spec.beta();
      return (1.0 - beta) * std::pow(x, beta - 2.0);
    }
    case EntropyBranch::kLogarithmic:
      return 1.0 / (x * x);
  }
  return 0.0;
}

double psi_conjugate(const EntropySpec& spec, double y) {
  if (std::isnan(y) || y > 0.0) return kInf;
  const double a = spec.alpha();
  switch (spec.branch()) {
    case EntropyBranch::kPowerAbove:
      return std::pow(-y, a) / a;
    case EntropyBranch::kShannon:
      if (y == 0.0) return 0.0;
      return -y * std::log(-y) + y;
    case EntropyBranch::kPowerBelow:
      return -std::pow(-y, a) / a;
    case EntropyBranch::kLogarithmic:
      if (y == 0.0) return kInf;
      return -0.5 - std::log(-y);
  }
  return kInf;
}

double chi_inverse(const EntropySpec& spec, double y) {
  if (!std::isfinite(y) || y > 0.0) throw_domain("chi_inverse", y);
  // For the power branches 1/(β − 1) = α − 1.
  const double a = spec.alpha();
  switch (spec.branch()) {
    case EntropyBranch::kPowerAbove:
      if (y == 0.0) return 0.0;
      return -std::pow(-y, a - 1.0);
    case EntropyBranch::kShannon:
      if (y == 0.0) throw_domain("chi_inverse", y);
      return -std::log(-y);
    case EntropyBranch::kPowerBelow:
      if (y == 0.0) throw_domain("chi_inverse", y);
      return std::pow(-y, a - 1.0);
    case EntropyBranch::kLogarithmic:
      if (y == 0.0) throw_domain("chi_inverse", y);
      return -1.0 / y;
  }
  throw_domain("chi_inverse", y);
}

double density_from_g(const EntropySpec& spec, double g) { return -psi_prime(spec, g); }

}  // namespace rhoconcave
