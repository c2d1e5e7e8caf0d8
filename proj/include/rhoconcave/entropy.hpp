#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace rhoconcave {

/// Thrown when a link function is evaluated outside the interior of its
/// domain (or outside the range of the derivative, for the inverse link).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Which closed form a given Rényi index uses.
enum class EntropyBranch {
  kPowerAbove,  ///< α > 1, ψ(x) = (−x)^β/β on x ≤ 0
  kShannon,     ///< α = 1, ψ(x) = e^(−x)
  kPowerBelow,  ///< 0 < α < 1, ψ(x) = x^β/|β| on x > 0
  kLogarithmic  ///< α = 0, ψ(x) = −1/2 − log x on x > 0
};

/// Rényi index α together with its conjugate exponent β = α/(α−1).
///
/// The index selects the primal integrand ψ of the fidelity-plus-integral
/// objective; the fitted density is then ρ-concave with ρ = α − 1
/// (log-concave at α = 1, −1/2-concave at α = 1/2).
class EntropySpec {
 public:
  /// Throws std::invalid_argument for negative or non-finite α.
  explicit EntropySpec(double alpha);

  double alpha() const { return alpha_; }
  EntropyBranch branch() const { return branch_; }

  /// Conjugate exponent; empty for the two limiting cases α ∈ {0, 1}.
  std::optional<double> beta() const;

  bool strictly_convex() const { return branch_ != EntropyBranch::kPowerAbove; }

  /// ψ(x) → 0 as x → +∞ (fails only at α = 0).
  bool satisfies_vanishing_tail() const {
    return branch_ != EntropyBranch::kLogarithmic;
  }

  /// Concavity exponent ρ of the fitted density, α − 1.
  double rho() const { return alpha_ - 1.0; }

  std::string describe() const;

 private:
  double alpha_;
  double beta_;
  EntropyBranch branch_;
};

/// ψ(x), returning +∞ outside the domain.
double psi(const EntropySpec& spec, double x);

/// χ(x) = ψ′(x). Throws DomainError outside the interior of dom ψ.
double psi_prime(const EntropySpec& spec, double x);

/// ψ″(x); zero on the flat branch of α > 1. Throws DomainError like
/// psi_prime.
double psi_second(const EntropySpec& spec, double x);

/// Legendre transform ψ*(y) = sup_x (xy − ψ(x)), +∞ for y > 0.
double psi_conjugate(const EntropySpec& spec, double y);

/// Solution x of χ(x) = y. Throws DomainError when y has no preimage.
double chi_inverse(const EntropySpec& spec, double y);

/// Density value f = −ψ′(g).
double density_from_g(const EntropySpec& spec, double g);

/// Whether x lies in the open interior of dom ψ.
bool in_domain(const EntropySpec& spec, double x);

}  // namespace rhoconcave
