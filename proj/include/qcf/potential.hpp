#pragma once

// Pair potentials, linearized spring constants and the computational domain.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace qcf {

/// Two-body potential phi(r) of the dimensionless bond strain r, with its
/// first and second derivatives.
class PairPotential {
 public:
  using Fn = std::function<double(double)>;

  PairPotential(std::string name, Fn value, Fn first, Fn second)
      : name_(std::move(name)),
        value_(std::move(value)),
        first_(std::move(first)),
        second_(std::move(second)) {}

  const std::string& name() const { return name_; }
  double eval(double r) const { return value_(r); }
  double deriv1(double r) const { return first_(r); }
  double deriv2(double r) const { return second_(r); }

 private:
  std::string name_;
  Fn value_, first_, second_;
};

namespace detail {
inline void require_positive_distance(double r) {
  if (!(r > 0.0)) {
    throw std::domain_error("Lennard-Jones evaluated at non-positive distance r = " +
                            std::to_string(r));
  }
}
}  // namespace detail

/// Normalized Lennard-Jones phi(r) = r^-12 - 2 r^-6 (minimum -1 at r = 1).
inline PairPotential lennard_jones() {
  return PairPotential(
      "lj",
      [](double r) {
        detail::require_positive_distance(r);
        const double s6 = std::pow(r, -6);
        return s6 * s6 - 2.0 * s6;
      },
      [](double r) {
        detail::require_positive_distance(r);
        const double s6 = std::pow(r, -6);
        return 12.0 * (s6 - s6 * s6) / r;
      },
      [](double r) {
        detail::require_positive_distance(r);
        const double s6 = std::pow(r, -6);
        return (156.0 * s6 * s6 - 84.0 * s6) / (r * r);
      });
}

/// Harmonic phi(r) = k/2 (r - r0)^2; handy for tests with known linear forces.
inline PairPotential harmonic(double stiffness, double rest) {
  return PairPotential(
      "harmonic",
      [=](double r) { return 0.5 * stiffness * (r - rest) * (r - rest); },
      [=](double r) { return stiffness * (r - rest); },
      [=](double) { return stiffness; });
}

/// Linearized spring constants phi''(F) and phi''(2F).
struct Coefficients {
  double phiF = 1.0;
  double phi2F = 0.0;

  Coefficients() = default;
  Coefficients(double phi_f, double phi_2f) : phiF(phi_f), phi2F(phi_2f) { validate(); }

  static Coefficients from_potential(const PairPotential& phi, double F) {
    return {phi.deriv2(F), phi.deriv2(2.0 * F)};
  }

  void validate() const {
    if (!(phiF > 0.0) || !std::isfinite(phiF)) {
      throw std::invalid_argument("Coefficients: phiF must be positive");
    }
    if (!std::isfinite(phi2F)) throw std::invalid_argument("Coefficients: phi2F not finite");
  }

  /// phi''_F + 4 phi''_2F: positivity makes the atomistic system well posed.
  double atomistic_margin() const { return phiF + 4.0 * phi2F; }
  /// phi''_F + 8 phi''_2F: positivity gives the uniform QCF stability bound.
  double qcf_margin() const { return phiF + 8.0 * phi2F; }
};

/// Computational half-width N (eps = 1/N), atomistic half-width K and
/// reference half-width M.
struct DomainSpec {
  int N = 0;
  int K = 0;
  int M = 0;

  DomainSpec() = default;
  DomainSpec(int n, int k, int m) : N(n), K(k), M(m) { validate(); }
  /// Domain with the reference chain M = m_factor * N.
  static DomainSpec with_factor(int n, int k, int m_factor = 4) { return {n, k, m_factor * n}; }

  double eps() const { return 1.0 / static_cast<double>(N); }

  bool in_atomistic_region(int j) const { return -K <= j && j <= K; }

  void validate() const {
    if (N < 4) throw std::invalid_argument("DomainSpec: N must be at least 4");
    if (K < 2 || 2 * K > N) {
      throw std::invalid_argument("K out of range: need 2 <= K <= N/2 (N = " +
                                  std::to_string(N) + ", K = " + std::to_string(K) + ")");
    }
    if (M < N) {
      throw std::invalid_argument("DomainSpec: reference half-width M = " + std::to_string(M) +
                                  " smaller than N = " + std::to_string(N));
    }
  }
};

}  // namespace qcf
