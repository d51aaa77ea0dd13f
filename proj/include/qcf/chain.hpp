#pragma once

// Nonlinear next-nearest-neighbour chain: energies and the atomistic,
// local QC and force-based QC force fields.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qcf/lattice.hpp"
#include "qcf/potential.hpp"

namespace qcf {

/// Deformed state y_j = F j eps + u_j over sites -L..L.
///
/// Keeping the macroscopic gradient F apart from the displacement u lets the
/// bond strains of a uniform state be formed exactly (r_j = F), so force
/// residuals at y^F are not polluted by the rounding of F j eps.
struct Deformation {
  double gradient = 0.0;
  SiteField displacement;

  static Deformation uniform(double F, int half_width, double eps) {
    return {F, SiteField(IndexRange::sites(half_width), eps)};
  }
  static Deformation from_positions(SiteField y) { return {0.0, std::move(y)}; }

  IndexRange range() const { return displacement.range(); }
  double eps() const { return displacement.eps(); }
  int half_width() const { return displacement.last(); }

  double position(int j) const { return gradient * j * eps() + displacement[j]; }
  SiteField positions() const {
    return SiteField::generate(range(), eps(), [&](int j) { return position(j); });
  }

  /// Nearest-neighbour strain (y_j - y_{j-1}) / eps.
  double strain(int j) const {
    return gradient + (displacement[j] - displacement[j - 1]) / eps();
  }
  /// Next-nearest-neighbour strain (y_j - y_{j-2}) / eps.
  double strain2(int j) const {
    return 2.0 * gradient + (displacement[j] - displacement[j - 2]) / eps();
  }

  void require_symmetric() const {
    if (range().first != -range().last || range().last < 2) {
      throw std::invalid_argument("deformation must live on a symmetric range -L..L, L >= 2");
    }
  }
};

/// E^a: nearest plus next-nearest bond energies, each weighted by eps.
inline double energy_atomistic(const Deformation& y, const PairPotential& phi) {
  y.require_symmetric();
  const int L = y.half_width();
  double e = 0.0;
  for (int j = -L + 1; j <= L; ++j) e += phi.eval(y.strain(j));
  for (int j = -L + 2; j <= L; ++j) e += phi.eval(y.strain2(j));
  return y.eps() * e;
}

/// E^lqc: Cauchy-Born energy, every next-nearest bond replaced by 2 r_j.
inline double energy_lqc(const Deformation& y, const PairPotential& phi) {
  y.require_symmetric();
  const int L = y.half_width();
  double e = 0.0;
  for (int j = -L + 1; j <= L; ++j) {
    const double r = y.strain(j);
    e += phi.eval(r) + phi.eval(2.0 * r);
  }
  return y.eps() * e;
}

namespace detail {

// Atomistic force at j; next-nearest terms reaching past the ends are zero.
inline double atomistic_force_at(const Deformation& y, const PairPotential& phi, int j) {
  const int L = y.half_width();
  double right = phi.deriv1(y.strain(j + 1));
  if (j + 2 <= L) right += phi.deriv1(y.strain2(j + 2));
  double left = phi.deriv1(y.strain(j));
  if (j - 2 >= -L) left += phi.deriv1(y.strain2(j));
  return (right - left) / y.eps();
}

inline double lqc_force_at(const Deformation& y, const PairPotential& phi, int j) {
  auto flux = [&](int bond) {
    const double r = y.strain(bond);
    return phi.deriv1(r) + 2.0 * phi.deriv1(2.0 * r);
  };
  return (flux(j + 1) - flux(j)) / y.eps();
}

}  // namespace detail

/// F^a_j = -(1/eps) dE^a/dy_j for the free atoms j = -L+1..L-1.
inline SiteField force_atomistic(const Deformation& y, const PairPotential& phi) {
  y.require_symmetric();
  return SiteField::generate(IndexRange::interior(y.half_width()), y.eps(), [&](int j) {
    return detail::atomistic_force_at(y, phi, j);
  });
}

/// F^lqc_j = -(1/eps) dE^lqc/dy_j for j = -L+1..L-1.
inline SiteField force_lqc(const Deformation& y, const PairPotential& phi) {
  y.require_symmetric();
  return SiteField::generate(IndexRange::interior(y.half_width()), y.eps(), [&](int j) {
    return detail::lqc_force_at(y, phi, j);
  });
}

/// Force-based QC: atomistic force law on A = {-K..K}, local QC law elsewhere,
/// on the free sites -N+1..N-1 of the computational domain.
inline SiteField force_qcf(const Deformation& y, const DomainSpec& spec,
                           const PairPotential& phi) {
  spec.validate();
  if (y.range() != IndexRange::sites(spec.N)) {
    throw std::invalid_argument("force_qcf: deformation range " + y.range().str() +
                                " is not the computational domain " +
                                IndexRange::sites(spec.N).str());
  }
  if (y.eps() != spec.eps()) throw std::invalid_argument("force_qcf: spacing is not 1/N");
  return SiteField::generate(IndexRange::interior(spec.N), y.eps(), [&](int j) {
    return spec.in_atomistic_region(j) ? detail::atomistic_force_at(y, phi, j)
                                       : detail::lqc_force_at(y, phi, j);
  });
}

/// Ghost-force residual of force_qcf at the uniform state y^F.
struct PatchTestResult {
  double max_residual = 0.0;  // max_j |F^qcf_j(y^F)|
  double scale = 0.0;         // (|phi'(F)| + |phi'(2F)|) / eps, floored at 1
  double relative() const { return max_residual / scale; }
};

inline PatchTestResult patch_test(const PairPotential& phi, double F, const DomainSpec& spec) {
  const Deformation y = Deformation::uniform(F, spec.N, spec.eps());
  const SiteField r = force_qcf(y, spec, phi);
  PatchTestResult out;
  for (double v : r.values()) out.max_residual = std::max(out.max_residual, std::abs(v));
  out.scale = std::max(1.0, (std::abs(phi.deriv1(F)) + std::abs(phi.deriv1(2.0 * F))) / spec.eps());
  return out;
}

}  // namespace qcf
