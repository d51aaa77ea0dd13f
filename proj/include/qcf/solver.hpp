#pragma once

// Reference atomistic and QCF solves, truncation error and the error report.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "qcf/lattice.hpp"
#include "qcf/operators.hpp"
#include "qcf/potential.hpp"
#include "qcf/stability.hpp"

namespace qcf {

/// External load f_j: either fixed samples or a function of x = j eps.
class ForceField {
 public:
  static ForceField from_function(std::function<double(double)> fn, std::string description) {
    ForceField f;
    f.fn_ = std::move(fn);
    f.description_ = std::move(description);
    return f;
  }
  static ForceField from_samples(SiteField samples) {
    ForceField f;
    f.description_ = "samples";
    f.samples_ = std::move(samples);
    return f;
  }
  /// f(x) = cos(pi x).
  static ForceField cosine() {
    return from_function([](double x) { return std::cos(std::numbers::pi * x); }, "cos(pi x)");
  }
  static ForceField constant(double value) {
    return from_function([value](double) { return value; }, "const " + std::to_string(value));
  }

  const std::string& description() const { return description_; }

  SiteField sample(IndexRange range, double eps) const {
    if (fn_) {
      return SiteField::generate(range, eps, [&](int j) { return fn_(j * eps); });
    }
    if (samples_.eps() != eps || !samples_.range().contains(range)) {
      throw std::invalid_argument("ForceField: samples on " + samples_.range().str() +
                                  " do not cover " + range.str());
    }
    return samples_.restrict_to(range);
  }

 private:
  std::function<double(double)> fn_;
  SiteField samples_;
  std::string description_;
};

/// The linear system could not be solved to the required accuracy.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, double rcond)
      : std::runtime_error(what + " (reciprocal condition estimate " + std::to_string(rcond) + ")"),
        rcond_(rcond) {}
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

namespace detail {

inline double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Solves the free-site block of L u = rhs; L has rows -L+1..L-1, cols -L..L.
inline Eigen::VectorXd solve_free_block(const LatticeOperator& L, const Eigen::VectorXd& rhs,
                                        const char* who) {
  const Eigen::Index n = static_cast<Eigen::Index>(L.row_range().size());
  const Eigen::MatrixXd a = L.matrix().block(0, 1, n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 64.0 * std::numeric_limits<double>::epsilon())) {
    throw SingularSystemError(std::string(who) + ": system is singular to working precision",
                              rcond);
  }
  Eigen::VectorXd x = lu.solve(rhs);
  // Backward-stable bound on the residual: 1e-10 relative to the load plus
  // the rounding floor of the factorization.
  const double anorm = a.cwiseAbs().rowwise().sum().maxCoeff();
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() * anorm * max_abs(x);
  const double residual = max_abs(a * x - rhs);
  if (residual > 1e-10 * max_abs(rhs) + floor) {
    throw SingularSystemError(std::string(who) + ": residual " + std::to_string(residual) +
                                  " above tolerance",
                              rcond);
  }
  return x;
}

inline Eigen::VectorXd to_eigen(const SiteField& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.values().data(), static_cast<Eigen::Index>(f.size()));
}

}  // namespace detail

/// Solves L^a u = f on -M+1..M-1 with u_{+-M} = 0 (eps = 1/N).
inline SiteField solve_atomistic(const Coefficients& c, const ForceField& f, const DomainSpec& spec) {
  if (!(c.atomistic_margin() > 0.0)) {
    throw std::invalid_argument("solve_atomistic: need phiF + 4 phi2F > 0");
  }
  const double eps = spec.eps();
  const LatticeOperator L = assemble_La(c, spec);
  const SiteField load = f.sample(IndexRange::interior(spec.M), eps);
  const Eigen::VectorXd x = detail::solve_free_block(L, detail::to_eigen(load), "solve_atomistic");
  SiteField u(IndexRange::sites(spec.M), eps);
  for (int j = -spec.M + 1; j <= spec.M - 1; ++j) u[j] = x(j + spec.M - 1);
  return u;
}

struct QcfSolution {
  SiteField u;
  bool outside_stability_regime = false;
};

/// Solves L^qcf u = f on -N+1..N-1 with u_{-N} = bc_left, u_N = bc_right by
/// lifting the boundary values with the affine u^D (L^qcf u^D = 0) and
/// solving for the V0 part.
inline QcfSolution solve_qcf_detailed(const Coefficients& c, const ForceField& f,
                                      const DomainSpec& spec, double bc_left, double bc_right) {
  spec.validate();
  const int N = spec.N;
  const double eps = spec.eps();
  const LatticeOperator L = assemble_Lqcf(c, spec);
  const SiteField load = f.sample(IndexRange::interior(N), eps);
  const Eigen::VectorXd x = detail::solve_free_block(L, detail::to_eigen(load), "solve_qcf");

  SiteField u = SiteField::generate(IndexRange::sites(N), eps, [&](int j) {
    return bc_left + (bc_right - bc_left) * (N + j) / (2.0 * N);
  });
  for (int j = -N + 1; j <= N - 1; ++j) u[j] += x(j + N - 1);
  u[-N] = bc_left;
  u[N] = bc_right;
  return {std::move(u), !(c.qcf_margin() > 0.0)};
}

/// As solve_qcf_detailed; warns on std::clog outside phiF + 8 phi2F > 0.
inline SiteField solve_qcf(const Coefficients& c, const ForceField& f, const DomainSpec& spec,
                           double bc_left, double bc_right) {
  QcfSolution s = solve_qcf_detailed(c, f, spec, bc_left, bc_right);
  if (s.outside_stability_regime) {
    std::clog << "warning: solve_qcf outside the stability regime phiF + 8 phi2F > 0\n";
  }
  return std::move(s.u);
}

namespace detail {

// Rows of L^a (on -M..M) and L^qcf applied by stencil in extended precision.
// The residual t is a small difference of terms of size |u| / eps^2, and
// assembled double entries such as (2 phiF + 2 phi2F) / eps^2 already carry
// rounding of that size.
inline long double la_stencil(const Coefficients& c, const SiteField& u, int j) {
  const int M = u.last();
  const long double e2 = static_cast<long double>(u.eps()) * u.eps();
  const long double u0 = u[j];
  long double s = c.phiF * (2.0L * u0 - u[j - 1] - u[j + 1]);
  if (j == -M + 1) {
    s += c.phi2F * (u0 - u[j + 2]);
  } else if (j == M - 1) {
    s += c.phi2F * (u0 - u[j - 2]);
  } else {
    s += c.phi2F * (2.0L * u0 - u[j - 2] - u[j + 2]);
  }
  return s / e2;
}

inline long double lqcf_stencil(const Coefficients& c, const DomainSpec& spec, const SiteField& u,
                                int j) {
  const long double e2 = static_cast<long double>(u.eps()) * u.eps();
  const long double u0 = u[j];
  if (spec.in_atomistic_region(j)) {
    return (c.phiF * (2.0L * u0 - u[j - 1] - u[j + 1]) +
            c.phi2F * (2.0L * u0 - u[j - 2] - u[j + 2])) / e2;
  }
  const long double k = static_cast<long double>(c.phiF) + 4.0L * c.phi2F;
  return k * (2.0L * u0 - u[j - 1] - u[j + 1]) / e2;
}

}  // namespace detail

/// t = L^qcf u^a - L^a u^a on -N..N (t_{+-N} = 0), computed from the two
/// operator stencils and from eps^2 phi''_2F (centered D^4 u^a) on C.
struct TruncationError {
  SiteField direct;
  SiteField fourth_difference;

  double discrepancy() const { return norm(direct - fourth_difference, kInf); }
};

inline TruncationError truncation_error(const SiteField& u_a, const Coefficients& c,
                                        const DomainSpec& spec) {
  spec.validate();
  const int N = spec.N;
  const int M = spec.M;
  if (M < N + 2) throw std::invalid_argument("truncation_error: M too small for the stencil, need M >= N + 2");
  if (u_a.range() != IndexRange::sites(M)) {
    throw std::invalid_argument("truncation_error: u^a must live on -M..M");
  }
  const double eps = spec.eps();
  const IndexRange sites = IndexRange::sites(N);

  TruncationError t{SiteField(sites, eps), SiteField(sites, eps)};
  const SiteField d4 = diff4_centered(u_a);
  for (int j = -N + 1; j <= N - 1; ++j) {
    t.direct[j] = static_cast<double>(detail::lqcf_stencil(c, spec, u_a, j) -
                                      detail::la_stencil(c, u_a, j));
    t.fourth_difference[j] = spec.in_atomistic_region(j) ? 0.0 : eps * eps * c.phi2F * d4[j];
  }
  return t;
}

/// Is bond index j in C~ = {-N+2..-K+1} u {K+2..N+1}?
inline bool in_extended_continuum(const DomainSpec& spec, int j) {
  return (-spec.N + 2 <= j && j <= -spec.K + 1) || (spec.K + 2 <= j && j <= spec.N + 1);
}

/// One run of the atomistic vs. QCF comparison.
struct ErrorReport {
  int N = 0, K = 0, M = 0;
  double eps = 0.0;
  double err_strain_inf = 0.0;  // ||D(u^a - u^qcf)||_inf
  double bound_rhs = 0.0;       // 4 eps^2 |phi''_2F| ||D^3 u^a||_inf(C~) / (phiF + 8 phi2F)
  double trunc_star = 0.0;      // ||t||_*
  double trunc_bound = 0.0;     // 2 eps^2 |phi''_2F| ||D^3 u^a||_inf(C~)
  double trunc_l1 = 0.0;        // ||t||_{l1_eps}
  double d3_inf = 0.0;          // ||D^3 u^a||_inf(C~)
  double identity_discrepancy = 0.0;
  double rounding_slack = 0.0;  // absolute allowance for floating-point evaluation

  bool error_bound_holds() const { return err_strain_inf <= bound_rhs + rounding_slack; }
  bool trunc_bound_holds() const { return trunc_star <= trunc_bound + rounding_slack; }
  bool trunc_l1_holds() const { return trunc_star <= 0.5 * trunc_l1 + rounding_slack; }
  bool all_hold() const { return error_bound_holds() && trunc_bound_holds() && trunc_l1_holds(); }
};

inline ErrorReport error_report(const Coefficients& c, const ForceField& f, const DomainSpec& spec) {
  spec.validate();
  if (!(c.qcf_margin() > 0.0)) throw std::invalid_argument("error_report: need phiF + 8 phi2F > 0");
  const int N = spec.N;
  const double eps = spec.eps();
  const SiteField ua = solve_atomistic(c, f, spec);
  const SiteField ua_n = ua.restrict_to(IndexRange::sites(N));
  const SiteField uq = solve_qcf_detailed(c, f, spec, ua[-N], ua[N]).u;
  const TruncationError t = truncation_error(ua, c, spec);

  ErrorReport r;
  r.N = N;
  r.K = spec.K;
  r.M = spec.M;
  r.eps = eps;
  const BondField strain_a = diff(ua_n);
  r.err_strain_inf = norm(strain_a - diff(uq), kInf);
  const BondField d3 = diff3(ua);
  for (int j = d3.first(); j <= d3.last(); ++j) {
    if (in_extended_continuum(spec, j)) r.d3_inf = std::max(r.d3_inf, std::abs(d3[j]));
  }
  r.bound_rhs = 4.0 * eps * eps * std::abs(c.phi2F) * r.d3_inf / c.qcf_margin();
  r.trunc_star = dual_norm_star(t.direct);
  r.trunc_bound = 2.0 * eps * eps * std::abs(c.phi2F) * r.d3_inf;
  r.trunc_l1 = norm(t.direct, 1.0);
  r.identity_discrepancy = t.discrepancy();
  r.rounding_slack = 1e-10 * std::max(1.0, norm(strain_a, kInf));
  return r;
}

/// Strain stability of the QCF solve for one load: ||Du^qcf||_inf against
/// 2||f||_* / (phiF + 8 phi2F) plus the boundary term, both as printed,
/// |(u_N - u_{-N}) / (2N)|, and as ||Du^D||_inf = |(u_N - u_{-N}) / (2N eps)|.
struct StabilityCheck {
  double strain_inf = 0.0;
  double load_dual_norm = 0.0;
  double boundary_term_printed = 0.0;
  double boundary_term_strain = 0.0;

  double rhs_printed(const Coefficients& c) const {
    return 2.0 * load_dual_norm / c.qcf_margin() + boundary_term_printed;
  }
  double rhs_strain(const Coefficients& c) const {
    return 2.0 * load_dual_norm / c.qcf_margin() + boundary_term_strain;
  }
};

inline StabilityCheck stability_check(const Coefficients& c, const ForceField& f,
                                      const DomainSpec& spec) {
  const int N = spec.N;
  const SiteField ua = solve_atomistic(c, f, spec);
  const SiteField uq = solve_qcf_detailed(c, f, spec, ua[-N], ua[N]).u;
  SiteField load = f.sample(IndexRange::sites(N), spec.eps());
  load[-N] = 0.0;
  load[N] = 0.0;
  StabilityCheck s;
  s.strain_inf = norm(diff(uq), kInf);
  s.load_dual_norm = dual_norm_star(load);
  s.boundary_term_printed = std::abs((ua[N] - ua[-N]) / (2.0 * N));
  s.boundary_term_strain = std::abs((ua[N] - ua[-N]) / (2.0 * N * spec.eps()));
  return s;
}

}  // namespace qcf
