#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "qcf/solver.hpp"

using namespace qcf;
using Catch::Approx;

namespace {

SiteField random_load(int L, double eps, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SiteField f(IndexRange::sites(L), eps);
  for (double& x : f.values()) x = u(rng);
  return f;
}

const Coefficients kCoeff(1.0, -0.05);

}  // namespace

TEST_CASE("zero load gives zero displacement", "[solver]") {
  const DomainSpec spec = DomainSpec::with_factor(16, 4);
  const SiteField ua = solve_atomistic(kCoeff, ForceField::constant(0.0), spec);
  CHECK(norm(ua, kInf) == 0.0);
  const SiteField uq = solve_qcf(kCoeff, ForceField::constant(0.0), spec, 0.0, 0.0);
  CHECK(norm(uq, kInf) == 0.0);
  CHECK(ua.range() == IndexRange::sites(64));
  CHECK(uq.range() == IndexRange::sites(16));
}

TEST_CASE("atomistic solve residual", "[solver]") {
  const DomainSpec spec(32, 8, 64);
  const SiteField f = random_load(64, spec.eps(), 17);
  const SiteField u = solve_atomistic(kCoeff, ForceField::from_samples(f), spec);
  CHECK(u[-64] == 0.0);
  CHECK(u[64] == 0.0);
  const SiteField r = assemble_La(kCoeff, spec).apply(u) - f.restrict_to(IndexRange::interior(64));
  CHECK(norm(r, kInf) <= 1e-10 * norm(f, kInf));
}

TEST_CASE("even loads give even solutions", "[solver]") {
  const DomainSpec spec = DomainSpec::with_factor(32, 8);
  const ForceField f = ForceField::cosine();
  const SiteField ua = solve_atomistic(kCoeff, f, spec);
  const SiteField uq = solve_qcf(kCoeff, f, spec, ua[-32], ua[32]);
  for (int j = 0; j <= spec.M; ++j) CHECK(ua[j] == Approx(ua[-j]).epsilon(1e-10).margin(1e-14));
  for (int j = 0; j <= 32; ++j) {
    CHECK(uq[j] == Approx(uq[-j]).epsilon(1e-10).margin(1e-14));
    CHECK(ua[j] - uq[j] == Approx(ua[-j] - uq[-j]).margin(1e-12));
  }
}

TEST_CASE("qcf solve reproduces affine fields and the load", "[solver]") {
  const DomainSpec spec = DomainSpec::with_factor(16, 4);
  const SiteField u = solve_qcf(kCoeff, ForceField::constant(0.0), spec, -0.3, 0.3);
  for (int j = -16; j <= 16; ++j) CHECK(u[j] == Approx(0.3 * j / 16.0).margin(1e-14));

  const SiteField f = random_load(16, spec.eps(), 4);
  const SiteField v = solve_qcf(kCoeff, ForceField::from_samples(f), spec, 0.1, -0.2);
  CHECK(v[-16] == 0.1);
  CHECK(v[16] == -0.2);
  const SiteField r = assemble_Lqcf(kCoeff, spec).apply(v) - f.restrict_to(IndexRange::interior(16));
  CHECK(norm(r, kInf) <= 1e-10 * norm(f, kInf));
}

TEST_CASE("solver preconditions", "[solver]") {
  const DomainSpec spec = DomainSpec::with_factor(16, 4);
  CHECK_THROWS_AS(solve_atomistic(Coefficients(1.0, -0.25), ForceField::cosine(), spec),
                  std::invalid_argument);
  // phiF + 4 phi2F = 0: the local QC rows vanish and the system is singular
  CHECK_THROWS_AS(solve_qcf_detailed(Coefficients(1.0, -0.25), ForceField::cosine(), spec, 0, 0),
                  SingularSystemError);
  const QcfSolution s = solve_qcf_detailed(Coefficients(1.0, -0.15), ForceField::cosine(), spec, 0, 0);
  CHECK(s.outside_stability_regime);
  CHECK_FALSE(solve_qcf_detailed(kCoeff, ForceField::cosine(), spec, 0, 0).outside_stability_regime);
  const ForceField small = ForceField::from_samples(SiteField(IndexRange::sites(8), spec.eps()));
  CHECK_THROWS_AS(solve_qcf(kCoeff, small, spec, 0, 0), std::invalid_argument);
}

TEST_CASE("warning outside the stability regime", "[solver]") {
  std::ostringstream captured;
  auto* old = std::clog.rdbuf(captured.rdbuf());
  solve_qcf(Coefficients(1.0, -0.15), ForceField::cosine(), DomainSpec::with_factor(16, 4), 0, 0);
  std::clog.rdbuf(old);
  CHECK_THAT(captured.str(), Catch::Matchers::ContainsSubstring("stability regime"));
}

TEST_CASE("truncation error identity", "[solver]") {
  const DomainSpec spec = DomainSpec::with_factor(32, 8);
  const SiteField ua = solve_atomistic(kCoeff, ForceField::cosine(), spec);
  const TruncationError t = truncation_error(ua, kCoeff, spec);
  const double eps = spec.eps();
  for (int j = -8; j <= 8; ++j) CHECK(t.direct[j] == 0.0);
  CHECK(t.direct[-32] == 0.0);
  CHECK(t.direct[32] == 0.0);
  CHECK(t.discrepancy() <= 1e-12 / (eps * eps));
  for (double p : {1.0, 2.0, kInf}) {
    CHECK(norm(t.direct, p) == Approx(norm(t.fourth_difference, p)).epsilon(1e-12));
  }
  CHECK_THROWS_WITH(truncation_error(ua.restrict_to(IndexRange::sites(33)), kCoeff,
                                     DomainSpec(32, 8, 33)),
                    Catch::Matchers::ContainsSubstring("M too small"));
}

TEST_CASE("truncation error matches the assembled operators", "[solver]") {
  const DomainSpec spec = DomainSpec::with_factor(32, 8);
  const SiteField ua = solve_atomistic(kCoeff, ForceField::cosine(), spec);
  const TruncationError t = truncation_error(ua, kCoeff, spec);
  const SiteField lq = assemble_Lqcf(kCoeff, spec).apply(ua.restrict_to(IndexRange::sites(32)));
  const SiteField la = assemble_La(kCoeff, spec).apply(ua);
  for (int j = -31; j <= 31; ++j) {
    CHECK(std::abs(lq[j] - la[j] - t.direct[j]) <= 1e-12 * 32 * 32);
  }
}

TEST_CASE("truncation error vanishes on cubics", "[solver]") {
  const DomainSpec spec(16, 4, 20);
  const double eps = spec.eps();
  const SiteField cubic = SiteField::generate(IndexRange::sites(20), eps, [&](int j) {
    const double x = j * eps;
    return 0.2 * x * x * x - x * x + 0.5;
  });
  const TruncationError t = truncation_error(cubic, kCoeff, spec);
  CHECK(norm(t.direct, kInf) <= 1e-9);
  CHECK(norm(t.fourth_difference, kInf) <= 1e-9);
}

TEST_CASE("error report inequalities", "[solver]") {
  const ErrorReport r = error_report(kCoeff, ForceField::cosine(), DomainSpec::with_factor(32, 8));
  CHECK(r.N == 32);
  CHECK(r.M == 128);
  CHECK(r.eps == 1.0 / 32);
  CHECK(r.err_strain_inf > 0.0);
  CHECK(r.error_bound_holds());
  CHECK(r.trunc_bound_holds());
  CHECK(r.trunc_l1_holds());
  CHECK(r.bound_rhs == Approx(2.0 * r.trunc_bound / kCoeff.qcf_margin()));
  CHECK_THROWS(error_report(Coefficients(1.0, -0.15), ForceField::cosine(),
                            DomainSpec::with_factor(32, 8)));
}

TEST_CASE("constant load keeps the error at rounding level", "[solver]") {
  const ErrorReport r =
      error_report(kCoeff, ForceField::constant(1.0), DomainSpec::with_factor(32, 8));
  CHECK(r.err_strain_inf <= 1e-10);
  CHECK(r.all_hold());
}

TEST_CASE("extended continuum bonds", "[solver]") {
  const DomainSpec spec(16, 4, 64);
  CHECK(in_extended_continuum(spec, -14));
  CHECK_FALSE(in_extended_continuum(spec, -15));
  CHECK(in_extended_continuum(spec, -3));
  CHECK_FALSE(in_extended_continuum(spec, -2));
  CHECK_FALSE(in_extended_continuum(spec, 5));
  CHECK(in_extended_continuum(spec, 6));
  CHECK(in_extended_continuum(spec, 17));
  CHECK_FALSE(in_extended_continuum(spec, 18));
}

TEST_CASE("strain stability for random loads", "[solver]") {
  const DomainSpec spec = DomainSpec::with_factor(32, 8);
  for (unsigned seed = 0; seed < 5; ++seed) {
    const ForceField f = ForceField::from_samples(random_load(spec.M, spec.eps(), seed));
    const StabilityCheck s = stability_check(kCoeff, f, spec);
    CHECK(s.strain_inf <= s.rhs_strain(kCoeff));
    CHECK(s.boundary_term_printed == Approx(s.boundary_term_strain * spec.eps()));
  }
}
