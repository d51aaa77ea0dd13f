#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "qcf/chain.hpp"
#include "qcf/operators.hpp"

using namespace qcf;
using Catch::Approx;

namespace {

SiteField random_field(int L, double eps, std::mt19937_64& rng, bool zero_ends) {
  std::normal_distribution<double> g;
  SiteField v(IndexRange::sites(L), eps);
  for (double& x : v.values()) x = g(rng);
  if (zero_ends) v[-L] = v[L] = 0.0;
  return v;
}

// eps^2 * max |L + J| / max |eps^2 L| with J the central-difference force
// Jacobian at the uniform state (columns: all sites, rows: free sites).
template <class Force>
double jacobian_mismatch(const LatticeOperator& L, double F, int half_width, double eps,
                         const Force& force) {
  const double h = 1e-3 * eps;
  double worst = 0.0, scale = 0.0;
  for (int k = -half_width; k <= half_width; ++k) {
    Deformation y = Deformation::uniform(F, half_width, eps);
    auto eval = [&](double s) {
      y.displacement[k] = s * h;
      return force(y);
    };
    const SiteField p1 = eval(1), m1 = eval(-1), p2 = eval(2), m2 = eval(-2);
    for (int j = -half_width + 1; j <= half_width - 1; ++j) {
      const double jac = (-p2[j] + 8 * p1[j] - 8 * m1[j] + m2[j]) / (12 * h);
      worst = std::max(worst, eps * eps * std::abs(L.at(j, k) + jac));
      scale = std::max(scale, eps * eps * std::abs(L.at(j, k)));
    }
  }
  return worst / scale;
}

}  // namespace

TEST_CASE("assembled operators are minus the force Jacobian", "[operators]") {
  const PairPotential lj = lennard_jones();
  const double F = 1.05;
  const DomainSpec spec(32, 8, 32);
  const double eps = spec.eps();
  const Coefficients c = Coefficients::from_potential(lj, F);
  CHECK(jacobian_mismatch(assemble_La(c, spec), F, spec.M, eps,
                          [&](const Deformation& y) { return force_atomistic(y, lj); }) <= 1e-6);
  CHECK(jacobian_mismatch(assemble_Llqc(c, spec), F, spec.N, eps,
                          [&](const Deformation& y) { return force_lqc(y, lj); }) <= 1e-6);
  CHECK(jacobian_mismatch(assemble_Lqcf(c, spec), F, spec.N, eps,
                          [&](const Deformation& y) { return force_qcf(y, spec, lj); }) <= 1e-6);
}

TEST_CASE("operators annihilate constants and affine fields", "[operators]") {
  const Coefficients c(1.0, -0.2);
  const DomainSpec spec(16, 4, 20);
  SiteField one = SiteField::generate(IndexRange::sites(20), spec.eps(), [](int) { return 1.0; });
  const SiteField r1 = assemble_La(c, spec).apply(one);
  for (double x : r1.values()) CHECK(std::abs(x) < 1e-10);
  SiteField affine =
      SiteField::generate(IndexRange::sites(16), spec.eps(), [](int j) { return 0.3 * j - 1.0; });
  const SiteField r2 = assemble_Lqcf(c, spec).apply(affine);
  const SiteField r3 = assemble_Llqc(c, spec).apply(affine);
  for (double x : r2.values()) CHECK(std::abs(x) < 1e-9);
  for (double x : r3.values()) CHECK(std::abs(x) < 1e-9);
}

TEST_CASE("E^qcf has the interface rows 5 -2 1", "[operators]") {
  const StrainOperator e = assemble_Eqcf(Coefficients(1.0, 1.0), DomainSpec(8, 2, 8));
  const auto row = e.row_entries(-3);
  REQUIRE(row.size() == 3);
  CHECK(row[0] == std::pair<int, double>{-3, 6.0});
  CHECK(row[1] == std::pair<int, double>{-2, -2.0});
  CHECK(row[2] == std::pair<int, double>{-1, 1.0});
  const auto right = e.row_entries(4);
  REQUIRE(right.size() == 3);
  CHECK(right[0] == std::pair<int, double>{2, 1.0});
  CHECK(right[1] == std::pair<int, double>{3, -2.0});
  CHECK(right[2] == std::pair<int, double>{4, 6.0});
  // far-field rows: phiF + 4 phi2F on the diagonal plus the interface jump stencil
  CHECK(e.at(-6, -6) == 5.0);
  CHECK(e.at(-6, -3) == 1.0);
  CHECK(e.at(-6, -2) == -2.0);
  CHECK(e.at(-6, -1) == 1.0);
  // mirror symmetry j <-> 1 - j
  for (int i = -7; i <= 8; ++i)
    for (int j = -7; j <= 8; ++j) CHECK(e.at(i, j) == e.at(1 - i, 1 - j));
}

TEST_CASE("E^a is symmetric and L^a rows sum to zero", "[operators]") {
  const Coefficients c(1.0, -0.3);
  const StrainOperator ea = assemble_Ea(c, 10, 0.1);
  CHECK(ea.matrix().isApprox(ea.transpose().matrix(), 0.0));
  CHECK(ea.at(-9, -9) == Approx(0.7));
  CHECK(ea.at(0, 0) == Approx(0.4));
  const LatticeOperator la = assemble_La(c, 10, 0.1);
  for (int j = -9; j <= 9; ++j) CHECK(std::abs(la.matrix().row(j + 9).sum()) < 1e-10);
}

TEST_CASE("weak forms match for random pairs", "[operators]") {
  std::mt19937_64 rng(2024);
  const Coefficients c(1.0, -0.2);
  const DomainSpec spec(32, 8, 32);
  const StrainOperator eq = assemble_Eqcf(c, spec);
  const LatticeOperator lq = assemble_Lqcf(c, spec);
  const StrainOperator ea = assemble_Ea(c, spec);
  const LatticeOperator la = assemble_La(c, spec);
  for (int t = 0; t < 50; ++t) {
    const SiteField v = random_field(32, spec.eps(), rng, false);
    const SiteField w = random_field(32, spec.eps(), rng, true);
    const double a = strain_pairing(eq, v, w);
    const double b = weak_pairing(lq, v, w);
    const double scale = norm(diff(v), 2.0) * norm(diff(w), 2.0) * eq.matrix().cwiseAbs().maxCoeff();
    CHECK(std::abs(a - b) <= 1e-12 * scale);
    const double x = strain_pairing(ea, v, w);
    const double y = weak_pairing(la, v, w);
    CHECK(std::abs(x - y) <= 1e-12 * scale);
  }
}

TEST_CASE("next-nearest pairing splits into regular and interface parts", "[operators]") {
  std::mt19937_64 rng(5);
  const DomainSpec spec(32, 8, 32);
  // L_2 = L^qcf(1, 1) - L^qcf(1, 0)
  const LatticeOperator a = assemble_Lqcf(Coefficients(1.0, 1.0), spec);
  const LatticeOperator b = assemble_Lqcf(Coefficients(1.0, 0.0), spec);
  LatticeOperator l2 = a;
  l2.matrix() -= b.matrix();
  for (int t = 0; t < 50; ++t) {
    const SiteField v = random_field(32, spec.eps(), rng, false);
    const SiteField w = random_field(32, spec.eps(), rng, true);
    const double direct = weak_pairing(l2, v, w);
    const L2Decomposition d = l2_decomposition(v, w, spec);
    CHECK(d.total() == Approx(direct).epsilon(1e-12).margin(1e-12 * std::abs(d.regular)));
  }
  SiteField bad = random_field(32, spec.eps(), rng, false);
  CHECK_THROWS_AS(l2_decomposition(bad, bad, spec), std::invalid_argument);
}

TEST_CASE("operator triples", "[operators]") {
  const LatticeOperator l = assemble_Llqc(Coefficients(1.0, 0.25), 3, 0.5);
  std::ostringstream os;
  write_triples(os, l);
  std::istringstream in(os.str());
  std::string line;
  int count = 0;
  std::getline(in, line);
  CHECK(line == "-2,-3,-8");
  ++count;
  while (std::getline(in, line)) ++count;
  CHECK(count == 15);
}

TEST_CASE("operator index checks", "[operators]") {
  const LatticeOperator l = assemble_Llqc(Coefficients(1.0, 0.0), 4, 0.25);
  CHECK_THROWS_AS(l.at(4, 0), std::out_of_range);
  CHECK_THROWS_AS(l.apply(SiteField(IndexRange::sites(3), 0.25)), std::invalid_argument);
  CHECK_THROWS_AS(assemble_La(Coefficients(1.0, 0.0), 2, 0.5), std::invalid_argument);
}
