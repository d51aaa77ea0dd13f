#pragma once

// Coercivity and inf-sup stability of the linearized force-based QC operator.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcf/lattice.hpp"
#include "qcf/operators.hpp"
#include "qcf/potential.hpp"

namespace qcf {

/// Raised when an eigenvalue computation does not reach its tolerance.
class EigenSolveError : public std::runtime_error {
 public:
  EigenSolveError(const std::string& what, double residual)
      : std::runtime_error(what + " (relative residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

namespace detail {

// Symmetric band matrix, lower band stored by diagonal: band[k][i] = A(i + k, i).
class SymmetricBand {
 public:
  SymmetricBand(int n, int bandwidth)
      : n_(n), bw_(bandwidth), band_(static_cast<std::size_t>(bandwidth) + 1,
                                     std::vector<double>(static_cast<std::size_t>(n), 0.0)) {}

  int size() const { return n_; }
  int bandwidth() const { return bw_; }
  double& lower(int i, int k) { return band_[k][i]; }  // A(i + k, i)
  double lower(int i, int k) const { return band_[k][i]; }

  double operator()(int r, int c) const {
    const int k = std::abs(r - c);
    return k > bw_ ? 0.0 : band_[k][std::min(r, c)];
  }

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i) {
      y(i) += band_[0][i] * x(i);
      for (int k = 1; k <= bw_ && i + k < n_; ++k) {
        y(i + k) += band_[k][i] * x(i);
        y(i) += band_[k][i] * x(i + k);
      }
    }
    return y;
  }

  /// A - sigma * B for bands of equal or smaller width in B.
  SymmetricBand shifted(const SymmetricBand& b, double sigma) const {
    SymmetricBand out = *this;
    for (int k = 0; k <= std::min(bw_, b.bw_); ++k) {
      for (int i = 0; i + k < n_; ++i) out.band_[k][i] -= sigma * b.band_[k][i];
    }
    return out;
  }

  /// In-place band Cholesky; false as soon as a pivot is not positive.
  bool cholesky() {
    for (int j = 0; j < n_; ++j) {
      double d = band_[0][j];
      for (int k = 1; k <= bw_ && j - k >= 0; ++k) d -= band_[k][j - k] * band_[k][j - k];
      if (!(d > 0.0)) return false;
      d = std::sqrt(d);
      band_[0][j] = d;
      for (int k = 1; k <= bw_ && j + k < n_; ++k) {
        double s = band_[k][j];
        // A(j+k, j) - sum_{m<j} L(j+k, m) L(j, m)
        for (int m = 1; m <= bw_ - k && j - m >= 0; ++m) {
          s -= band_[k + m][j - m] * band_[m][j - m];
        }
        band_[k][j] = s / d;
      }
    }
    return true;
  }

  /// Solves L L^T x = rhs with the factor produced by cholesky().
  Eigen::VectorXd cholesky_solve(Eigen::VectorXd x) const {
    for (int i = 0; i < n_; ++i) {
      for (int k = 1; k <= bw_ && i - k >= 0; ++k) x(i) -= band_[k][i - k] * x(i - k);
      x(i) /= band_[0][i];
    }
    for (int i = n_ - 1; i >= 0; --i) {
      for (int k = 1; k <= bw_ && i + k < n_; ++k) x(i) -= band_[k][i] * x(i + k);
      x(i) /= band_[0][i];
    }
    return x;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& d : band_)
      for (double a : d) m = std::max(m, std::abs(a));
    return m;
  }

 private:
  int n_;
  int bw_;
  std::vector<std::vector<double>> band_;
};

inline bool positive_definite(const SymmetricBand& a, const SymmetricBand& b, double sigma) {
  SymmetricBand s = a.shifted(b, sigma);
  return s.cholesky();
}

}  // namespace detail

/// Smallest eigenvalue of the symmetric-definite band pencil (A, B).
struct PencilMinimum {
  double value = 0.0;
  double residual = 0.0;
  Eigen::VectorXd vector;  // B-normalized
};

/// Bisection on "A - sigma B is positive definite" (band Cholesky), then
/// inverse iteration below the bracket for the eigenvector and residual.
inline PencilMinimum smallest_pencil_eigenvalue(const detail::SymmetricBand& a,
                                                const detail::SymmetricBand& b,
                                                double tolerance = 1e-10) {
  using detail::positive_definite;
  const int n = a.size();
  double hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) hi = std::min(hi, a(i, i) / b(i, i));
  double width = std::max(1.0, std::abs(hi));
  double lo = hi - width;
  while (!positive_definite(a, b, lo)) {
    width *= 2.0;
    lo = hi - width;
    if (!std::isfinite(lo)) throw EigenSolveError("pencil bracket diverged", kInf);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (positive_definite(a, b, mid) ? lo : hi) = mid;
  }

  const double lambda = 0.5 * (lo + hi);
  detail::SymmetricBand factor = a.shifted(b, lo - 1e-9 * std::max(1.0, std::abs(lo)));
  if (!factor.cholesky()) throw EigenSolveError("shifted pencil lost definiteness", kInf);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) x(i) += 0.01 * std::sin(1.0 + i);
  for (int it = 0; it < 40; ++it) {
    x = factor.cholesky_solve(b.multiply(x));
    x /= std::sqrt(x.dot(b.multiply(x)));
  }
  const Eigen::VectorXd ax = a.multiply(x);
  const Eigen::VectorXd bx = b.multiply(x);
  const double rayleigh = x.dot(ax);
  const double residual = (ax - lambda * bx).norm() / (ax.norm() + std::abs(lambda) * bx.norm());
  const double scale = std::max(1.0, std::abs(lambda));
  if (residual > tolerance || std::abs(rayleigh - lambda) > tolerance * scale) {
    throw EigenSolveError("smallest pencil eigenvalue did not converge", residual);
  }
  return {lambda, residual, x};
}

/// Result of minimizing <L^qcf v, v> over v in V0 with ||Dv||_{l2_eps} = 1.
struct RayleighMinimum {
  double value = 0.0;
  double residual = 0.0;
  SiteField minimizer;  // in V0, ||Dv|| = 1
};

/// inf of <L^qcf v, v> over v in V0, ||Dv||_{l2_eps} = 1: the smallest
/// eigenvalue of the pencil (sym(L^qcf), L_1) on the free sites, where
/// <L_1 v, v> = ||Dv||^2. Only the symmetric part enters a quadratic form.
inline RayleighMinimum rayleigh_minimum(const Coefficients& c, const DomainSpec& spec,
                                        double tolerance = 1e-10) {
  spec.validate();
  const int N = spec.N;
  const int n = 2 * N - 1;
  const double e2 = spec.eps() * spec.eps();
  const LatticeOperator L = assemble_Lqcf(c, spec);
  // Both pencil members are scaled by eps^2; the eigenvalues are unchanged.
  detail::SymmetricBand a(n, 2);
  detail::SymmetricBand b(n, 1);
  for (int i = 0; i < n; ++i) {
    const int ji = -N + 1 + i;
    for (int k = 0; k <= 2 && i + k < n; ++k) {
      const int jk = ji + k;
      a.lower(i, k) = 0.5 * e2 * (L.at(ji, jk) + L.at(jk, ji));
    }
    b.lower(i, 0) = 2.0;
    if (i + 1 < n) b.lower(i, 1) = -1.0;
  }
  const PencilMinimum m = smallest_pencil_eigenvalue(a, b, tolerance);

  SiteField v(IndexRange::sites(N), spec.eps());
  for (int i = 0; i < n; ++i) v[-N + 1 + i] = m.vector(i);
  v *= 1.0 / norm(diff(v), 2.0);
  return {m.value, m.residual, std::move(v)};
}

inline double rayleigh_min(const Coefficients& c, const DomainSpec& spec) {
  return rayleigh_minimum(c, spec).value;
}

/// <L v, v> for v on the computational domain (v in V0).
inline double quadratic_form(const LatticeOperator& L, const SiteField& v) {
  return weak_pairing(L, v, v);
}

/// vbar + sign * eps^(1/2) delta_{K+1}, where vbar is 1 on -K-2..K+2 and
/// ramps linearly to 0 at +-N. Not normalized.
inline SiteField unstable_candidate_raw(const DomainSpec& spec, int sign) {
  spec.validate();
  if (sign != 1 && sign != -1) throw std::invalid_argument("unstable_candidate: sign must be +-1");
  const int N = spec.N;
  const int K = spec.K;
  const double ramp = static_cast<double>(N - K - 2);
  SiteField v = SiteField::generate(IndexRange::sites(N), spec.eps(), [&](int j) {
    if (j <= -K - 2) return (N + j) / ramp;
    if (j >= K + 2) return (N - j) / ramp;
    return 1.0;
  });
  v[K + 1] += sign * std::sqrt(spec.eps());
  return v;
}

/// unstable_candidate_raw rescaled to ||Dv||_{l2_eps} = 1.
inline SiteField unstable_candidate(const DomainSpec& spec, int sign) {
  SiteField v = unstable_candidate_raw(spec, sign);
  return v *= 1.0 / norm(diff(v), 2.0);
}

struct CoercivityScanRow {
  int N = 0;
  int K = 0;
  double rayleigh_min = 0.0;
  double witness_value = 0.0;  // min over both signs of <L^qcf v^+-, v^+->
};

inline CoercivityScanRow coercivity_row(const Coefficients& c, const DomainSpec& spec) {
  const LatticeOperator L = assemble_Lqcf(c, spec);
  const double plus = quadratic_form(L, unstable_candidate(spec, +1));
  const double minus = quadratic_form(L, unstable_candidate(spec, -1));
  return {spec.N, spec.K, rayleigh_min(c, spec), std::min(plus, minus)};
}

/// Row diagonal-dominance margin
///   gamma = min_i (A_ii + sum_{j!=i} A_ij^-) - max_i sum_{j!=i} A_ij^+;
/// gamma > 0 bounds the l^inf-l^1 inf-sup constant on mean-zero strains below by gamma/2.
inline double rdd_margin(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("rdd_margin: matrix must be square");
  double lower = kInf;
  double upper = -kInf;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double neg = 0.0, pos = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j == i) continue;
      neg += std::min(0.0, a(i, j));
      pos += std::max(0.0, a(i, j));
    }
    lower = std::min(lower, a(i, i) + neg);
    upper = std::max(upper, pos);
  }
  return lower - upper;
}

template <class Tag>
double rdd_margin(const DenseOperator<Tag, Tag>& a) {
  return rdd_margin(a.matrix());
}

namespace detail {

// Q^T A Q for an orthonormal basis Q of the mean-zero vectors, built from the
// Householder reflector H that maps e_1 onto (1,...,1)/sqrt(n).
inline Eigen::MatrixXd restrict_to_mean_zero(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  Eigen::VectorXd w = -Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  w(0) += 1.0;
  w.normalize();
  // H A H with H = I - 2 w w^T.
  Eigen::MatrixXd ah = a - 2.0 * (a * w) * w.transpose();
  Eigen::MatrixXd hah = ah - 2.0 * w * (w.transpose() * ah);
  return hah.bottomRightCorner(n - 1, n - 1);
}

}  // namespace detail

/// inf over mean-zero xi, ||xi||_{l2_eps} = 1, of sup over mean-zero eta,
/// ||eta||_{l2_eps} = 1, of <A xi, eta>: the smallest singular value of A
/// compressed to the mean-zero subspace (the eps weights cancel).
template <class Tag>
double infsup_2(const DenseOperator<Tag, Tag>& a) {
  if (a.row_range() != a.col_range()) throw std::invalid_argument("infsup_2: A must be square");
  const Eigen::MatrixXd q = detail::restrict_to_mean_zero(a.matrix());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(q);
  return svd.singularValues().minCoeff();
}

/// alpha = (phi''_F + 5 phi''_2F) / (2 phi''_2F), cancelling the far-field
/// rows of E^qcf applied to the interface-jump strain.
inline double interface_alpha(const Coefficients& c) {
  if (c.phi2F == 0.0) throw std::invalid_argument("interface_alpha: phi2F must be nonzero");
  return (c.phiF + 5.0 * c.phi2F) / (2.0 * c.phi2F);
}

/// Mean-zero strain -1 | -alpha | 0 | alpha | 1 jumping across both interfaces.
inline BondField interface_strain(const DomainSpec& spec, double alpha) {
  spec.validate();
  const int K = spec.K;
  return BondField::generate(IndexRange::bonds(spec.N), spec.eps(), [&](int j) {
    if (j <= -K - 1) return -1.0;
    if (j == -K) return -alpha;
    if (j <= K) return 0.0;
    if (j == K + 1) return alpha;
    return 1.0;
  });
}

/// ||E^qcf xi~||_{l^p} / ||xi~||_{l^p} from the closed forms for the
/// interface strain with the cancelling alpha; an upper bound for the
/// l^p-l^q inf-sup constant that decays like N^(-1/p).
inline double infsup_p_upper(const Coefficients& c, const DomainSpec& spec, double p) {
  spec.validate();
  if (!(p >= 1.0) || std::isinf(p)) throw std::invalid_argument("infsup_p_upper: need 1 <= p < inf");
  const double alpha = interface_alpha(c);
  const double eps = spec.eps();
  const double num = 2.0 * eps *
                     (std::pow(std::abs(alpha * c.phi2F), p) +
                      std::pow(std::abs(alpha * c.phiF + (1.0 + 2.0 * alpha) * c.phi2F), p));
  const double den = 2.0 * eps * (spec.N - spec.K - 1 + std::pow(std::abs(alpha), p));
  return std::pow(num / den, 1.0 / p);
}

/// Constant C with infsup_p_upper <= C N^(-1/p) whenever N >= 2K + 2.
inline double infsup_p_upper_constant(const Coefficients& c, double p) {
  const double alpha = interface_alpha(c);
  return std::pow(2.0 * (std::pow(std::abs(alpha * c.phi2F), p) +
                         std::pow(std::abs(alpha * c.phiF + (1.0 + 2.0 * alpha) * c.phi2F), p)),
                  1.0 / p);
}

/// sup over w in V0 with ||Dw||_{l1_eps} = 1 of <f, w>, evaluated as
/// (max g - min g) / 2 with g_i = eps sum_{j=i}^{N-1} f_j, i = -N+1..N.
inline double dual_norm_star(const SiteField& f) {
  const int N = f.last();
  if (f.first() != -N || N < 1) throw std::invalid_argument("dual_norm_star: f must live on -N..N");
  double g = 0.0;  // g_N
  double gmax = 0.0, gmin = 0.0;
  for (int i = N - 1; i >= -N + 1; --i) {
    g += f.eps() * f[i];
    gmax = std::max(gmax, g);
    gmin = std::min(gmin, g);
  }
  return 0.5 * (gmax - gmin);
}

/// sup over mean-zero eta, ||eta||_{l1_eps} = 1, of <A xi, eta>.
inline double linf_l1_response(const StrainOperator& a, const BondField& xi) {
  const BondField r = a.apply(xi);
  const auto vals = r.values();
  const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
  return 0.5 * (*mx - *mn);
}

/// Smallest l^inf-l^1 response over a candidate set of mean-zero strains,
/// each scaled to ||xi||_inf = 1: random dense and sparse strains plus the
/// interface strain for a spread of alpha. An upper estimate of the
/// l^inf-l^1 inf-sup constant.
inline double linf_l1_candidate_search(const StrainOperator& a, std::mt19937_64& rng,
                                       int random_count = 2000) {
  const IndexRange bonds = a.row_range();
  const int n = static_cast<int>(bonds.size());
  const double eps = a.eps();
  auto normalize = [](BondField xi) {
    double mean = 0.0;
    for (double x : xi.values()) mean += x;
    mean /= static_cast<double>(xi.size());
    for (double& x : xi.values()) x -= mean;
    const double m = norm(xi, kInf);
    return m > 0.0 ? xi *= 1.0 / m : xi;
  };
  double best = kInf;
  auto consider = [&](BondField xi) {
    xi = normalize(std::move(xi));
    if (norm(xi, kInf) > 0.0) best = std::min(best, linf_l1_response(a, xi));
  };

  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> pick(bonds.first, bonds.last);
  std::uniform_int_distribution<int> sparse_size(2, std::max(2, std::min(6, n)));
  for (int s = 0; s < random_count; ++s) {
    BondField xi(bonds, eps);
    if (s % 2 == 0) {
      for (double& x : xi.values()) x = gauss(rng);
    } else {
      const int m = sparse_size(rng);
      for (int t = 0; t < m; ++t) xi[pick(rng)] += gauss(rng);
    }
    consider(std::move(xi));
  }
  // Interface-jump strains: the family that defeats every l^p pairing.
  const int N = bonds.last;
  for (int K = 2; 2 * K <= N; ++K) {
    for (double alpha = -10.0; alpha <= 10.0; alpha += 0.25) {
      consider(interface_strain(DomainSpec(N, K, N), alpha));
    }
  }
  return best;
}

enum class BoundKind { exact, lower_bound, upper_bound };

inline const char* to_string(BoundKind k) {
  switch (k) {
    case BoundKind::exact: return "exact";
    case BoundKind::lower_bound: return "lower_bound";
    case BoundKind::upper_bound: return "upper_bound";
  }
  return "?";
}

/// One entry of an inf-sup scan; p = infinity labels the l^inf-l^1 pairing.
struct InfSupScanRow {
  int N = 0;
  int K = 0;
  double p = 2.0;
  double value = 0.0;
  BoundKind kind = BoundKind::exact;
};

/// For one (N, K): the certified l^inf-l^1 lower bound gamma/2 (when the
/// margin is positive), the exact p = 2 constant, and the interface-strain
/// upper bound for every requested p.
inline std::vector<InfSupScanRow> infsup_rows(const Coefficients& c, const DomainSpec& spec,
                                              const std::vector<double>& ps) {
  const StrainOperator e = assemble_Eqcf(c, spec);
  std::vector<InfSupScanRow> rows;
  if (const double gamma = rdd_margin(e); gamma > 0.0) {
    rows.push_back({spec.N, spec.K, kInf, 0.5 * gamma, BoundKind::lower_bound});
  }
  rows.push_back({spec.N, spec.K, 2.0, infsup_2(e), BoundKind::exact});
  for (double p : ps) {
    rows.push_back({spec.N, spec.K, p, infsup_p_upper(c, spec, p), BoundKind::upper_bound});
  }
  return rows;
}

/// Spectrum summary of L^qcf restricted to V0 (exploratory eigenvalue scan).
struct SpectrumSummary {
  double min_real = 0.0;
  double max_abs_imag = 0.0;
};

inline SpectrumSummary qcf_spectrum(const Coefficients& c, const DomainSpec& spec) {
  const LatticeOperator L = assemble_Lqcf(c, spec);
  const Eigen::Index n = 2 * spec.N - 1;
  const double e2 = spec.eps() * spec.eps();
  Eigen::MatrixXd inner_block = L.matrix().block(0, 1, n, n) * e2;
  Eigen::EigenSolver<Eigen::MatrixXd> es(inner_block, false);
  if (es.info() != Eigen::Success) throw EigenSolveError("eigenvalue scan failed", kInf);
  SpectrumSummary s{kInf, 0.0};
  for (const auto& z : es.eigenvalues()) {
    s.min_real = std::min(s.min_real, z.real() / e2);
    s.max_abs_imag = std::max(s.max_abs_imag, std::abs(z.imag()) / e2);
  }
  return s;
}

}  // namespace qcf
