#pragma once

// Linearized operators L^a, L^lqc, L^qcf in lattice form and the conjugate
// (divergence-form) operators E^a, E^qcf on bonds.

#include <Eigen/Dense>

#include <ostream>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <string>
#include <vector>

#include "qcf/lattice.hpp"
#include "qcf/potential.hpp"

namespace qcf {

/// Dense real matrix whose rows and columns are labelled by signed index
/// ranges. RowTag/ColTag say whether those indices are sites or bonds.
template <class RowTag, class ColTag>
class DenseOperator {
 public:
  DenseOperator(IndexRange rows, IndexRange cols, double eps)
      : rows_(rows),
        cols_(cols),
        eps_(eps),
        m_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                 static_cast<Eigen::Index>(cols.size()))) {}

  IndexRange row_range() const { return rows_; }
  IndexRange col_range() const { return cols_; }
  double eps() const { return eps_; }

  double& at(int i, int j) { return m_(row(i), col(j)); }
  double at(int i, int j) const { return m_(row(i), col(j)); }
  void add(int i, int j, double value) { at(i, j) += value; }

  const Eigen::MatrixXd& matrix() const { return m_; }
  Eigen::MatrixXd& matrix() { return m_; }

  LatticeVector<RowTag> apply(const LatticeVector<ColTag>& v) const {
    if (v.range() != cols_) {
      throw std::invalid_argument("apply: vector range " + v.range().str() +
                                  " does not match operator columns " + cols_.str());
    }
    Eigen::Map<const Eigen::VectorXd> x(v.values().data(), static_cast<Eigen::Index>(v.size()));
    Eigen::VectorXd y = m_ * x;
    return {rows_, eps_, std::vector<double>(y.data(), y.data() + y.size())};
  }

  /// Row i restricted to its nonzero entries, as (column, value) pairs.
  std::vector<std::pair<int, double>> row_entries(int i) const {
    std::vector<std::pair<int, double>> out;
    for (int j = cols_.first; j <= cols_.last; ++j) {
      if (const double a = at(i, j); a != 0.0) out.emplace_back(j, a);
    }
    return out;
  }

  DenseOperator transpose() const
    requires std::is_same_v<RowTag, ColTag>
  {
    DenseOperator t(cols_, rows_, eps_);
    t.m_ = m_.transpose();
    return t;
  }

 private:
  Eigen::Index row(int i) const {
    if (!rows_.contains(i)) {
      throw std::out_of_range("row " + std::to_string(i) + " outside " + rows_.str());
    }
    return static_cast<Eigen::Index>(rows_.offset(i));
  }
  Eigen::Index col(int j) const {
    if (!cols_.contains(j)) {
      throw std::out_of_range("column " + std::to_string(j) + " outside " + cols_.str());
    }
    return static_cast<Eigen::Index>(cols_.offset(j));
  }

  IndexRange rows_, cols_;
  double eps_;
  Eigen::MatrixXd m_;
};

/// Site-to-site operator (rows: free sites, columns: all sites).
using LatticeOperator = DenseOperator<SiteTag, SiteTag>;
/// Bond-to-bond operator.
using StrainOperator = DenseOperator<BondTag, BondTag>;

namespace detail {

inline void require_half_width(int L, const char* who) {
  if (L < 3) throw std::invalid_argument(std::string(who) + ": half-width must be at least 3");
}

// phi'' * [-1, 2, -1] / eps^2 at (j - d, j, j + d).
inline void add_second_difference(LatticeOperator& op, int j, int d, double k) {
  const double s = k / (op.eps() * op.eps());
  op.add(j, j - d, -s);
  op.add(j, j, 2.0 * s);
  op.add(j, j + d, -s);
}

inline void add_atomistic_row(LatticeOperator& op, const Coefficients& c, int j) {
  add_second_difference(op, j, 1, c.phiF);
  add_second_difference(op, j, 2, c.phi2F);
}

inline void add_lqc_row(LatticeOperator& op, const Coefficients& c, int j) {
  add_second_difference(op, j, 1, c.atomistic_margin());
}

}  // namespace detail

/// L^a on the chain -L..L; the two rows next to the ends use the one-sided
/// next-nearest stencils [+1 at j, -1 at j+2] and [+1 at j, -1 at j-2].
inline LatticeOperator assemble_La(const Coefficients& c, int half_width, double eps) {
  detail::require_half_width(half_width, "assemble_La");
  const int L = half_width;
  LatticeOperator op(IndexRange::interior(L), IndexRange::sites(L), eps);
  const double s = c.phi2F / (eps * eps);
  for (int j = -L + 1; j <= L - 1; ++j) {
    detail::add_second_difference(op, j, 1, c.phiF);
    if (j == -L + 1) {
      op.add(j, j, s);
      op.add(j, j + 2, -s);
    } else if (j == L - 1) {
      op.add(j, j, s);
      op.add(j, j - 2, -s);
    } else {
      detail::add_second_difference(op, j, 2, c.phi2F);
    }
  }
  return op;
}

/// L^a on the reference chain -M..M with eps = 1/N.
inline LatticeOperator assemble_La(const Coefficients& c, const DomainSpec& spec) {
  return assemble_La(c, spec.M, spec.eps());
}

/// L^lqc = (phi''_F + 4 phi''_2F) [-1, 2, -1] / eps^2 on -L..L.
inline LatticeOperator assemble_Llqc(const Coefficients& c, int half_width, double eps) {
  detail::require_half_width(half_width, "assemble_Llqc");
  LatticeOperator op(IndexRange::interior(half_width), IndexRange::sites(half_width), eps);
  for (int j = -half_width + 1; j <= half_width - 1; ++j) detail::add_lqc_row(op, c, j);
  return op;
}

/// L^lqc on the computational domain -N..N.
inline LatticeOperator assemble_Llqc(const Coefficients& c, const DomainSpec& spec) {
  return assemble_Llqc(c, spec.N, spec.eps());
}

/// L^qcf on -N..N: atomistic rows on A = {-K..K}, local QC rows on C.
/// Rows +-N (zero in the V0 extension) are not stored.
inline LatticeOperator assemble_Lqcf(const Coefficients& c, const DomainSpec& spec) {
  spec.validate();
  const int N = spec.N;
  LatticeOperator op(IndexRange::interior(N), IndexRange::sites(N), spec.eps());
  for (int j = -N + 1; j <= N - 1; ++j) {
    if (spec.in_atomistic_region(j)) {
      detail::add_atomistic_row(op, c, j);
    } else {
      detail::add_lqc_row(op, c, j);
    }
  }
  return op;
}

/// E^a = phi''_F I + phi''_2F T on bonds -L+1..L, with T tridiagonal
/// [1 2 1] and corner rows [1 1].
inline StrainOperator assemble_Ea(const Coefficients& c, int half_width, double eps) {
  detail::require_half_width(half_width, "assemble_Ea");
  const IndexRange b = IndexRange::bonds(half_width);
  StrainOperator op(b, b, eps);
  for (int j = b.first; j <= b.last; ++j) {
    op.add(j, j, c.phiF);
    const bool corner = (j == b.first || j == b.last);
    op.add(j, j, (corner ? 1.0 : 2.0) * c.phi2F);
    if (j > b.first) op.add(j, j - 1, c.phi2F);
    if (j < b.last) op.add(j, j + 1, c.phi2F);
  }
  return op;
}

inline StrainOperator assemble_Ea(const Coefficients& c, const DomainSpec& spec) {
  return assemble_Ea(c, spec.M, spec.eps());
}

/// E^qcf = phi''_F I + phi''_2F B on bonds -N+1..N with the row map
///   j <= -K-2 : 4 on the diagonal, [1 -2 1] at (-K-1, -K, -K+1)
///   j == -K-1 : [5 -2 1] at (-K-1, -K, -K+1)
///   -K <= j <= K+1 : [1 2 1] at (j-1, j, j+1)
///   j == K+2  : [1 -2 5] at (K, K+1, K+2)
///   j >= K+3  : 4 on the diagonal, [1 -2 1] at (K, K+1, K+2)
/// so that <E^qcf Dv, Dw> = <L^qcf v, w> for all v and all w in V0.
inline StrainOperator assemble_Eqcf(const Coefficients& c, const DomainSpec& spec) {
  spec.validate();
  const int N = spec.N;
  const int K = spec.K;
  const IndexRange b = IndexRange::bonds(N);
  StrainOperator op(b, b, spec.eps());
  auto put = [&](int j, int col, double v) { op.add(j, col, c.phi2F * v); };
  for (int j = b.first; j <= b.last; ++j) {
    op.add(j, j, c.phiF);
    if (j <= -K - 2) {
      put(j, j, 4.0);
      put(j, -K - 1, 1.0);
      put(j, -K, -2.0);
      put(j, -K + 1, 1.0);
    } else if (j == -K - 1) {
      put(j, -K - 1, 5.0);
      put(j, -K, -2.0);
      put(j, -K + 1, 1.0);
    } else if (j <= K + 1) {
      put(j, j - 1, 1.0);
      put(j, j, 2.0);
      put(j, j + 1, 1.0);
    } else if (j == K + 2) {
      put(j, K, 1.0);
      put(j, K + 1, -2.0);
      put(j, K + 2, 5.0);
    } else {
      put(j, j, 4.0);
      put(j, K, 1.0);
      put(j, K + 1, -2.0);
      put(j, K + 2, 1.0);
    }
  }
  return op;
}

/// <L v, w> with L v zero-extended to the rows of w (w must vanish there).
inline double weak_pairing(const LatticeOperator& L, const SiteField& v, const SiteField& w) {
  return inner(L.apply(v).extend_by_zero(w.range()), w);
}

/// <E Dv, Dw>.
inline double strain_pairing(const StrainOperator& E, const SiteField& v, const SiteField& w) {
  return inner(E.apply(diff(v)), diff(w));
}

/// The three parts of <L_2 v, w> for the next-nearest operator L_2 of L^qcf.
struct L2Decomposition {
  double regular = 0.0;
  double left_interface = 0.0;
  double right_interface = 0.0;

  double total() const { return regular + left_interface + right_interface; }
};

/// Splits <L_2 v, w> into the summation-by-parts regular part and the two
/// interface terms eps^2 D^3v_{-K+1} w_{-K} and -eps^2 D^3v_{K+2} w_K.
inline L2Decomposition l2_decomposition(const SiteField& v, const SiteField& w,
                                        const DomainSpec& spec) {
  spec.validate();
  const IndexRange sites = IndexRange::sites(spec.N);
  if (v.range() != sites || w.range() != sites) {
    throw std::invalid_argument("l2_decomposition: fields must live on -N..N");
  }
  if (!vanishes_at_ends(w)) throw std::invalid_argument("l2_decomposition: w is not in V0");
  const int N = spec.N;
  const int K = spec.K;
  const double eps = spec.eps();
  const BondField dv = diff(v);
  const BondField dw = diff(w);
  const BondField d3v = diff3(v);

  L2Decomposition out;
  double reg = 0.0;
  for (int j = -N + 1; j <= -K; ++j) reg += 4.0 * dv[j] * dw[j];
  for (int j = -K + 1; j <= K; ++j) reg += (dv[j - 1] + 2.0 * dv[j] + dv[j + 1]) * dw[j];
  for (int j = K + 1; j <= N; ++j) reg += 4.0 * dv[j] * dw[j];
  out.regular = eps * reg;
  out.left_interface = eps * eps * d3v[-K + 1] * w[-K];
  out.right_interface = -eps * eps * d3v[K + 2] * w[K];
  return out;
}

/// Writes the nonzeros as "row,col,value" lines with signed indices.
template <class R, class C>
void write_triples(std::ostream& os, const DenseOperator<R, C>& op) {
  os.precision(17);
  for (int i = op.row_range().first; i <= op.row_range().last; ++i) {
    for (auto [j, a] : op.row_entries(i)) os << i << ',' << j << ',' << a << '\n';
  }
}

}  // namespace qcf
