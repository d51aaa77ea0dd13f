#pragma once

// Lattice fields over signed index ranges, weighted norms and the
// backward / centered difference operators of the chain.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qcf {

/// Closed interval of signed lattice (or bond) indices [first, last].
struct IndexRange {
  int first = 0;
  int last = -1;

  constexpr std::size_t size() const {
    return last < first ? 0 : static_cast<std::size_t>(last - first + 1);
  }
  constexpr bool contains(int j) const { return first <= j && j <= last; }
  constexpr bool contains(IndexRange r) const {
    return r.size() == 0 || (contains(r.first) && contains(r.last));
  }
  constexpr std::size_t offset(int j) const {
    return static_cast<std::size_t>(j - first);
  }
  constexpr bool operator==(const IndexRange&) const = default;

  /// Sites -L..L.
  static constexpr IndexRange sites(int half_width) { return {-half_width, half_width}; }
  /// Free (interior) sites -L+1..L-1.
  static constexpr IndexRange interior(int half_width) {
    return {-half_width + 1, half_width - 1};
  }
  /// Bonds -L+1..L; bond j joins sites j-1 and j.
  static constexpr IndexRange bonds(int half_width) { return {-half_width + 1, half_width}; }

  std::string str() const {
    std::ostringstream os;
    os << '[' << first << ", " << last << ']';
    return os.str();
  }
};

struct SiteTag {};
struct BondTag {};

/// Real values over a signed index range with lattice spacing eps.
/// The range and spacing are part of the value: binary operations on
/// fields with different ranges or spacings throw.
template <class Tag>
class LatticeVector {
 public:
  LatticeVector() = default;
  LatticeVector(IndexRange range, double eps)
      : range_(range), eps_(eps), values_(range.size(), 0.0) {
    check_eps();
  }
  LatticeVector(IndexRange range, double eps, std::vector<double> values)
      : range_(range), eps_(eps), values_(std::move(values)) {
    check_eps();
    if (values_.size() != range_.size()) {
      throw std::invalid_argument("LatticeVector: " + std::to_string(values_.size()) +
                                  " values for range " + range_.str());
    }
  }

  template <class Fn>
  static LatticeVector generate(IndexRange range, double eps, Fn&& fn) {
    LatticeVector v(range, eps);
    for (int j = range.first; j <= range.last; ++j) v[j] = fn(j);
    return v;
  }

  IndexRange range() const { return range_; }
  double eps() const { return eps_; }
  std::size_t size() const { return values_.size(); }
  int first() const { return range_.first; }
  int last() const { return range_.last; }

  double& operator[](int j) { return values_[index(j)]; }
  double operator[](int j) const { return values_[index(j)]; }

  std::span<double> values() & { return values_; }
  std::span<const double> values() const& { return values_; }
  // A span into a temporary would dangle.
  std::span<const double> values() const&& = delete;

  /// Copy of the values on a sub-range.
  LatticeVector restrict_to(IndexRange sub) const {
    if (!range_.contains(sub)) {
      throw std::out_of_range("restrict_to: " + sub.str() + " not inside " + range_.str());
    }
    return generate(sub, eps_, [&](int j) { return (*this)[j]; });
  }

  /// Copy onto a larger range, zero outside the current one.
  LatticeVector extend_by_zero(IndexRange wider) const {
    if (!wider.contains(range_)) {
      throw std::out_of_range("extend_by_zero: " + wider.str() + " does not contain " +
                              range_.str());
    }
    LatticeVector out(wider, eps_);
    for (int j = range_.first; j <= range_.last; ++j) out[j] = (*this)[j];
    return out;
  }

  LatticeVector& operator+=(const LatticeVector& o) {
    require_same_layout(o, "+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  LatticeVector& operator-=(const LatticeVector& o) {
    require_same_layout(o, "-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  LatticeVector& operator*=(double s) {
    for (double& x : values_) x *= s;
    return *this;
  }
  friend LatticeVector operator+(LatticeVector a, const LatticeVector& b) { return a += b; }
  friend LatticeVector operator-(LatticeVector a, const LatticeVector& b) { return a -= b; }
  friend LatticeVector operator*(double s, LatticeVector a) { return a *= s; }
  friend LatticeVector operator*(LatticeVector a, double s) { return a *= s; }

  void require_same_layout(const LatticeVector& o, const char* what) const {
    if (o.range_ != range_) {
      throw std::invalid_argument(std::string(what) + ": index ranges differ " + range_.str() +
                                  " vs " + o.range_.str());
    }
    if (o.eps_ != eps_) {
      throw std::invalid_argument(std::string(what) + ": lattice spacings differ");
    }
  }

 private:
  std::size_t index(int j) const {
    if (!range_.contains(j)) {
      throw std::out_of_range("lattice index " + std::to_string(j) + " outside " +
                              range_.str());
    }
    return range_.offset(j);
  }
  void check_eps() const {
    if (!(eps_ > 0.0)) throw std::invalid_argument("lattice spacing must be positive");
  }

  IndexRange range_{};
  double eps_ = 1.0;
  std::vector<double> values_;
};

/// Values at lattice sites (displacements, positions, forces, loads).
using SiteField = LatticeVector<SiteTag>;
/// Values on bonds (strains).
using BondField = LatticeVector<BondTag>;
using Displacement = SiteField;
using StrainVector = BondField;

/// Weighted inner product eps * sum v_j w_j; ranges must match.
template <class Tag>
double inner(const LatticeVector<Tag>& v, const LatticeVector<Tag>& w) {
  v.require_same_layout(w, "inner");
  double s = 0.0;
  auto a = v.values();
  auto b = w.values();
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return v.eps() * s;
}

/// Weighted l^p norm, (eps sum |v_j|^p)^(1/p); p = infinity gives max |v_j|.
template <class Tag>
double norm(const LatticeVector<Tag>& v, double p) {
  auto a = v.values();
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
  }
  if (p < 1.0) throw std::invalid_argument("norm: p must be >= 1");
  double s = 0.0;
  if (p == 1.0) {
    for (double x : a) s += std::abs(x);
    return v.eps() * s;
  }
  if (p == 2.0) {
    for (double x : a) s += x * x;
    return std::sqrt(v.eps() * s);
  }
  for (double x : a) s += std::pow(std::abs(x), p);
  return std::pow(v.eps() * s, 1.0 / p);
}

/// Weighted l^p norm restricted to the indices accepted by `keep`.
template <class Tag, class Pred>
double norm_on(const LatticeVector<Tag>& v, double p, Pred&& keep) {
  LatticeVector<Tag> masked(v.range(), v.eps());
  for (int j = v.first(); j <= v.last(); ++j) masked[j] = keep(j) ? v[j] : 0.0;
  return norm(masked, p);
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Backward difference (Dv)_j = (v_j - v_{j-1}) / eps on bonds first+1..last.
inline BondField diff(const SiteField& v) {
  if (v.size() < 2) throw std::invalid_argument("diff: need at least two sites");
  const double eps = v.eps();
  return BondField::generate({v.first() + 1, v.last()}, eps,
                             [&](int j) { return (v[j] - v[j - 1]) / eps; });
}

/// Third backward difference eps^-3 (v_j - 3v_{j-1} + 3v_{j-2} - v_{j-3}),
/// indexed like the bond it ends on, for j = first+3..last.
inline BondField diff3(const SiteField& v) {
  if (v.size() < 4) throw std::out_of_range("diff3: stencil needs four sites");
  const double e3 = v.eps() * v.eps() * v.eps();
  return BondField::generate({v.first() + 3, v.last()}, v.eps(), [&](int j) {
    return (v[j] - 3.0 * v[j - 1] + 3.0 * v[j - 2] - v[j - 3]) / e3;
  });
}

/// Centered fourth difference
/// eps^-4 (v_{j+2} - 4v_{j+1} + 6v_j - 4v_{j-1} + v_{j-2}) for j = first+2..last-2.
inline SiteField diff4_centered(const SiteField& v) {
  if (v.size() < 5) throw std::out_of_range("diff4_centered: stencil needs five sites");
  const long double e4 = std::pow(static_cast<long double>(v.eps()), 4);
  // extended precision: the stencil cancels terms of size |v|
  return SiteField::generate({v.first() + 2, v.last() - 2}, v.eps(), [&](int j) {
    const long double s = static_cast<long double>(v[j + 2]) - 4.0L * v[j + 1] + 6.0L * v[j] -
                          4.0L * v[j - 1] + v[j - 2];
    return static_cast<double>(s / e4);
  });
}

/// True when the end values are exactly zero (membership in V0).
inline bool vanishes_at_ends(const SiteField& v) {
  return v[v.first()] == 0.0 && v[v.last()] == 0.0;
}

}  // namespace qcf
