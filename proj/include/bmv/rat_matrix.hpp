#pragma once

#include <vector>

#include "bmv/common.hpp"
#include "bmv/rational.hpp"

namespace bmv {

/// Dense square matrix over the exact rationals. Used for the zero-tolerance
/// lane: integer-power coefficient positivity, word sums, and the duality
/// identity. Symmetry is an instance-level property, not a type invariant,
/// because word products are generally non-symmetric.
class RatMat {
 public:
  RatMat() = default;
  explicit RatMat(int n) : n_(n), a_(static_cast<size_t>(n) * n, Rational(0)) {
    if (n < 1) throw DomainError("RatMat: dimension must be >= 1");
  }

  static RatMat identity(int n) {
    RatMat m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  int n() const { return n_; }

  Rational& at(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
  const Rational& at(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }

  bool operator==(const RatMat& o) const { return n_ == o.n_ && a_ == o.a_; }

  bool is_symmetric() const {
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j)
        if (at(i, j) != at(j, i)) return false;
    return true;
  }

  MatC to_complex() const {
    MatC m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = cxd(to_double(at(i, j)), 0.0);
    return m;
  }

 private:
  int n_ = 0;
  std::vector<Rational> a_;
};

inline RatMat operator*(const RatMat& x, const RatMat& y) {
  if (x.n() != y.n()) throw DomainError("RatMat: dimension mismatch in product");
  const int n = x.n();
  RatMat r(n);
  Rational acc;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      acc = 0;
      for (int k = 0; k < n; ++k) acc += x.at(i, k) * y.at(k, j);
      r.at(i, j) = acc;
    }
  return r;
}

inline RatMat operator+(const RatMat& x, const RatMat& y) {
  if (x.n() != y.n()) throw DomainError("RatMat: dimension mismatch in sum");
  RatMat r(x.n());
  for (int i = 0; i < x.n(); ++i)
    for (int j = 0; j < x.n(); ++j) r.at(i, j) = x.at(i, j) + y.at(i, j);
  return r;
}

inline RatMat operator*(const Rational& c, const RatMat& x) {
  RatMat r(x.n());
  for (int i = 0; i < x.n(); ++i)
    for (int j = 0; j < x.n(); ++j) r.at(i, j) = c * x.at(i, j);
  return r;
}

inline Rational trace(const RatMat& m) {
  Rational t = 0;
  for (int i = 0; i < m.n(); ++i) t += m.at(i, i);
  return t;
}

inline RatMat transpose(const RatMat& m) {
  RatMat r(m.n());
  for (int i = 0; i < m.n(); ++i)
    for (int j = 0; j < m.n(); ++j) r.at(i, j) = m.at(j, i);
  return r;
}

inline RatMat rat_pow(const RatMat& m, long e) {
  if (e < 0) throw DomainError("rat_pow: negative exponent");
  RatMat acc = RatMat::identity(m.n());
  RatMat base = m;
  while (e > 0) {
    if (e & 1) acc = acc * base;
    if (e >>= 1) base = base * base;
  }
  return acc;
}

/// Exact determinant by fraction-free-ish Gaussian elimination over Q.
inline Rational rat_det(const RatMat& m) {
  const int n = m.n();
  RatMat w = m;
  Rational det = 1;
  for (int col = 0; col < n; ++col) {
    int pivot = -1;
    for (int row = col; row < n; ++row)
      if (w.at(row, col) != 0) {
        pivot = row;
        break;
      }
    if (pivot < 0) return Rational(0);
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(w.at(pivot, j), w.at(col, j));
      det = -det;
    }
    det *= w.at(col, col);
    for (int row = col + 1; row < n; ++row) {
      if (w.at(row, col) == 0) continue;
      Rational f = w.at(row, col) / w.at(col, col);
      for (int j = col; j < n; ++j) w.at(row, j) -= f * w.at(col, j);
    }
  }
  return det;
}

/// Exact inverse; throws DomainError on singular input.
inline RatMat rat_inverse(const RatMat& m) {
  const int n = m.n();
  RatMat w = m;
  RatMat inv = RatMat::identity(n);
  for (int col = 0; col < n; ++col) {
    int pivot = -1;
    for (int row = col; row < n; ++row)
      if (w.at(row, col) != 0) {
        pivot = row;
        break;
      }
    if (pivot < 0) throw DomainError("rat_inverse: singular matrix");
    if (pivot != col)
      for (int j = 0; j < n; ++j) {
        std::swap(w.at(pivot, j), w.at(col, j));
        std::swap(inv.at(pivot, j), inv.at(col, j));
      }
    Rational d = w.at(col, col);
    for (int j = 0; j < n; ++j) {
      w.at(col, j) /= d;
      inv.at(col, j) /= d;
    }
    for (int row = 0; row < n; ++row) {
      if (row == col || w.at(row, col) == 0) continue;
      Rational f = w.at(row, col);
      for (int j = 0; j < n; ++j) {
        w.at(row, j) -= f * w.at(col, j);
        inv.at(row, j) -= f * inv.at(col, j);
      }
    }
  }
  return inv;
}

/// Leading principal minors det(M[0..k, 0..k]) for k = 0..n-1, exact.
inline std::vector<Rational> leading_principal_minors(const RatMat& m) {
  std::vector<Rational> minors;
  minors.reserve(m.n());
  for (int k = 1; k <= m.n(); ++k) {
    RatMat sub(k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) sub.at(i, j) = m.at(i, j);
    minors.push_back(rat_det(sub));
  }
  return minors;
}

}  // namespace bmv
