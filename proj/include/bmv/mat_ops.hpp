#pragma once

#include <vector>

#include "bmv/common.hpp"
#include "bmv/rat_matrix.hpp"

namespace bmv {

// Uniform matrix interface so word/trace algorithms run unchanged on the
// float lane (Eigen complex) and the exact lane (RatMat).
template <class M>
struct mat_ops;

template <>
struct mat_ops<MatC> {
  using scalar = cxd;
  static int dim(const MatC& m) { return static_cast<int>(m.rows()); }
  static MatC identity(int n) { return MatC::Identity(n, n); }
  static MatC mul(const MatC& a, const MatC& b) { return a * b; }
  static scalar trace(const MatC& m) { return m.trace(); }
};

template <>
struct mat_ops<RatMat> {
  using scalar = Rational;
  static int dim(const RatMat& m) { return m.n(); }
  static RatMat identity(int n) { return RatMat::identity(n); }
  static RatMat mul(const RatMat& a, const RatMat& b) { return a * b; }
  static scalar trace(const RatMat& m) { return bmv::trace(m); }
};

template <class M>
M mat_pow_generic(const M& m, long e) {
  if (e < 0) throw DomainError("mat_pow_generic: negative exponent");
  M acc = mat_ops<M>::identity(mat_ops<M>::dim(m));
  M base = m;
  while (e > 0) {
    if (e & 1) acc = mat_ops<M>::mul(acc, base);
    if (e >>= 1) base = mat_ops<M>::mul(base, base);
  }
  return acc;
}

/// Powers m^0 .. m^emax, cached.
template <class M>
std::vector<M> power_table(const M& m, int emax) {
  std::vector<M> t;
  t.reserve(emax + 1);
  t.push_back(mat_ops<M>::identity(mat_ops<M>::dim(m)));
  for (int e = 1; e <= emax; ++e) t.push_back(mat_ops<M>::mul(t.back(), m));
  return t;
}

}  // namespace bmv
