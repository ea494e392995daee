#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

namespace bmv {

// Exact arithmetic rides on GMP rationals. Everything on this path is
// zero-tolerance: equality means equality.
using Rational = mpq_class;

inline Rational rat(long num, long den = 1) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline double to_double(const Rational& q) { return q.get_d(); }

inline int sign_of(const Rational& q) { return sgn(q); }

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline bool fits_long(const mpz_class& z) { return z.fits_slong_p(); }

}  // namespace bmv
