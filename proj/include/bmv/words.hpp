#pragma once

#include <algorithm>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bmv/common.hpp"
#include "bmv/exterior.hpp"
#include "bmv/mat_ops.hpp"
#include "bmv/matcore.hpp"
#include "bmv/rat_matrix.hpp"
#include "bmv/sampling.hpp"
#include "bmv/tolerances.hpp"

namespace bmv {

inline cxd to_double_scalar(const cxd& v) { return v; }
inline cxd to_double_scalar(const Rational& v) { return cxd(to_double(v), 0); }

/// Two-letter word: bit i of mask is the letter at position i in the product
/// (left to right), 0 = A, 1 = B.
struct Word {
  int p = 0;
  std::uint32_t mask = 0;

  int k() const { return __builtin_popcount(mask); }
  bool is_b(int i) const { return (mask >> i) & 1u; }
  std::string str() const {
    std::string s;
    for (int i = 0; i < p; ++i) s.push_back(is_b(i) ? 'B' : 'A');
    return s;
  }
  bool operator==(const Word& o) const { return p == o.p && mask == o.mask; }
};

inline Word rotate_left(const Word& w) {
  const std::uint32_t lsb = w.mask & 1u;
  return Word{w.p, (w.mask >> 1) | (lsb << (w.p - 1))};
}

inline void check_word_range(int p, int k) {
  if (p < 1 || p > 24) throw DomainError("word length must be in [1, 24]");
  if (k < 0 || k > p) throw DomainError("letter count k out of range");
}

/// All C(p,k) words with k letters B, ascending mask order (BAA..., ABA..., ...).
inline std::vector<Word> enumerate_words(int p, int k) {
  check_word_range(p, k);
  std::vector<Word> out;
  out.reserve(binomial_u64(p, k));
  for (std::uint32_t mask = 0; mask < (1u << p); ++mask)
    if (__builtin_popcount(mask) == k) out.push_back(Word{p, mask});
  return out;
}

struct CyclicClass {
  Word representative;  // lexicographically minimal rotation (string order, A < B)
  int multiplicity = 0; // number of distinct rotations; divides p
};

/// Rotation classes of the (p,k) words. Valid as a trace/char-poly reduction
/// because XY and YX share a characteristic polynomial.
inline std::vector<CyclicClass> cyclic_classes(int p, int k) {
  check_word_range(p, k);
  std::vector<CyclicClass> classes;
  std::vector<bool> seen(1u << p, false);
  for (const Word& w : enumerate_words(p, k)) {
    if (seen[w.mask]) continue;
    Word best = w;
    Word cur = w;
    int period = 0;
    do {
      seen[cur.mask] = true;
      if (cur.str() < best.str()) best = cur;
      cur = rotate_left(cur);
      ++period;
    } while (!(cur == w));
    classes.push_back(CyclicClass{best, period});
  }
  std::sort(classes.begin(), classes.end(), [](const CyclicClass& a, const CyclicClass& b) {
    return a.representative.str() < b.representative.str();
  });
  std::uint64_t total = 0;
  for (const auto& c : classes) total += static_cast<std::uint64_t>(c.multiplicity);
  if (total != binomial_u64(p, k))
    throw ConsistencyError("cyclic_classes: multiplicities do not sum to C(p,k)");
  return classes;
}

template <class M>
M word_eval(const Word& w, const M& a, const M& b) {
  if (mat_ops<M>::dim(a) != mat_ops<M>::dim(b))
    throw DomainError("word_eval: dimension mismatch");
  M acc = w.is_b(0) ? b : a;
  for (int i = 1; i < w.p; ++i) acc = mat_ops<M>::mul(acc, w.is_b(i) ? b : a);
  return acc;
}

enum class Reduction { cyclic_classes, full_enumeration };

/// Sum of e_j over all (p,k) words (e_1 = trace gives the lambda^k
/// coefficient of Tr(A+lambda B)^p). Returns the exact/complex scalar plus,
/// through `abs_mass`, the sum of absolute values of the summands (float lane
/// tolerance scale).
template <class M>
typename mat_ops<M>::scalar sum_ej_over_words(const M& a, const M& b, int p, int k, int j,
                                              Reduction mode, double* abs_mass = nullptr) {
  using S = typename mat_ops<M>::scalar;
  S total(0);
  double mass = 0;
  auto add_word = [&](const Word& w, int mult) {
    M prod = word_eval(w, a, b);
    S v = (j == 1) ? mat_ops<M>::trace(prod) : elem_sym_of_matrix(prod, j);
    total += S(mult) * v;
    if (abs_mass) mass += mult * std::abs(cxd(to_double_scalar(v)));
  };
  if (mode == Reduction::cyclic_classes) {
    for (const CyclicClass& c : cyclic_classes(p, k)) add_word(c.representative, c.multiplicity);
  } else {
    for (const Word& w : enumerate_words(p, k)) add_word(w, 1);
  }
  if (abs_mass) *abs_mass = mass;
  return total;
}

/// lambda^k coefficients of Tr(A+lambda B)^p, float lane. Primary path is the
/// class-reduced word sum; a Lagrange interpolation of p+1 trace samples at
/// lambda = 0..p cross-validates every coefficient.
struct CoefficientTable {
  int p = 0;
  std::vector<double> c;      // word-sum values (real parts)
  std::vector<double> scale;  // per-coefficient absolute mass
  std::string method;
};

namespace detail {

/// Coefficients of the degree-p interpolating polynomial through
/// (t, samples[t]) for integer nodes t = 0..p, plus per-coefficient absolute
/// mass of the Lagrange combination.
template <class S>
std::vector<S> lagrange_coefficients(const std::vector<S>& samples,
                                     std::vector<double>* masses = nullptr) {
  const int p = static_cast<int>(samples.size()) - 1;
  std::vector<S> coeff(static_cast<size_t>(p) + 1, S(0));
  if (masses) masses->assign(static_cast<size_t>(p) + 1, 0.0);
  for (int t = 0; t <= p; ++t) {
    // numerator poly prod_{s != t} (x - s), integer coefficients
    std::vector<S> num(1, S(1));
    for (int s = 0; s <= p; ++s) {
      if (s == t) continue;
      num.push_back(S(0));
      for (int d = static_cast<int>(num.size()) - 1; d >= 1; --d)
        num[d] = num[d - 1] - S(s) * num[d];
      num[0] = S(0) - S(s) * num[0];
    }
    S den(1);
    for (int s = 0; s <= p; ++s)
      if (s != t) den *= S(t) - S(s);
    for (int d = 0; d <= p; ++d) {
      S contrib = samples[t] * num[d] / den;
      coeff[d] += contrib;
      if (masses)
        (*masses)[d] += std::abs(cxd(to_double_scalar(contrib)));
    }
  }
  return coeff;
}

}  // namespace detail

inline CoefficientTable coefficient_table(const PositiveMatrix& a, const PositiveMatrix& b,
                                          int p) {
  if (p < 1) throw DomainError("coefficient_table: p must be >= 1");
  const int n = a.n();
  if (n != b.n()) throw DomainError("coefficient_table: dimension mismatch");
  CoefficientTable out;
  out.p = p;
  out.method = "word-sum(cyclic)+lagrange";
  out.c.resize(p + 1);
  out.scale.resize(p + 1);
  for (int k = 0; k <= p; ++k) {
    double mass = 0;
    cxd v = sum_ej_over_words(a.mat(), b.mat(), p, k, 1, Reduction::cyclic_classes, &mass);
    if (std::abs(v.imag()) > tol::imag_part_rtol * std::max(1.0, mass))
      throw ConsistencyError("coefficient_table: trace sum has non-negligible imaginary part");
    out.c[k] = v.real();
    out.scale[k] = mass;
  }
  // interpolation cross-check
  std::vector<cxd> samples;
  samples.reserve(p + 1);
  for (int t = 0; t <= p; ++t) {
    MatC m = a.mat() + static_cast<double>(t) * b.mat();
    samples.push_back(mat_pow_generic(m, p).trace());
  }
  std::vector<double> masses;
  std::vector<cxd> interp = detail::lagrange_coefficients(samples, &masses);
  for (int k = 0; k <= p; ++k) {
    const double scale = std::max({out.scale[k], masses[k], 1.0});
    if (std::abs(interp[k].real() - out.c[k]) > tol::coeff_cross_path * scale) {
      std::ostringstream os;
      os << "coefficient_table: word-sum and interpolation disagree at k=" << k << " ("
         << out.c[k] << " vs " << interp[k].real() << ", scale " << scale << ")";
      throw ConsistencyError(os.str());
    }
  }
  return out;
}

/// Exact-lane coefficient table; both paths must agree exactly.
struct CoefficientTableExact {
  int p = 0;
  std::vector<Rational> c;
};

inline CoefficientTableExact coefficient_table_exact(const RatMat& a, const RatMat& b, int p) {
  if (p < 1) throw DomainError("coefficient_table_exact: p must be >= 1");
  if (!a.is_symmetric() || !b.is_symmetric())
    throw DomainError("coefficient_table_exact: inputs must be exactly symmetric");
  CoefficientTableExact out;
  out.p = p;
  out.c.reserve(p + 1);
  for (int k = 0; k <= p; ++k)
    out.c.push_back(sum_ej_over_words(a, b, p, k, 1, Reduction::cyclic_classes));
  std::vector<Rational> samples;
  samples.reserve(p + 1);
  for (int t = 0; t <= p; ++t) {
    RatMat m = a + (rat(t) * b);
    samples.push_back(trace(rat_pow(m, p)));
  }
  std::vector<Rational> interp = detail::lagrange_coefficients(samples);
  for (int k = 0; k <= p; ++k)
    if (interp[k] != out.c[k])
      throw ConsistencyError("coefficient_table_exact: word-sum and interpolation differ at k=" +
                             std::to_string(k));
  return out;
}

struct Margin {
  double value = 0;
  double scale = 0;
};

/// Sum of e_j over all (p,k) words, float lane; >= 0 is the tested claim.
inline Margin theorem3_margin(const PositiveMatrix& a, const PositiveMatrix& b, int p, int k,
                              int j, Reduction mode = Reduction::cyclic_classes) {
  if (k < 1 || k > p) throw DomainError("theorem3_margin: need 1 <= k <= p");
  if (j < 1 || j > a.n()) throw DomainError("theorem3_margin: need 1 <= j <= n");
  double mass = 0;
  cxd v = sum_ej_over_words(a.mat(), b.mat(), p, k, j, mode, &mass);
  if (std::abs(v.imag()) > tol::imag_part_rtol * std::max(1.0, mass))
    throw ConsistencyError("theorem3_margin: sum has non-negligible imaginary part");
  return Margin{v.real(), mass};
}

inline Rational theorem3_margin_exact(const RatMat& a, const RatMat& b, int p, int k, int j,
                                      Reduction mode = Reduction::cyclic_classes) {
  if (k < 1 || k > p) throw DomainError("theorem3_margin_exact: need 1 <= k <= p");
  if (j < 1 || j > a.n()) throw DomainError("theorem3_margin_exact: need 1 <= j <= n");
  return sum_ej_over_words(a, b, p, k, j, mode);
}

/// Random + descent search for det(AB+BA) < 0 over PSD pairs.
struct DetSearchResult {
  double best_det = 0;
  MatR a, b;            // real symmetric PSD certificate pair
  std::uint64_t seed = 0;
  long trial_index = -1;  // trial that produced the reported pair
  bool negative_found = false;
  long trials_run = 0;
  int descent_steps = 0;
};

namespace detail {

inline MatR psd_from_factor(const MatR& g) { return g.transpose() * g; }

inline double anticommutator_det(const MatR& a, const MatR& b) {
  return (a * b + b * a).determinant();
}

}  // namespace detail

inline DetSearchResult det_anticommutator_search(int n, long trials, std::uint64_t seed,
                                                 double spread_decades = 2.0) {
  if (n < 1) throw DomainError("det_anticommutator_search: n must be >= 1");
  DetSearchResult res;
  res.seed = seed;
  MatR best_ga, best_gb;
  res.best_det = std::numeric_limits<double>::infinity();
  for (long t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, stream_tag("det-search"), static_cast<std::uint64_t>(t)));
    // heavy-tailed factors: entries scaled by log-uniform magnitudes
    MatR ga(n, n), gb(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        ga(i, j) = rng.uniform(-1, 1) * rng.log_uniform(std::pow(10.0, -spread_decades),
                                                        std::pow(10.0, spread_decades));
        gb(i, j) = rng.uniform(-1, 1) * rng.log_uniform(std::pow(10.0, -spread_decades),
                                                        std::pow(10.0, spread_decades));
      }
    const MatR a = detail::psd_from_factor(ga), b = detail::psd_from_factor(gb);
    const double d = detail::anticommutator_det(a, b);
    ++res.trials_run;
    if (d < res.best_det) {
      res.best_det = d;
      best_ga = ga;
      best_gb = gb;
      res.trial_index = t;
    }
    if (d < 0) break;
  }
  // local refinement: coordinate perturbation descent on the factors
  if (!(res.best_det < 0) && best_ga.size() > 0) {
    double step = 0.25;
    for (int sweep = 0; sweep < 60 && !(res.best_det < 0); ++sweep) {
      bool improved = false;
      for (int which = 0; which < 2; ++which) {
        MatR& g = which == 0 ? best_ga : best_gb;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (double dir : {1.0, -1.0}) {
              const double old = g(i, j);
              g(i, j) = old + dir * step * (std::abs(old) + 0.1);
              const double d = detail::anticommutator_det(detail::psd_from_factor(best_ga),
                                                          detail::psd_from_factor(best_gb));
              ++res.descent_steps;
              if (d < res.best_det) {
                res.best_det = d;
                improved = true;
              } else {
                g(i, j) = old;
              }
            }
      }
      if (!improved) step *= 0.5;
    }
  }
  res.a = detail::psd_from_factor(best_ga);
  res.b = detail::psd_from_factor(best_gb);
  res.best_det = detail::anticommutator_det(res.a, res.b);
  res.negative_found = res.best_det < 0;
  return res;
}

}  // namespace bmv
