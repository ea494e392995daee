#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "bmv/common.hpp"
#include "bmv/mat_ops.hpp"
#include "bmv/matcore.hpp"
#include "bmv/rat_matrix.hpp"
#include "bmv/tolerances.hpp"
#include "bmv/words.hpp"

namespace bmv {

// ---------------------------------------------------------------------------
// Finite differences with Richardson extrapolation

struct FdOptions {
  double h0 = 0.0;           // 0 = auto: 0.125 * max(1, |x|)
  int levels = 10;           // Richardson tableau depth cap
  double domain_radius = std::numeric_limits<double>::infinity();
  double tol_request = 1e-6; // error estimate above this flags low confidence
  double eval_noise_rel = 2e-16;  // per-evaluation relative noise of f;
                                  // spectral/LU pipelines sit around 20 ulps
};

inline constexpr double kSpectralFnNoise = 4e-15;

struct FdResult {
  double value = 0;
  double err = 0;    // extrapolation-tail error estimate
  double scale = 0;  // sum of |w_i f_i| through the chosen linear combination
  bool low_confidence = false;
};

/// r-th derivative by symmetric central differences (half-step offsets for
/// odd r) on a Neville/Richardson tableau: start from a deliberately large
/// step, shrink geometrically, extrapolate in h^2, and keep the tableau
/// entry with the smallest error estimate. The whole tableau is always
/// explored: an early deterioration stop can get trapped where h^2 and h^4
/// error terms cancel and consecutive estimates agree while sharing a bias.
/// The scale is the absolute mass of the chosen combination; FD noise lives
/// at ~eps * scale.
inline FdResult derivative_fd(const std::function<double(double)>& f, double x, int r,
                              FdOptions opt = {}) {
  if (r < 0 || r > 8) throw DomainError("derivative_fd: order must be in [0, 8]");
  if (r == 0) {
    const double v = f(x);
    return FdResult{v, 0.0, std::abs(v), false};
  }
  double h0 = opt.h0 > 0 ? opt.h0 : 0.125 * std::max(1.0, std::abs(x));
  if (std::isfinite(opt.domain_radius)) {
    const double reach = 0.5 * r;  // stencil half-width in units of h
    h0 = std::min(h0, 0.9 * opt.domain_radius / reach);
    if (!(h0 > 0)) throw DomainError("derivative_fd: empty safe domain around x");
  }
  const int L = std::max(4, opt.levels);
  const double con = 1.6, con2 = con * con;
  std::vector<double> w(r + 1);
  for (int i = 0; i <= r; ++i)
    w[i] = ((i % 2) ? -1.0 : 1.0) * static_cast<double>(binomial_u64(r, i));
  std::vector<std::vector<double>> val(L), mass(L);
  FdResult out;
  double best_err = std::numeric_limits<double>::infinity();
  double h = h0;
  for (int lev = 0; lev < L; ++lev, h /= con) {
    double d = 0, m = 0;
    const double hr = ipow(h, r);
    for (int i = 0; i <= r; ++i) {
      const double fy = f(x + (0.5 * r - i) * h);
      d += w[i] * fy;
      m += std::abs(w[i] * fy);
    }
    val[lev].assign(lev + 1, 0.0);
    mass[lev].assign(lev + 1, 0.0);
    val[lev][0] = d / hr;
    mass[lev][0] = m / hr;
    double fac = con2;
    for (int q = 1; q <= lev; ++q, fac *= con2) {
      val[lev][q] = (fac * val[lev][q - 1] - val[lev - 1][q - 1]) / (fac - 1);
      mass[lev][q] = (fac * mass[lev][q - 1] + mass[lev - 1][q - 1]) / (fac - 1);
      // the additive term floors the estimate at the propagated evaluation
      // noise, so entries that merely collude inside the noise cannot win
      const double errt = std::max(std::abs(val[lev][q] - val[lev][q - 1]),
                                   std::abs(val[lev][q] - val[lev - 1][q - 1])) +
                          opt.eval_noise_rel * mass[lev][q];
      if (errt <= best_err) {
        best_err = errt;
        out.value = val[lev][q];
        out.scale = mass[lev][q];
        out.err = errt;
      }
    }
  }
  out.low_confidence = out.err > opt.tol_request * std::max(1.0, std::abs(out.value));
  return out;
}

// ---------------------------------------------------------------------------
// F_p and its derivative engines

/// F_p(lambda) = Tr (A + lambda B)^p via the spectral path.
inline double f_p_value(const PositiveMatrix& a, const PositiveMatrix& b, double lambda,
                        double p) {
  MatC m = a.mat() + lambda * b.mat();
  SpectralDecomposition sd = eig(HermitianMatrix(std::move(m)));
  const bool int_p = is_integer_valued(p) && p >= 0;
  if (!int_p && sd.eigenvalues(0) <= 0) {
    std::ostringstream os;
    os << "f_p_value: lambda_min = " << sd.eigenvalues(0) << " not positive for p = " << p;
    throw DomainError(os.str());
  }
  double total = 0;
  for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i)
    total += int_p ? ipow(sd.eigenvalues(i), std::lround(p)) : std::pow(sd.eigenvalues(i), p);
  return total;
}

/// Largest |dlambda| keeping A + (lambda + dlambda) B safely positive
/// definite; used to clamp FD stencils near the domain boundary.
inline double pd_safe_radius(const PositiveMatrix& a, const PositiveMatrix& b, double lambda) {
  MatC m = a.mat() + lambda * b.mat();
  SpectralDecomposition sd = eig(HermitianMatrix(std::move(m)));
  const double lmin = sd.eigenvalues(0);
  const double rho_b = std::max(std::abs(b.lambda_max()), std::abs(b.lambda_min()));
  if (rho_b == 0) return std::numeric_limits<double>::infinity();
  return 0.5 * std::max(lmin, 0.0) / rho_b;
}

// --- exact appendix sums -----------------------------------------------------

namespace detail {

/// Visit all compositions of `total` into `parts` nonnegative parts.
template <class F>
void for_each_composition(int total, int parts, F&& visit) {
  std::vector<int> c(parts, 0);
  c[0] = total;
  std::function<void(int, int)> rec = [&](int idx, int rem) {
    if (idx == parts - 1) {
      c[idx] = rem;
      visit(c);
      return;
    }
    for (int v = rem; v >= 0; --v) {
      c[idx] = v;
      rec(idx + 1, rem - v);
    }
  };
  rec(0, total);
}

template <class M>
typename mat_ops<M>::scalar scalar_factorial(int r) {
  typename mat_ops<M>::scalar f(1);
  for (int i = 2; i <= r; ++i) f *= typename mat_ops<M>::scalar(i);
  return f;
}

/// Sum over compositions (i_1..i_{r+1}) of `total` of the cyclically merged
/// trace word Tr[C^{i_1+i_{r+1}+lead} b C^{i_2+1} b ... C^{i_r+1} b].
/// With C = a^{-1} this evaluates the appendix sums without ever forming
/// a^{-1/2}: the half powers adjacent to each B merge into integer powers of
/// C under the trace. lead = 1 reproduces I1's words, lead = 2 the extra
/// leading A of I2's. For r = 0 the word degenerates to C^{total + lead - 1}.
template <class M>
typename mat_ops<M>::scalar merged_trace_sum(const M& c, const M& b, int total, int r,
                                             int lead) {
  using S = typename mat_ops<M>::scalar;
  auto pw = power_table(c, total + lead);
  if (r == 0) return mat_ops<M>::trace(pw[total + lead - 1]);
  S sum(0);
  for_each_composition(total, r + 1, [&](const std::vector<int>& comp) {
    M prod = mat_ops<M>::mul(pw[comp[0] + comp[r] + lead], b);
    for (int m = 1; m <= r - 1; ++m)
      prod = mat_ops<M>::mul(mat_ops<M>::mul(prod, pw[comp[m] + 1]), b);
    sum += mat_ops<M>::trace(prod);
  });
  return sum;
}

}  // namespace detail

/// I1 = r! * sum over compositions i_1+...+i_{r+1} = p of
/// Tr A^{i_1} B A^{i_2} ... B A^{i_{r+1}}; equals the r-th derivative of
/// Tr (A + lambda B)^{p+r} at lambda = 0 for any square A, B.
template <class M>
typename mat_ops<M>::scalar exact_derivative_I1(const M& a, const M& b, int p, int r) {
  if (p < 0 || r < 0) throw DomainError("exact_derivative_I1: p, r must be >= 0");
  using S = typename mat_ops<M>::scalar;
  auto pw = power_table(a, p);
  S total(0);
  detail::for_each_composition(p, r + 1, [&](const std::vector<int>& comp) {
    M prod = pw[comp[0]];
    for (int m = 1; m <= r; ++m) prod = mat_ops<M>::mul(mat_ops<M>::mul(prod, b), pw[comp[m]]);
    total += mat_ops<M>::trace(prod);
  });
  return detail::scalar_factorial<M>(r) * total;
}

/// I2 = (-1)^r r! * sum over compositions of p-1 of
/// Tr A A^{i_1} B ... B A^{i_{r+1}} with A = a^{-1}, B = a^{-1/2} b a^{-1/2};
/// equals the r-th derivative of Tr (a + lambda b)^{-p} at lambda = 0.
/// Evaluated through the merged form (see merged_trace_sum), so the rational
/// lane stays exact.
template <class M>
typename mat_ops<M>::scalar exact_derivative_I2_from_inverse(const M& a_inverse, const M& b,
                                                             int p, int r) {
  if (p < 1 || r < 0) throw DomainError("exact_derivative_I2: need p >= 1, r >= 0");
  using S = typename mat_ops<M>::scalar;
  S result = detail::scalar_factorial<M>(r) * detail::merged_trace_sum(a_inverse, b, p - 1, r, 2);
  if (r % 2) result = S(0) - result;
  return result;
}

inline Rational exact_derivative_I2(const RatMat& a, const RatMat& b, int p, int r) {
  if (rat_det(a) == 0) throw DomainError("exact_derivative_I2: singular a");
  return exact_derivative_I2_from_inverse(rat_inverse(a), b, p, r);
}

/// I1 evaluated at (A, B) = (a^{-1}, a^{-1/2} b a^{-1/2}) via the merged form.
template <class M>
typename mat_ops<M>::scalar exact_derivative_I1_from_inverse(const M& a_inverse, const M& b,
                                                             int p, int r) {
  if (p < 0 || r < 0) throw DomainError("exact_derivative_I1: p, r must be >= 0");
  return detail::scalar_factorial<M>(r) * detail::merged_trace_sum(a_inverse, b, p, r, 1);
}

// --- duality identity --------------------------------------------------------

struct Lemma1Report {
  double p = 0;
  int r = 0;
  double lhs = 0;          // (p+r) d^r/dl^r Tr (a+lb)^{-p} at 0
  double rhs = 0;          // p (-1)^r d^r/dl^r Tr (A+lB)^{p+r} at 0
  double raw_lhs = 0;      // the underlying derivatives, before prefactors
  double raw_rhs = 0;
  double rel_gap = 0;
  double fd_err = 0;
  bool degenerate = false;  // p = -r: both sides vanish structurally
  bool exact = false;       // set when verified on the rational lane
};

/// Exact verification of (p+r) I2 = p (-1)^r I1 for integer p >= 1.
inline Lemma1Report lemma1_check_exact(const RatMat& a, const RatMat& b, int p, int r) {
  if (!a.is_symmetric() || !b.is_symmetric())
    throw DomainError("lemma1_check_exact: inputs must be symmetric");
  RatMat c = rat_inverse(a);
  Rational i1 = exact_derivative_I1_from_inverse(c, b, p, r);
  Rational i2 = exact_derivative_I2_from_inverse(c, b, p, r);
  Rational lhs = Rational(p + r) * i2;
  Rational rhs = Rational(p) * ((r % 2) ? Rational(-1) : Rational(1)) * i1;
  Lemma1Report rep;
  rep.p = p;
  rep.r = r;
  rep.lhs = to_double(lhs);
  rep.rhs = to_double(rhs);
  rep.raw_lhs = to_double(i2);
  rep.raw_rhs = to_double(i1);
  rep.exact = (lhs == rhs);
  rep.rel_gap = rep.exact ? 0.0 : rel_gap(rep.lhs, rep.rhs);
  return rep;
}

/// Float-lane check of the identity at real p via FD on both sides.
inline Lemma1Report lemma1_check(const PositiveMatrix& a, const HermitianMatrix& b, double p,
                                 int r) {
  if (r < 0) throw DomainError("lemma1_check: r must be >= 0");
  const int n = a.n();
  if (b.n() != n) throw DomainError("lemma1_check: dimension mismatch");
  SpectralDecomposition sd = eig(a.base());
  if (sd.eigenvalues(0) <= 0) throw DomainError("lemma1_check: a must be positive definite");
  MatC a_inv = apply_spectral(sd, [](double x) { return cxd(1.0 / x, 0); });
  MatC a_inv_half = apply_spectral(sd, [](double x) { return cxd(1.0 / std::sqrt(x), 0); });
  MatC big_b = a_inv_half * b.mat() * a_inv_half;

  // a + l b = a^{1/2}(I + l B)a^{1/2} stays PD for |l| < 1/rho(B);
  // A + l B = a^{-1/2}(I + l b)a^{-1/2} stays PD for |l| < 1/rho(b).
  Eigen::SelfAdjointEigenSolver<MatC> es_big(big_b), es_b(b.mat());
  const double rho_big =
      std::max(std::abs(es_big.eigenvalues()(0)), std::abs(es_big.eigenvalues()(n - 1)));
  const double rho_b =
      std::max(std::abs(es_b.eigenvalues()(0)), std::abs(es_b.eigenvalues()(n - 1)));
  FdOptions opt_left, opt_right;
  opt_left.domain_radius =
      rho_big > 0 ? 0.9 / rho_big : std::numeric_limits<double>::infinity();
  opt_right.domain_radius = rho_b > 0 ? 0.9 / rho_b : std::numeric_limits<double>::infinity();
  opt_left.eval_noise_rel = opt_right.eval_noise_rel = kSpectralFnNoise;

  auto left_fn = [&](double l) {
    MatC m = a.mat() + l * b.mat();
    SpectralDecomposition s = eig(HermitianMatrix(std::move(m)));
    if (s.eigenvalues(0) <= 0) throw DomainError("lemma1_check: left stencil left the PD cone");
    double tot = 0;
    for (int i = 0; i < n; ++i) tot += std::pow(s.eigenvalues(i), -p);
    return tot;
  };
  auto right_fn = [&](double l) {
    MatC m = a_inv + l * big_b;
    SpectralDecomposition s = eig(HermitianMatrix(std::move(m)));
    if (s.eigenvalues(0) <= 0 && !(is_integer_valued(p + r) && p + r >= 0))
      throw DomainError("lemma1_check: right stencil left the PD cone");
    double tot = 0;
    for (int i = 0; i < n; ++i) tot += std::pow(s.eigenvalues(i), p + r);
    return tot;
  };

  FdResult dl = derivative_fd(left_fn, 0.0, r, opt_left);
  FdResult dr = derivative_fd(right_fn, 0.0, r, opt_right);
  Lemma1Report rep;
  rep.p = p;
  rep.r = r;
  rep.raw_lhs = dl.value;
  rep.raw_rhs = dr.value;
  rep.lhs = (p + r) * dl.value;
  rep.rhs = p * ((r % 2) ? -1.0 : 1.0) * dr.value;
  rep.fd_err = std::abs(p + r) * dl.err + std::abs(p) * dr.err;
  rep.degenerate = std::abs(p + r) < 1e-12;
  const double floor = 1e-9 * (std::abs(p + r) * dl.scale + std::abs(p) * dr.scale) + 1e-300;
  rep.rel_gap = std::abs(rep.lhs - rep.rhs) / std::max({std::abs(rep.lhs), std::abs(rep.rhs), floor});
  return rep;
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Legendre quadrature

namespace detail {

struct GaussLegendre16 {
  std::array<double, 16> x{}, w{};
  GaussLegendre16() {
    // nodes via Newton iteration on P_16; no tabulated constants needed
    const int n = 16;
    for (int i = 0; i < n / 2; ++i) {
      double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1, p1 = t;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = n * (t * p1 - p0) / (t * t - 1);
        const double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-15) break;
      }
      double p0 = 1, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1);
      x[i] = -t;
      x[n - 1 - i] = t;
      w[i] = w[n - 1 - i] = 2.0 / ((1 - t * t) * dp * dp);
    }
  }
};

inline const GaussLegendre16& gl16() {
  static const GaussLegendre16 table;
  return table;
}

inline double gl16_panel(const std::function<double(double)>& f, double a, double b) {
  const auto& g = gl16();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0;
  for (int i = 0; i < 16; ++i) s += g.w[i] * f(mid + half * g.x[i]);
  return s * half;
}

struct QuadStats {
  double err = 0;
  long panels = 0;
  int max_depth_hit = 0;
};

inline double adapt_gl(const std::function<double(double)>& f, double a, double b, double rtol,
                       double abs_floor, int depth, QuadStats& stats) {
  const double whole = gl16_panel(f, a, b);
  const double mid = 0.5 * (a + b);
  const double split = gl16_panel(f, a, mid) + gl16_panel(f, mid, b);
  ++stats.panels;
  if (std::abs(whole - split) <= rtol * std::max(std::abs(split), abs_floor)) {
    stats.err += std::abs(whole - split);
    return split;
  }
  if (depth <= 0) {
    std::ostringstream os;
    os << "quadrature failed to converge: panel [" << a << ", " << b << "], gap "
       << std::abs(whole - split) << " after " << stats.panels << " panels";
    throw ConsistencyError(os.str());
  }
  stats.max_depth_hit = std::max(stats.max_depth_hit, 1);
  return adapt_gl(f, a, mid, rtol, abs_floor, depth - 1, stats) +
         adapt_gl(f, mid, b, rtol, abs_floor, depth - 1, stats);
}

}  // namespace detail

struct QuadResult {
  double value = 0;
  double err = 0;
  long panels = 0;
};

/// Tr (A + lambda B)^p for fractional p > 0 through the integral
/// representation: with q = ceil(p), s = q - p,
///   M^p = sin(pi s)/pi * int_0^inf M^q (M + t)^{-1} t^{-s} dt.
/// The two half-line pieces are mapped onto [0,1] with the power
/// substitutions that absorb the t^{-s} endpoint and the slow tail, then
/// integrated by adaptive composite Gauss-Legendre panels.
inline QuadResult integral_rep_power(const PositiveMatrix& a, const PositiveMatrix& b,
                                     double lambda, double p) {
  if (p <= 0 || is_integer_valued(p))
    throw DomainError("integral_rep_power: p must be positive and non-integer");
  const double q = std::ceil(p);
  const double s = q - p;  // in (0,1)
  MatC m = a.mat() + lambda * b.mat();
  SpectralDecomposition sd = eig(HermitianMatrix(m));
  if (sd.eigenvalues(0) <= 0)
    throw DomainError("integral_rep_power: A + lambda B must be positive definite");
  const int n = a.n();
  const MatC mq = mat_pow_generic(m, static_cast<long>(q));
  const MatC id = MatC::Identity(n, n);

  auto g = [&](double t) {  // Tr[M^q (M + t)^{-1}]
    return (m + t * id).partialPivLu().solve(mq).trace().real();
  };
  auto h = [&](double w) {  // Tr[M^q (I + w M)^{-1}]
    return (id + w * m).partialPivLu().solve(mq).trace().real();
  };
  detail::QuadStats stats;
  const double floor = std::abs(g(1.0)) + 1e-300;
  const double inv1s = 1.0 / (1.0 - s), invs = 1.0 / s;
  const double left = inv1s * detail::adapt_gl([&](double u) { return g(std::pow(u, inv1s)); },
                                               0.0, 1.0, tol::quad_rtol, floor, 48, stats);
  const double right = invs * detail::adapt_gl([&](double y) { return h(std::pow(y, invs)); },
                                               0.0, 1.0, tol::quad_rtol, floor, 48, stats);
  const double pref = std::sin(M_PI * s) / M_PI;
  return QuadResult{pref * (left + right), pref * stats.err, stats.panels};
}

/// d^r/dlambda^r of the resolvent (A + lambda B + t)^{-1}:
/// (-1)^r r! R (B R)^r. The r! factor is required for the value (not just the
/// sign) to match finite differences.
inline MatC resolvent_derivative(const MatC& a, const MatC& b, double t, double lambda, int r,
                                 bool with_factorial = true) {
  if (r < 0) throw DomainError("resolvent_derivative: r must be >= 0");
  const int n = static_cast<int>(a.rows());
  MatC base = a + lambda * b + t * MatC::Identity(n, n);
  Eigen::FullPivLU<MatC> lu(base);
  if (!lu.isInvertible()) throw DomainError("resolvent_derivative: A + lambda B + t is singular");
  MatC resolvent = lu.inverse();
  MatC acc = resolvent;
  for (int i = 0; i < r; ++i) acc = acc * (b * resolvent);
  double c = (r % 2) ? -1.0 : 1.0;
  if (with_factorial)
    for (int i = 2; i <= r; ++i) c *= i;
  return c * acc;
}

/// r-th derivative of F_p at lambda via the integral representation
/// (fractional p > 0, r >= ceil(p)):
///   F^(r) = (-1)^{q+r} r! sin(pi s)/pi * int_0^inf Tr[R (B R)^r] t^p dt.
inline QuadResult integral_rep_derivative(const PositiveMatrix& a, const PositiveMatrix& b,
                                          double lambda, double p, int r) {
  if (p <= 0 || is_integer_valued(p))
    throw DomainError("integral_rep_derivative: p must be positive and non-integer");
  const int q = static_cast<int>(std::ceil(p));
  if (r < q) throw DomainError("integral_rep_derivative: requires r >= ceil(p)");
  const double s = q - p;
  const int n = a.n();
  const MatC m = a.mat() + lambda * b.mat();
  const MatC id = MatC::Identity(n, n);
  auto trace_rbr = [&](const MatC& resolvent) {
    MatC acc = resolvent;
    for (int i = 0; i < r; ++i) acc = acc * (b.mat() * resolvent);
    return acc.trace().real();
  };
  auto left_integrand = [&](double t) {  // t in (0,1]
    MatC resolvent = (m + t * id).partialPivLu().inverse();
    return trace_rbr(resolvent) * std::pow(t, p);
  };
  auto psi = [&](double w) {  // Tr[S (B S)^r], S = (w M + I)^{-1}
    MatC sm = (w * m + id).partialPivLu().inverse();
    MatC acc = sm;
    for (int i = 0; i < r; ++i) acc = acc * (b.mat() * sm);
    return acc.trace().real();
  };
  detail::QuadStats stats;
  const double floor = std::abs(psi(0.5)) + 1e-300;
  const double beta = r - p;  // tail weight exponent + 1
  const double left =
      detail::adapt_gl(left_integrand, 0.0, 1.0, tol::quad_rtol, floor, 48, stats);
  const double right =
      (1.0 / beta) * detail::adapt_gl([&](double y) { return psi(std::pow(y, 1.0 / beta)); },
                                      0.0, 1.0, tol::quad_rtol, floor, 48, stats);
  double pref = std::sin(M_PI * s) / M_PI;
  for (int i = 2; i <= r; ++i) pref *= i;
  if ((q + r) % 2) pref = -pref;
  return QuadResult{pref * (left + right), std::abs(pref) * stats.err, stats.panels};
}

// ---------------------------------------------------------------------------
// Theorem 2 sign suite

struct DerivRow {
  double lambda = 0;
  int r = 0;
  char cls = '?';        // 'a', 'b', or 'c'
  double value = 0;      // FD derivative value
  double err = 0;
  double scale = 0;
  double margin = 0;     // sign-adjusted value; >= 0 expected
  bool pass = true;
  std::string method = "spectral-fd";
};

struct DerivativeTable {
  double p = 0;
  std::vector<DerivRow> rows;
};

struct Theorem2Options {
  double tol_rel = tol::margin_rtol;
  bool cross_check = true;       // integral-rep cross-check where applicable
  std::vector<double> cross_check_lambdas = {0.0, 2.0};
};

inline char theorem2_class(double p, int r) {
  if (p <= 0) return 'c';
  return r <= static_cast<int>(std::ceil(p)) ? 'a' : 'b';
}

inline double theorem2_sign(double p, int r) {
  if (p <= 0) return (r % 2) ? -1.0 : 1.0;
  const int q = static_cast<int>(std::ceil(p));
  if (r <= q) return 1.0;
  return ((r - q) % 2) ? -1.0 : 1.0;
}

/// Sign pattern of d^r/dlambda^r Tr (A + lambda B)^p over a lambda grid.
/// Margins are sign-adjusted FD values; a margin below -tol*scale is a
/// finding, never clamped.
inline DerivativeTable theorem2_suite(const PositiveMatrix& a, const PositiveMatrix& b, double p,
                                      int r_max, const std::vector<double>& grid,
                                      Theorem2Options opt = {}) {
  if (r_max < 1 || r_max > 8) throw DomainError("theorem2_suite: r_max must be in [1, 8]");
  if (p <= 0 && !a.definite())
    throw DomainError("theorem2_suite: p <= 0 requires positive definite A");
  DerivativeTable table;
  table.p = p;
  const bool fractional = !is_integer_valued(p);
  for (double lambda : grid) {
    if (lambda < 0) throw DomainError("theorem2_suite: grid values must be >= 0");
    FdOptions fd_opt;
    fd_opt.eval_noise_rel = kSpectralFnNoise;
    if (fractional || p < 0) fd_opt.domain_radius = pd_safe_radius(a, b, lambda);
    auto fn = [&](double l) { return f_p_value(a, b, l, p); };
    for (int r = 1; r <= r_max; ++r) {
      DerivRow row;
      row.lambda = lambda;
      row.r = r;
      row.cls = theorem2_class(p, r);
      FdResult fd = derivative_fd(fn, lambda, r, fd_opt);
      row.value = fd.value;
      row.err = fd.err;
      row.scale = fd.scale;
      row.margin = theorem2_sign(p, r) * fd.value;
      row.pass = row.margin >= -opt.tol_rel * std::max(row.scale, 1.0);
      table.rows.push_back(row);
    }
  }
  if (opt.cross_check && fractional && p > 0) {
    const int q = static_cast<int>(std::ceil(p));
    for (double lambda : opt.cross_check_lambdas) {
      bool on_grid = false;
      for (double g : grid) on_grid = on_grid || g == lambda;
      if (!on_grid) continue;
      for (int r = q; r <= r_max; ++r) {
        QuadResult ir = integral_rep_derivative(a, b, lambda, p, r);
        const DerivRow* fd_row = nullptr;
        for (const auto& row : table.rows)
          if (row.lambda == lambda && row.r == r) fd_row = &row;
        if (!fd_row) continue;
        // the FD value carries rounding noise ~eps * stencil mass that the
        // difference-based estimate can under-report
        const double tol_combined = 3.0 * (fd_row->err + ir.err) +
                                    2e-15 * fd_row->scale +
                                    1e-6 * std::max({std::abs(fd_row->value),
                                                     std::abs(ir.value), 1.0});
        if (std::abs(fd_row->value - ir.value) > tol_combined) {
          std::ostringstream os;
          os << "theorem2_suite: FD and integral-representation derivatives disagree at "
             << "lambda=" << lambda << ", r=" << r << " (" << fd_row->value << " vs " << ir.value
             << ", tol " << tol_combined << ")";
          throw ConsistencyError(os.str());
        }
      }
    }
  }
  return table;
}

}  // namespace bmv
