#pragma once

#include <unsupported/Eigen/MatrixFunctions>

#include "bmv/common.hpp"
#include "bmv/derivs.hpp"
#include "bmv/exterior.hpp"
#include "bmv/matcore.hpp"
#include "bmv/tolerances.hpp"

namespace bmv {

// ---------------------------------------------------------------------------
// Complete-monotonicity testing via alternating forward differences

struct CmGrid {
  double lambda0 = 0.0;
  double h = 0.05;
  int count = 64;
};

inline std::vector<CmGrid> default_cm_grids() { return {{0.0, 0.05, 64}, {0.0, 0.2, 64}}; }

struct CmOrderMargin {
  int order = 0;
  double worst_margin = 0;  // min over nodes of (-1)^k Delta_h^k f; >= 0 for CM f
  double scale = 0;         // absolute mass at the worst node
  int node = 0;
};

/// For each k <= max_order, the worst value of (-1)^k Delta_h^k f over the
/// grid. Divided differences of a completely monotone function are
/// sign-definite at every h, so this is a tolerance-friendly falsification
/// test that avoids high-order FD noise.
inline std::vector<CmOrderMargin> cm_margins(const std::vector<double>& values,
                                             const CmGrid& grid, int max_order) {
  if (static_cast<int>(values.size()) != grid.count)
    throw DomainError("cm_margins: value count does not match grid");
  if (max_order + 1 > grid.count)
    throw DomainError("cm_margins: grid too short for requested order");
  for (double v : values)
    if (!std::isfinite(v)) throw DomainError("cm_margins: non-finite value on grid");
  std::vector<CmOrderMargin> out;
  for (int k = 0; k <= max_order; ++k) {
    CmOrderMargin m;
    m.order = k;
    m.worst_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i + k < grid.count; ++i) {
      double margin = 0, mass = 0;
      for (int q = 0; q <= k; ++q) {
        const double c = static_cast<double>(binomial_u64(k, q));
        const double term = ((q % 2) ? -c : c) * values[i + q];
        margin += term;
        mass += std::abs(term);
      }
      if (margin < m.worst_margin) {
        m.worst_margin = margin;
        m.scale = mass;
        m.node = i;
      }
    }
    out.push_back(m);
  }
  return out;
}

inline std::vector<double> tabulate(const std::function<double(double)>& f, const CmGrid& g) {
  std::vector<double> v(g.count);
  for (int i = 0; i < g.count; ++i) v[i] = f(g.lambda0 + i * g.h);
  return v;
}

// ---------------------------------------------------------------------------
// e_j(e^{A - lambda B}) checks

struct CmCheckOutcome {
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_scale = 0;
  int worst_order = -1;
  double worst_h = 0;
  double cross_gap = 0;  // wedge-trace equality residual (where applicable)
  bool pass = true;
  std::vector<double> per_order_worst;  // worst margin per difference order, across grids
};

/// f(lambda) = e_j(exp(A - lambda B)) via the scalar symmetric-function route.
inline double ej_exp_value(const HermitianMatrix& a, const PositiveMatrix& b, double lambda,
                           int j) {
  MatC m = a.mat() - lambda * b.mat();
  SpectralDecomposition sd = eig(HermitianMatrix(std::move(m)));
  std::vector<double> expd(sd.eigenvalues.size());
  for (size_t i = 0; i < expd.size(); ++i) {
    if (sd.eigenvalues(i) > tol::exp_eig_overflow)
      throw DomainError("ej_exp_value: eigenvalue overflow");
    expd[i] = std::exp(sd.eigenvalues(i));
  }
  return elem_sym_from_eigs(expd, j);
}

/// Complete-monotonicity margins of lambda -> e_j(e^{A-lambda B}), checked on
/// the given grids; additionally verifies the wedge route
/// Tr exp(lift(A) - lambda lift(B)) against the scalar route.
inline CmCheckOutcome theorem4b_check(const HermitianMatrix& a, const PositiveMatrix& b, int j,
                                      const std::vector<CmGrid>& grids = default_cm_grids(),
                                      int max_order = 8, double tol_rel = tol::margin_rtol) {
  const int n = a.n();
  if (j < 1 || j > n) throw DomainError("theorem4b_check: order out of range");
  MatC alpha = wedge_sum_lift(a.mat(), j);
  MatC gamma = wedge_sum_lift(b.mat(), j);
  CmCheckOutcome out;
  out.per_order_worst.assign(max_order + 1, std::numeric_limits<double>::infinity());
  for (const CmGrid& g : grids) {
    std::vector<double> values(g.count);
    for (int i = 0; i < g.count; ++i) {
      const double lambda = g.lambda0 + i * g.h;
      values[i] = ej_exp_value(a, b, lambda, j);
      SpectralDecomposition sd = eig(HermitianMatrix(MatC(alpha - lambda * gamma)));
      double wedge_trace = 0;
      for (Eigen::Index q = 0; q < sd.eigenvalues.size(); ++q)
        wedge_trace += std::exp(sd.eigenvalues(q));
      const double gap =
          std::abs(values[i] - wedge_trace) / std::max({std::abs(values[i]), 1.0});
      out.cross_gap = std::max(out.cross_gap, gap);
    }
    if (out.cross_gap > tol::wedge_trace_eq) {
      std::ostringstream os;
      os << "theorem4b_check: scalar and wedge-trace routes disagree (gap " << out.cross_gap
         << ")";
      throw ConsistencyError(os.str());
    }
    for (const CmOrderMargin& m : cm_margins(values, g, max_order)) {
      out.per_order_worst[m.order] = std::min(out.per_order_worst[m.order], m.worst_margin);
      if (m.worst_margin < out.worst_margin) {
        out.worst_margin = m.worst_margin;
        out.worst_scale = m.scale;
        out.worst_order = m.order;
        out.worst_h = g.h;
      }
      if (m.worst_margin < -tol_rel * std::max(m.scale, 1e-300)) out.pass = false;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Theorem 4a: simplex-ordered exponential integrals

struct SimplexIntegralResult {
  int k = 0, j = 0;
  double value_blockexp = 0;
  double value_mc = 0;
  double mc_stderr = 0;
  long samples = 0;
  double scale = 0;       // MC absolute-mass estimate of the integrand
  int wedge_dim = 0;
};

struct SimplexOptions {
  long mc_samples = 20000;
  std::uint64_t seed = 12345;
  long chunk = 1024;       // per-chunk seeding, fixed reduction order
  int wedge_cap = 256;     // C(n,j)*(k+1) <= cap for the block exponential
  double gate_sigmas = 4.0;
};

/// int over the simplex {s_i >= 0, sum s = 1} of
/// e_j(e^{s_1 A} B e^{s_2 A} ... B e^{s_{k+1} A}) ds_1..ds_k (volume 1/k!).
///
/// Deterministic route: lift to wedge space (alpha = lift(A), beta =
/// compound(B)); the ordered integral is the top-right block of exp of the
/// (k+1)x(k+1) block upper-bidiagonal operator with alpha on the diagonal and
/// beta above it; tracing that block gives the value. Monte Carlo route:
/// average e_j over uniform Dirichlet samples, divided by k!. The two must
/// agree within gate_sigmas standard errors.
inline SimplexIntegralResult simplex_integral_ej(const HermitianMatrix& a,
                                                 const PositiveMatrix& b, int k, int j,
                                                 SimplexOptions opt = {}) {
  const int n = a.n();
  if (k < 1) throw DomainError("simplex_integral_ej: k must be >= 1");
  if (j < 1 || j > n) throw DomainError("simplex_integral_ej: order out of range");
  const int d = static_cast<int>(binomial_u64(n, j));
  if (d * (k + 1) > opt.wedge_cap)
    throw DomainError("simplex_integral_ej: wedge dimension exceeds cap");
  SimplexIntegralResult res;
  res.k = k;
  res.j = j;
  res.wedge_dim = d;

  // block-exponential route
  MatC alpha = wedge_sum_lift(a.mat(), j);
  MatC beta = compound(b.mat(), j);
  const int bd = d * (k + 1);
  MatC h = MatC::Zero(bd, bd);
  for (int blockrow = 0; blockrow <= k; ++blockrow) {
    h.block(blockrow * d, blockrow * d, d, d) = alpha;
    if (blockrow < k) h.block(blockrow * d, (blockrow + 1) * d, d, d) = beta;
  }
  MatC eh = h.exp();
  const cxd corner_trace = eh.block(0, k * d, d, d).trace();
  res.value_blockexp = corner_trace.real();

  // Monte Carlo route
  SpectralDecomposition sd = eig(a);
  auto exp_sa = [&](double s) {
    return apply_spectral(sd, [&](double x) { return cxd(std::exp(s * x), 0); });
  };
  double fact = 1;
  for (int i = 2; i <= k; ++i) fact *= i;
  long done = 0;
  double sum = 0, sumsq = 0, abs_sum = 0, imag_sum = 0;
  std::vector<double> s(k + 1);
  for (long chunk_start = 0; chunk_start < opt.mc_samples; chunk_start += opt.chunk) {
    Rng rng(derive_seed(opt.seed, stream_tag("simplex-mc"),
                        static_cast<std::uint64_t>(chunk_start / opt.chunk)));
    const long hi = std::min(opt.mc_samples, chunk_start + opt.chunk);
    for (long i = chunk_start; i < hi; ++i) {
      double total = 0;
      for (int q = 0; q <= k; ++q) {
        s[q] = rng.exponential();
        total += s[q];
      }
      for (int q = 0; q <= k; ++q) s[q] /= total;
      MatC word = exp_sa(s[0]);
      for (int q = 1; q <= k; ++q) word = word * (b.mat() * exp_sa(s[q]));
      const cxd ej = elem_sym_of_matrix(word, j);
      sum += ej.real();
      sumsq += ej.real() * ej.real();
      abs_sum += std::abs(ej);
      imag_sum += ej.imag();
      ++done;
    }
  }
  const double mean = sum / done;
  const double var = std::max(0.0, sumsq / done - mean * mean);
  res.samples = done;
  res.value_mc = mean / fact;
  res.mc_stderr = std::sqrt(var / done) / fact;
  res.scale = abs_sum / done / fact;
  if (std::abs(imag_sum / done) >
      tol::imag_part_rtol * std::max(1.0, res.scale) + 5.0 * res.mc_stderr * fact)
    throw ConsistencyError("simplex_integral_ej: imaginary part of MC mean is not noise");
  // cyclicity can make the integrand constant (k = 1 always); the gate then
  // needs a roundoff floor for the two routes' linear algebra
  const double gate_floor =
      1e-12 * std::max({1.0, std::abs(res.value_blockexp), res.scale});
  if (std::abs(res.value_blockexp - res.value_mc) >
      opt.gate_sigmas * std::max(res.mc_stderr, gate_floor)) {
    std::ostringstream os;
    os << "simplex_integral_ej: block-exponential and Monte Carlo disagree ("
       << res.value_blockexp << " vs " << res.value_mc << " +- " << res.mc_stderr << ", "
       << done << " samples)";
    throw ConsistencyError(os.str());
  }
  return res;
}

// ---------------------------------------------------------------------------
// Determinant identity and the e_2 remark

struct DetIdentityReport {
  double lhs = 0;   // det e^{A - lambda B}
  double rhs = 0;   // e^{Tr A - lambda Tr B}
  double gap = 0;   // relative
};

/// det e^{A - lambda B} = e^{Tr A - lambda Tr B}, unconditionally (no
/// positivity needed). The determinant travels through LU of the computed
/// exponential so the two sides take genuinely different routes.
inline DetIdentityReport det_identity_check(const HermitianMatrix& a, const HermitianMatrix& b,
                                            double lambda) {
  MatC m = a.mat() - lambda * b.mat();
  PositiveMatrix e = matrix_exp(HermitianMatrix(std::move(m)));
  const cxd det = e.mat().determinant();
  const double rhs = std::exp(a.mat().trace().real() - lambda * b.mat().trace().real());
  DetIdentityReport rep;
  rep.lhs = det.real();
  rep.rhs = rhs;
  rep.gap = std::abs(det - cxd(rhs, 0)) / std::max(std::abs(det), rhs);
  return rep;
}

struct E2DifferenceOutcome {
  double identity_worst_gap = 0;  // e2 route vs ((Tr)^2 - Tr sq)/2 per node
  CmCheckOutcome cm;
};

/// The e_2 remark: f(lambda) = ((Tr e^{A-lambda B})^2 - Tr e^{2(A-lambda B)})/2
/// should itself be completely monotone. Verifies the algebraic identity
/// against the e_2 route per node, then runs the CM margins.
inline E2DifferenceOutcome e2_difference_check(const HermitianMatrix& a, const PositiveMatrix& b,
                                               const std::vector<CmGrid>& grids =
                                                   default_cm_grids(),
                                               int max_order = 8,
                                               double tol_rel = tol::margin_rtol) {
  if (a.n() < 2) throw DomainError("e2_difference_check: need n >= 2");
  E2DifferenceOutcome out;
  out.cm.worst_margin = std::numeric_limits<double>::infinity();
  out.cm.per_order_worst.assign(max_order + 1, std::numeric_limits<double>::infinity());
  for (const CmGrid& g : grids) {
    std::vector<double> values(g.count);
    for (int i = 0; i < g.count; ++i) {
      const double lambda = g.lambda0 + i * g.h;
      MatC m = a.mat() - lambda * b.mat();
      SpectralDecomposition sd = eig(HermitianMatrix(std::move(m)));
      double tr = 0, tr2 = 0;
      std::vector<double> expd(sd.eigenvalues.size());
      for (Eigen::Index q = 0; q < sd.eigenvalues.size(); ++q) {
        expd[q] = std::exp(sd.eigenvalues(q));
        tr += expd[q];
        tr2 += expd[q] * expd[q];
      }
      values[i] = 0.5 * (tr * tr - tr2);
      const double e2 = elem_sym_from_eigs(expd, 2);
      const double gap = std::abs(values[i] - e2) / std::max(0.5 * (tr * tr + tr2), 1e-300);
      out.identity_worst_gap = std::max(out.identity_worst_gap, gap);
      if (gap > tol::e2_identity)
        throw ConsistencyError("e2_difference_check: algebraic identity violated");
    }
    for (const CmOrderMargin& m : cm_margins(values, g, max_order)) {
      out.cm.per_order_worst[m.order] =
          std::min(out.cm.per_order_worst[m.order], m.worst_margin);
      if (m.worst_margin < out.cm.worst_margin) {
        out.cm.worst_margin = m.worst_margin;
        out.cm.worst_scale = m.scale;
        out.cm.worst_order = m.order;
        out.cm.worst_h = g.h;
      }
      if (m.worst_margin < -tol_rel * std::max(m.scale, 1e-300)) out.cm.pass = false;
    }
  }
  return out;
}

}  // namespace bmv
