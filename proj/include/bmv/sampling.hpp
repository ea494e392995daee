#pragma once

#include "bmv/common.hpp"
#include "bmv/matcore.hpp"
#include "bmv/rat_matrix.hpp"

namespace bmv {

struct PsdSpec {
  double cond_bound = 100.0;  // lambda_max / lambda_min <= cond_bound
  double scale = 1.0;         // lambda_max
  bool complex_entries = true;
};

/// Seeded hermitian sample with entries bounded by `scale` in absolute value.
inline HermitianMatrix sample_hermitian(int n, std::uint64_t seed, double scale = 1.0,
                                        bool complex_entries = true) {
  if (n < 1) throw DomainError("sample_hermitian: n must be >= 1");
  Rng rng(seed);
  MatC m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = cxd(rng.uniform(-scale, scale), 0.0);
    for (int j = i + 1; j < n; ++j) {
      const double re = rng.uniform(-scale, scale);
      const double im = complex_entries ? rng.uniform(-scale, scale) : 0.0;
      // off-diagonals scaled so the symmetrized entry stays within [-scale, scale]
      m(i, j) = cxd(re, im) / std::sqrt(2.0);
      m(j, i) = std::conj(m(i, j));
    }
  }
  return HermitianMatrix(std::move(m));
}

/// Positive definite sample: U diag(spread) U* with a log-uniform eigenvalue
/// spread pinned to lambda_max = scale, lambda_max/lambda_min <= cond_bound.
inline PositiveMatrix sample_psd(int n, std::uint64_t seed, const PsdSpec& spec = {}) {
  if (n < 1) throw DomainError("sample_psd: n must be >= 1");
  if (spec.cond_bound < 1.0) throw DomainError("sample_psd: cond_bound must be >= 1");
  HermitianMatrix h =
      sample_hermitian(n, derive_seed(seed, stream_tag("psd-basis")), 1.0, spec.complex_entries);
  SpectralDecomposition sd = eig(h);
  Rng rng(derive_seed(seed, stream_tag("psd-spread")));
  Eigen::VectorXcd lam(n);
  double umax = 0.0;
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) {
    u[i] = (n == 1) ? 1.0 : rng.uniform01();
    umax = std::max(umax, u[i]);
  }
  for (int i = 0; i < n; ++i) lam(i) = cxd(spec.scale * std::pow(spec.cond_bound, u[i] - umax), 0);
  MatC m = sd.unitary * lam.asDiagonal() * sd.unitary.adjoint();
  return PositiveMatrix(HermitianMatrix(std::move(m)), true);
}

/// Exact PSD sample G^T G with integer G; optionally plus ridge*I (making it
/// positive definite, still exact).
inline RatMat sample_psd_rational(int n, std::uint64_t seed, int entry_range = 3,
                                  long ridge = 0) {
  if (n < 1) throw DomainError("sample_psd_rational: n must be >= 1");
  Rng rng(seed);
  RatMat g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g.at(i, j) = rat(rng.uniform_int(-entry_range, entry_range));
  RatMat m = transpose(g) * g;
  for (int i = 0; i < n; ++i) m.at(i, i) += ridge;
  return m;
}

/// Exact symmetric (generally indefinite) integer sample.
inline RatMat sample_symmetric_rational(int n, std::uint64_t seed, int entry_range = 3) {
  if (n < 1) throw DomainError("sample_symmetric_rational: n must be >= 1");
  Rng rng(seed);
  RatMat m(n);
  for (int i = 0; i < n; ++i) {
    m.at(i, i) = rat(rng.uniform_int(-entry_range, entry_range));
    for (int j = i + 1; j < n; ++j) {
      m.at(i, j) = rat(rng.uniform_int(-entry_range, entry_range));
      m.at(j, i) = m.at(i, j);
    }
  }
  return m;
}

}  // namespace bmv
