#pragma once

#include <Eigen/Dense>
#include <sstream>

#include "bmv/common.hpp"
#include "bmv/tolerances.hpp"

namespace bmv {

/// Dense hermitian matrix. Construction symmetrizes (M+M*)/2 when the
/// hermiticity residual is below tolerance and rejects the input otherwise;
/// a silently non-hermitian matrix would invalidate every downstream check.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(MatC m) {
    if (m.rows() < 1 || m.rows() != m.cols())
      throw DomainError("HermitianMatrix: need square matrix with n >= 1");
    const double res = hermiticity_residual(m);
    if (res > tol::hermiticity_rtol) {
      std::ostringstream os;
      os << "HermitianMatrix: hermiticity residual " << res << " exceeds "
         << tol::hermiticity_rtol;
      throw DomainError(os.str());
    }
    m_ = 0.5 * (m + m.adjoint().eval());
  }

  int n() const { return static_cast<int>(m_.rows()); }
  const MatC& mat() const { return m_; }

 private:
  MatC m_;
};

struct SpectralDecomposition {
  VecD eigenvalues;  // ascending
  MatC unitary;      // columns are eigenvectors
};

/// eig with validated invariants: unitarity of U and reconstruction residual.
inline SpectralDecomposition eig(const HermitianMatrix& h) {
  Eigen::SelfAdjointEigenSolver<MatC> solver(h.mat());
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eig: solver failed to converge (n=" << h.n()
       << ", ||M||_F=" << frobenius(h.mat()) << ")";
    throw ConsistencyError(os.str());
  }
  SpectralDecomposition sd{solver.eigenvalues(), solver.eigenvectors()};
  const int n = h.n();
  const double u_res = (sd.unitary * sd.unitary.adjoint() - MatC::Identity(n, n)).norm();
  const MatC rec = sd.unitary * sd.eigenvalues.cast<cxd>().asDiagonal() * sd.unitary.adjoint();
  const double r_res = (rec - h.mat()).norm() / std::max(1.0, frobenius(h.mat()));
  if (u_res > tol::unitarity_rtol || r_res > tol::eig_residual_rtol) {
    std::ostringstream os;
    os << "eig: residuals out of tolerance (unitarity " << u_res << ", reconstruction "
       << r_res << ")";
    throw ConsistencyError(os.str());
  }
  return sd;
}

/// Positive (semi)definite matrix; validates the spectrum at construction.
class PositiveMatrix {
 public:
  explicit PositiveMatrix(HermitianMatrix base, bool require_definite = false)
      : base_(std::move(base)), definite_(require_definite) {
    SpectralDecomposition sd = eig(base_);
    lmin_ = sd.eigenvalues(0);
    lmax_ = sd.eigenvalues(base_.n() - 1);
    const double floor = -tol::psd_eig_rtol * std::max(lmax_, 0.0);
    if (lmin_ < floor) {
      std::ostringstream os;
      os << "PositiveMatrix: eigenvalue " << lmin_ << " below PSD floor " << floor;
      throw DomainError(os.str());
    }
    if (require_definite && lmin_ <= 0) {
      std::ostringstream os;
      os << "PositiveMatrix: lambda_min = " << lmin_ << " is not strictly positive";
      throw DomainError(os.str());
    }
    definite_ = lmin_ > 0;
  }

  const HermitianMatrix& base() const { return base_; }
  const MatC& mat() const { return base_.mat(); }
  int n() const { return base_.n(); }
  bool definite() const { return definite_; }
  double lambda_min() const { return lmin_; }
  double lambda_max() const { return lmax_; }

 private:
  HermitianMatrix base_;
  bool definite_;
  double lmin_ = 0, lmax_ = 0;
};

/// U f(Lambda) U* for a scalar map f applied to the spectrum.
template <class F>
MatC apply_spectral(const SpectralDecomposition& sd, F&& f) {
  Eigen::VectorXcd mapped(sd.eigenvalues.size());
  for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) mapped(i) = f(sd.eigenvalues(i));
  return sd.unitary * mapped.asDiagonal() * sd.unitary.adjoint();
}

/// M^p via the spectral decomposition. Non-integer or negative p requires a
/// positive definite input; integer p >= 0 accepts any hermitian matrix.
inline HermitianMatrix matrix_power(const HermitianMatrix& m, double p) {
  const int n = m.n();
  if (p == 0.0) return HermitianMatrix(MatC::Identity(n, n));
  if (p == 1.0) return m;
  SpectralDecomposition sd = eig(m);
  const bool int_p = is_integer_valued(p);
  if (!int_p || p < 0.0) {
    const double lmin = sd.eigenvalues(0);
    if (lmin <= 0) {
      std::ostringstream os;
      os << "matrix_power: exponent " << p << " needs positive definite input, lambda_min = "
         << lmin;
      throw DomainError(os.str());
    }
  }
  MatC r = int_p ? apply_spectral(sd, [&](double x) { return cxd(ipow(x, std::lround(p)), 0); })
                 : apply_spectral(sd, [&](double x) { return cxd(std::pow(x, p), 0); });
  return HermitianMatrix(std::move(r));
}

/// e^M for hermitian M; the result is positive definite.
inline PositiveMatrix matrix_exp(const HermitianMatrix& m) {
  SpectralDecomposition sd = eig(m);
  const double lmax = sd.eigenvalues(m.n() - 1);
  if (lmax > tol::exp_eig_overflow) {
    std::ostringstream os;
    os << "matrix_exp: eigenvalue " << lmax << " would overflow exp()";
    throw DomainError(os.str());
  }
  MatC r = apply_spectral(sd, [](double x) { return cxd(std::exp(x), 0); });
  return PositiveMatrix(HermitianMatrix(std::move(r)), true);
}

}  // namespace bmv
