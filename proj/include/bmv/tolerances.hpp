#pragma once

// Every tolerance used by a check lives here, pinned at compile time.

namespace bmv::tol {

inline constexpr double hermiticity_rtol = 1e-12;     // construction gate for HermitianMatrix
inline constexpr double psd_eig_rtol = 1e-10;         // eigenvalue floor for PositiveMatrix
inline constexpr double eig_residual_rtol = 1e-10;    // reconstruction residual of eig()
inline constexpr double unitarity_rtol = 1e-10;       // ||U U* - I||_F
inline constexpr double power_roundtrip = 1e-9;       // matrix_power(matrix_power(M,p),1/p) vs M
inline constexpr double det_exp_identity = 1e-12;     // det e^M vs e^{Tr M}, det identity check
inline constexpr double margin_rtol = 1e-8;           // float-path finding threshold (per scale)
inline constexpr double coeff_cross_path = 1e-9;      // word-sum vs interpolation coefficients
inline constexpr double ej_cross_path = 1e-9;         // e_j vs trace-of-compound
inline constexpr double wedge_exp_identity = 1e-9;    // exp(lift) vs compound(exp)
inline constexpr double wedge_trace_eq = 1e-9;        // e_j(e^{A-lB}) vs Tr e^{a-lg}
inline constexpr double class_vs_full = 1e-10;        // class-reduced vs full word sums (float)
inline constexpr double t3_j1_vs_ck = 1e-10;          // theorem3 margin at j=1 vs coefficient
inline constexpr double e2_identity = 1e-10;          // e2 vs (Tr^2 - Tr sq)/2 per node
inline constexpr double lemma1_float_gap = 1e-6;      // duality identity, FD evaluation
inline constexpr double integral_vs_spectral = 1e-7;  // quadrature vs spectral power trace
inline constexpr double resolvent_fd = 1e-6;          // resolvent derivative vs entrywise FD
inline constexpr double quad_rtol = 1e-9;             // adaptive quadrature refinement target
inline constexpr double imag_part_rtol = 1e-8;        // imaginary-part consistency gate
inline constexpr double exp_eig_overflow = 700.0;     // eigenvalue cap before exp() overflows

}  // namespace bmv::tol
