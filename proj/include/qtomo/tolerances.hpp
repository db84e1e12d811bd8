#pragma once

// Numerical tolerances shared by the library and its tests.

namespace qtomo::tol {

inline constexpr double hermitian = 1e-12;      // |A - A^dagger| entrywise
inline constexpr double unit_norm = 1e-12;      // |sum |c_i|^2 - 1|
inline constexpr double trace_imag = 1e-12;     // Im Tr(AB) for PSD inputs
inline constexpr double trace_one = 1e-12;      // |Tr rho - 1|
inline constexpr double eig_residual = 1e-10;   // |A v - lambda v|
inline constexpr double psd_state = 1e-10;      // min eigenvalue of a density matrix
inline constexpr double psd_povm = 1e-12;       // min eigenvalue of a POVM element
inline constexpr double completeness = 1e-12;   // |sum M_k - I|_max
inline constexpr double overlap = 1e-12;        // squared fiducial/MUB overlaps
inline constexpr double rank_singular = 1e-9;   // relative singular-value cutoff for rank
inline constexpr double entropy_clamp = 1e-10;  // eigenvalues in [-clamp, 0) are zeroed
inline constexpr double metric_range = 1e-9;    // slack on fidelity/purity/entropy ranges

// Jacobi eigensolver
inline constexpr double jacobi_offdiag = 1e-13;
inline constexpr int jacobi_max_sweeps = 100;

} // namespace qtomo::tol
