#pragma once

// Central numeric tolerances. Identity checks are absolute; spectral
// tolerances scale with the matrix at the call site.
namespace ncz::tol {

inline constexpr double eig = 1e-12;        // Jacobi convergence, relative to ||A||_F
inline constexpr double herm = 1e-8;        // Hermitian defect accepted on input
inline constexpr double proj = 1e-8;        // idempotence defect accepted on input
inline constexpr double band_rel = 1e-9;    // spectral interval endpoint band, times ||A||
inline constexpr double meet = 1e-8;        // eigenvalue-1 band in projection meets
inline constexpr double order = 1e-8;       // projection ordering checks
inline constexpr double identity = 1e-8;    // exact algebraic identities
inline constexpr double identity_tight = 1e-10;
inline constexpr double delta = 1e-9;       // martingale-difference closed forms
inline constexpr double slack = 1e-9;       // relative slack on inequality asserts

}  // namespace ncz::tol
