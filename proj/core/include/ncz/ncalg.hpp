#pragma once

// Finite von Neumann algebra core on M_d: Hermitian functional calculus,
// spectral projections, projection lattice meets/joins, and single-matrix
// norm functionals under the normalized trace tr(1) = 1.

#include <functional>
#include <span>
#include <vector>

#include "ncz/matrix.hpp"
#include "ncz/tolerances.hpp"

namespace ncz {

struct SpectralDecomp {
    std::vector<double> eigenvalues;  // ascending
    Matrix vectors;                   // unitary, columns are eigenvectors
};

// Cyclic Jacobi diagonalization for Hermitian matrices. Throws
// std::invalid_argument with the Hermitian defect if the input is not
// Hermitian within tol::herm * max(1, ||A||_max).
SpectralDecomp herm_eig(const Matrix& a);

// U diag(phi(lambda)) U*. Throws if phi is undefined (non-finite) at an
// eigenvalue.
Matrix func_calc(const Matrix& a, const std::function<double(double)>& phi);

// Real interval with individually open/closed endpoints. Membership at an
// endpoint is decided with a tolerance band: a closed endpoint includes
// values within band beyond it, an open endpoint excludes values within
// band inside it.
struct Interval {
    double lo;
    double hi;
    bool lo_open;
    bool hi_open;

    static Interval open_closed(double a, double b) { return {a, b, true, false}; }
    static Interval closed(double a, double b) { return {a, b, false, false}; }
    static Interval above(double a) { return {a, kInf, true, true}; }
    static Interval at_most(double b) { return {-kInf, b, true, false}; }

    bool contains(double x, double band) const;

    static constexpr double kInf = 1e300;
};

// Projection onto the span of eigenvectors whose eigenvalues lie in the
// interval. Band defaults to tol::band_rel * ||A||_max.
Matrix spectral_proj(const Matrix& a, const Interval& iv);
Matrix spectral_proj(const Matrix& a, const Interval& iv, double band);

// Lattice operations. Meet is the spectral projection of (sum P_i)/m at
// eigenvalue 1; join is 1 - meet(1 - P_i). Empty input is rejected.
Matrix proj_meet(std::span<const Matrix> ps);
Matrix proj_join(std::span<const Matrix> ps);
Matrix proj_meet(const Matrix& a, const Matrix& b);
Matrix proj_join(const Matrix& a, const Matrix& b);

// max(||P^2 - P||_max, herm defect)
double projection_defect(const Matrix& p);

// Ordering check for projections: a <= b as ||a - b a b||_max within
// tol::order * max(1, ||a||_max).
bool proj_leq(const Matrix& a, const Matrix& b);
double proj_leq_defect(const Matrix& a, const Matrix& b);

// Singular values, ascending (eigenvalues of |A| = (A*A)^{1/2}).
std::vector<double> singular_values(const Matrix& a);

Matrix abs_matrix(const Matrix& a);  // (A*A)^{1/2}
Matrix sqrt_psd(const Matrix& a);    // Hermitian PSD square root (negative part clipped at -tol)

double op_norm(const Matrix& a);     // largest singular value
// Schatten p-norm under the normalized trace: ((1/d) sum sigma_i^p)^{1/p}.
double schatten_norm(const Matrix& a, double p);
double trace_norm(const Matrix& a);  // schatten p = 1

double min_eig_herm(const Matrix& a);
double max_eig_herm(const Matrix& a);

// All eigenvalues >= -tol_scaled where tol_scaled = tol * max(1, ||a||_max).
bool is_positive_semidef(const Matrix& a, double tol = tol::proj);

}  // namespace ncz
