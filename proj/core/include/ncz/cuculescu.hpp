#pragma once

// Cuculescu's construction at a fixed threshold, the four-part CZ
// decomposition, lacunary projection families, triangular truncations, the
// row/column split, and the auxiliary projections q-hat and zeta.
//
// Conventions: the filtration starts at generation 0 with q_{-1} = 1. The
// Cuculescu step is q_k = q_{k-1} * chi_{[0,lambda]}(q_{k-1} f_k q_{k-1}),
// the closed endpoint at 0 intersected with q_{k-1}; this keeps the sequence
// decreasing when the compressions are singular.

#include <utility>
#include <vector>

#include "ncz/dyadic.hpp"

namespace ncz {

struct CuculescuSeq {
    double lambda = 0.0;
    // q[k] and p[k] for k = 0..K, each constant on generation-k cubes;
    // p[k] = q_{k-1} - q_k with q_{-1} = 1. Terminal projection q = q[K].
    std::vector<MatFn> q;
    std::vector<MatFn> p;

    const MatFn& terminal() const { return q.back(); }
};

// Requires f positive (all leaf eigenvalues >= -tol) and lambda > 0.
CuculescuSeq cuculescu_run(const MatFn& f, double lambda);

struct CZParts {
    MatFn g_d, b_d, b_off, g_off;
};

CZParts cz_decompose(const MatFn& f, const CuculescuSeq& seq);
CZParts cz_decompose(const MatFn& f, double lambda);

// Series term g_{k,s} = p_k df_{k+s} q_{k+s-1} + q_{k+s-1} df_{k+s} p_k
// (k >= 0, s >= 1, k+s <= K) and the full series sum.
MatFn cz_series_term(const MatFn& f, const CuculescuSeq& seq, int k, int s);
MatFn cz_series_sum(const MatFn& f, const CuculescuSeq& seq);

struct DeltaFormulasReport {
    double max_bd = 0.0;     // Delta_k(b_d) vs sum_{j<=k-1} p_j df_k p_j
    double max_goff = 0.0;   // Delta_k(g_off) vs (1-q_{k-1}) df_k q_{k-1} + sym
    double max_qsandwich = 0.0;  // q_{k-1} Delta_k(gamma) q_{k-1} for the three bad parts
};

DeltaFormulasReport delta_formulas_check(const MatFn& f, const CuculescuSeq& seq,
                                         const CZParts& parts);

// Lacunary family over thresholds 2^s, s in [s_min, s_max]. Requires
// 2^{s_max} >= ||f||_inf so the top run is trivial and the finite meets
// agree with the paper-side infinite ones.
class LacunaryFamily {
public:
    int s_min() const { return s_min_; }
    int s_max() const { return s_max_; }
    const Grid& grid() const { return grid_; }
    int dim() const { return d_; }

    // Cuculescu run at lambda = 2^s.
    const CuculescuSeq& run_at(int s) const;
    // Meet of q_k(2^t) over t in [j, s_max]; j in [s_min, s_max+1]
    // (j = s_max+1 gives the identity).
    const MatFn& meet_from(int j, int k) const;
    // pi_{j,k} = meet_from(j,k) - meet_from(j-1,k), j in (s_min, s_max].
    const MatFn& pi(int j, int k) const;
    // psi_k = meet_from(s_min, k).
    const MatFn& psi(int k) const;

    friend LacunaryFamily lacunary_build(const MatFn& f, int s_min, int s_max);

private:
    Grid grid_;
    int d_ = 0;
    int s_min_ = 0, s_max_ = 0;
    std::vector<CuculescuSeq> runs_;               // index s - s_min
    std::vector<std::vector<MatFn>> meets_;        // [j - s_min][k], j up to s_max+1
    std::vector<std::vector<MatFn>> pis_;          // [j - s_min - 1][k]
};

LacunaryFamily lacunary_build(const MatFn& f, int s_min, int s_max);
// Smallest s with 2^s >= ||f||_inf.
int lacunary_top_exponent(const MatFn& f);

enum class TrianglePart { upper, lower };

// upper: sum_{i<=j} pi_i x pi_j; lower: sum_{i>j} pi_i x pi_j, with the
// lacunary projections at generation k. upper + lower = (1-psi_k) x (1-psi_k).
MatFn triangular_truncate(const MatFn& x, const LacunaryFamily& fam, int k, TrianglePart part);

struct RowColSplit {
    MatFn f_r, f_c, residual;  // residual = f - f_r - f_c
};

// f_r = sum_k LT_{k-1}(df_k), f_c = sum_k UT_{k-1}(df_k).
RowColSplit row_col_split(const MatFn& f, const LacunaryFamily& fam);

struct QhatFamily {
    int ell = 0;                 // lambda = 2^ell
    std::vector<MatFn> qhat_k;   // k = 0..K, meets of q_k(2^s) over s >= ell
    MatFn qhat;                  // = qhat_k[K]
};

// Requires s_min < ell <= s_max.
QhatFamily qhat_build(const LacunaryFamily& fam, int ell);

struct ZetaFamily {
    int shift_s = 0;
    std::vector<MatFn> zeta_k;                          // k = 0..K
    MatFn zeta;                                         // = zeta_k[K]
    std::vector<std::pair<CubeIndex, Matrix>> rho;      // nonzero rho_Q only
};

// rho_Q extracted from qhat_{j-1} - qhat_j; zeta_k = 1 - join of
// rho_Q 1_{ancestor_s(Q)} over generations j <= k (ancestors clamp at the
// root).
ZetaFamily zeta_build(const QhatFamily& qf, const Grid& grid, int shift_s);

struct KeyIdentityReport {
    double max_qhat_pi = 0.0;  // qhat_{k-1} pi_{i,k-1} and pi_{j,k-1} qhat_{k-1}, i,j > ell
    double max_pi_p = 0.0;     // pi_{i,k-1} p_{k-s} and p_{k-s} pi_{j,k-1}, s >= 1, i,j <= ell
};

KeyIdentityReport key_identity_check(const LacunaryFamily& fam, const QhatFamily& qf);

}  // namespace ncz
