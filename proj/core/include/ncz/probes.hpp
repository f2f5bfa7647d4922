#pragma once

// Open-problem experiments: the Gundy three-part martingale splitting, the
// left/right CZ decomposition of the row/column split, and randomized
// probes of the triangular-truncation inequalities with a counterexample
// ledger. All ratios here are measurements, never assertions.

#include <optional>
#include <string>

#include "ncz/cuculescu.hpp"
#include "ncz/ensemble.hpp"
#include "ncz/report_types.hpp"

namespace ncz {

struct GundyParts {
    // Differences for k = 1..K: d_alpha[k-1] etc.
    std::vector<MatFn> d_alpha, d_beta, d_gamma;
    MatFn alpha, beta, gamma;  // summed martingale parts (coarse piece excluded)
};

// d_alpha_k = q_k df_k q_k - E_{k-1}(q_k df_k q_k),
// d_beta_k  = q_{k-1} df_k q_{k-1} - q_k df_k q_k + E_{k-1}(q_k df_k q_k),
// d_gamma_k = df_k - q_{k-1} df_k q_{k-1}.
GundyParts gundy_decompose(const MatFn& f, double lambda);

struct GundyEstimates {
    double alpha_ratio = 0.0;  // (1/lambda) ||alpha||_2^2 / ||f||_1
    double beta_ratio = 0.0;   // sum_k ||d_beta_k||_1 / ||f||_1
    double gamma_ratio = 0.0;  // lambda phi(join_k supp* d_gamma_k) / ||f||_1
    double sum_defect = 0.0;   // per-level d_alpha + d_beta + d_gamma vs df_k
};

GundyEstimates gundy_estimates(const MatFn& f, double lambda, const GundyParts& parts);

// supp* a = 1 - q with q the largest projection with q a q = 0, computed as
// the join of the left and right supports.
Matrix star_support(const Matrix& a);

struct LeftRightCZ {
    MatFn g_r, b_r;  // left decomposition of f_r
    MatFn g_c, b_c;  // right decomposition of f_c
    double good_r_ratio = 0.0;  // ||g_r||_2^2 / (lambda ||f||_1)
    double good_c_ratio = 0.0;
    double bad_l1_ratio = 0.0;  // sum_k (||phat_k (f_r - E_k f_r)||_1 + ||(f_c - E_k f_c) phat_k||_1) / ||f||_1
};

LeftRightCZ leftright_cz(const MatFn& f, const LacunaryFamily& fam, int ell);

// Triangular-truncation probes: R1 = ||sum alpha_k Tr_k(beta_k)||_1 /
// sum ||alpha_k beta_k||_1 and R2 with denominator
// sup ||alpha_k||_inf * sum ||beta_k||_1. Truncations come from the
// lacunary projections of a fresh positive driver per sample. Samples that
// exceed the running maxima are appended to the JSON-lines ledger with full
// serializations.
struct TruncationProbeParams {
    int s_min = -4;
    std::string ledger_path;  // empty disables the ledger
    bool adversarial = false; // bias beta toward strict upper-triangular mass
};

ProbeReport truncation_probe(const EnsembleSpec& ens, const TruncationProbeParams& params);

}  // namespace ncz
