#pragma once

// Hardy and BMO norm functionals over the dyadic filtration, Hardy-space
// atoms (cube-supported and projection-localized), and atom-level operator
// bounds. Row norms of f are the column norms of f*, but both sides are
// computed directly from their own square functions.

#include <span>

#include "ncz/operators.hpp"
#include "ncz/report_types.hpp"

namespace ncz {

struct NormReport {
    double H1r = 0.0, H1c = 0.0;
    double h1r = 0.0, h1c = 0.0, h1d = 0.0;
    std::map<double, double> Hp_r, Hp_c;
    double BMOr = 0.0, BMOc = 0.0, BMO = 0.0;
    double bmor = 0.0, bmoc = 0.0, bmod = 0.0, bmo = 0.0;
};

// Square-function norms: H1c = ||(sum_k df_k* df_k)^{1/2}||_1 and friends;
// h1c conditions the square function on the previous generation; h1d is
// sum_k ||df_k||_1. Hp entries evaluate the same square functions in L_p.
NormReport hardy_norms(const MatFn& f, std::span<const double> ps = {});

// BMO_c = sup_k ||E_k[(f-f_{k-1})*(f-f_{k-1})]||^{1/2} over k >= 1;
// bmo_c conditions on the same generation and adds the coarse piece
// ||E_0 f||_1; bmo_d = sup_k ||df_k||_inf.
NormReport bmo_norms(const MatFn& f);

enum class AtomKind { mei_column, mei_row, perrin_c, perrin_r, unit_a1 };

const char* to_string(AtomKind k);

struct AtomSpec {
    AtomKind kind = AtomKind::mei_column;
    MatFn a;
    CubeIndex cube;  // mei kinds
    int k0 = 0;      // perrin kinds
    MatFn e;         // perrin kinds: generation-k0 projection-valued function
};

// Random atom satisfying the kind's constraints exactly: support imposed,
// mean removed algebraically, normalization applied by scaling.
AtomSpec make_atom(AtomKind kind, const Grid& g, int d, Rng& rng);

struct AtomCheck {
    bool ok = true;
    double support_defect = 0.0;
    double mean_defect = 0.0;
    double norm_slack = 0.0;  // bound minus attained normalization (>= 0 when ok)
};

AtomCheck verify_atom(const AtomSpec& atom);

// Hansen inequality for a cube-supported function:
// tau(int_Q |a|) <= sqrt(|Q|) tau[(int_Q |a|^2)^{1/2}].
struct HansenCheck {
    double lhs = 0.0, rhs = 0.0;
};
HansenCheck hansen_check(const MatFn& a, const CubeIndex& q);

// Per-atom operator bounds: total/near/far L1 mass of T(a) (2Q realized as
// the dyadic parent), the Hansen check, and for projection-localized atoms
// the chain ||T(a) e||_1 <= ||T(a)||_2 ||e||_2.
ProbeReport atom_operator_bound(const OperatorSpec& op, AtomKind kind, const EnsembleSpec& ens);

// Per-sample checks of ||Pi_rho^c f||_{BMO_r} <= ||rho||_{BMO_r} ||f||_inf
// plus the measured h1d-form ratio ||sum_k (rho - rho_k) df_k||_1 /
// (bmo(rho) h1d(f)).
ProbeReport paraproduct_bmo_estimate(const MatFn& rho, const EnsembleSpec& ens);

// Sampled lower form of the John-Nirenberg equivalence: for random rank-one
// beta in A_k with ||beta||_1 <= 1, record ||beta (f - f_k)||_1 / bmo(f).
ProbeReport john_nirenberg_sample(const MatFn& f, int betas_per_level, Rng& rng);

}  // namespace ncz
