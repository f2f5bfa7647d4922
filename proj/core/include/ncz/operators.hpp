#pragma once

// Dyadic operator families with noncommuting kernel data: perfect dyadic
// CZOs (Haar multipliers, paraproducts and their adjoints), cancellative
// Haar shifts of complexity (r,s), martingale transforms, a discretized
// smooth-kernel CZO, and the annihilation / weak-type diagnostics.
//
// Side convention: column operators carry the kernel on the left,
// T_c f(x) = int k(x,y) f(y) dy, so T_c(f u) = T_c(f) u for constant u; row
// operators act with the kernel on the right.

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ncz/cuculescu.hpp"
#include "ncz/ensemble.hpp"

namespace ncz {

enum class Side { row, column };

enum class OpKind {
    haar_multiplier,
    paraproduct,
    paraproduct_adjoint,
    haar_shift,
    martingale_transform,
};

const char* to_string(Side s);
const char* to_string(OpKind k);
Side side_from_string(const std::string& s);
OpKind op_kind_from_string(const std::string& s);

struct ShiftCoef {
    CubeIndex q, r_cube, s_cube;
    int eps_r = 1, eps_s = 1;
    Matrix alpha;
};

struct OperatorSpec {
    OpKind kind = OpKind::haar_multiplier;
    Side side = Side::column;
    int r = 0, s = 0;  // shift complexity
    int d = 1;
    Grid grid;

    std::vector<ShiftCoef> shift;  // haar_shift
    std::vector<MatFn> xi;         // haar_multiplier / martingale_transform: xi[k], k = 0..K-1
    std::optional<MatFn> symbol;   // paraproduct kinds

    OperatorSpec with_side(Side s2) const {
        OperatorSpec c = *this;
        c.side = s2;
        return c;
    }
};

// Structural validation: shift coefficients must pair resolved descendant
// cubes at the stated complexity; xi must be adapted (constant on
// generation-k cubes). Throws std::invalid_argument on violation.
void validate_spec(const OperatorSpec& spec);

// max over the table of ||alpha||_op * |Q| / sqrt(|R||S|); 1 means the
// normalized coefficient bound holds exactly.
double shift_overshoot(const OperatorSpec& spec);

// Sha_alpha f = sum_Q sum_{R,S} alpha <f,h_S> h_R (column: alpha on the
// left of the coefficient; row: on the right).
MatFn apply_haar_shift(const OperatorSpec& spec, const MatFn& f);
// Restriction to table entries with gen(Q) in [gen_lo, gen_hi].
MatFn apply_haar_shift_gens(const OperatorSpec& spec, const MatFn& f, int gen_lo, int gen_hi);

// Martingale-path evaluation of the perfect dyadic operators:
//   H_xi f   = sum_k xi^{(k-1)} . df_k          (side-multiplied)
//   Pi_rho f = sum_k Delta_k(rho) . E_{k-1} f   (column; mirrored for row)
//   adjoint  = sum_k E_{k-1}(Delta_k(rho*) Delta_k f)
MatFn apply_perfect_dyadic(const OperatorSpec& spec, const MatFn& f);
// Kernel-sum evaluation: dense quadrature against the assembled kernel from
// the defining displays. Agrees with the martingale path to rounding.
MatFn apply_perfect_dyadic_kernel(const OperatorSpec& spec, const MatFn& f);
// Pointwise kernel value on a pair of leaves.
Matrix perfect_dyadic_kernel_value(const OperatorSpec& spec, int leaf_x, int leaf_y);

// Section-3 views over an arbitrary adapted sequence / symbol.
MatFn martingale_transform(const OperatorSpec& spec, const MatFn& f);
MatFn mart_paraproduct(const OperatorSpec& spec, const MatFn& f);
MatFn paraproduct_adjoint(const OperatorSpec& spec, const MatFn& f);

// Dispatch on kind (shift -> apply_haar_shift, martingale_transform ->
// martingale_transform, perfect dyadic kinds -> martingale path).
MatFn apply_operator(const OperatorSpec& spec, const MatFn& f);

// Generators.
OperatorSpec make_haar_multiplier(const Grid& g, std::vector<MatFn> xi, Side side);
OperatorSpec make_martingale_transform(const Grid& g, std::vector<MatFn> xi, Side side);
OperatorSpec make_paraproduct(const MatFn& symbol, Side side, bool adjoint = false);
OperatorSpec random_normalized_shift(const Grid& g, int d, int r, int s, Side side, Rng& rng);
// The dyadic Hilbert transform packaged as a (0,1) shift: kernel
// sum_J h_J(x) (h_{J-}(y) - h_{J+}(y)), coefficients +1/-1 times the
// identity. With normalized = true the table is scaled by 2^{-1/2} so the
// coefficient bound holds.
OperatorSpec dyadic_hilbert_spec(const Grid& g, int d, Side side, bool normalized = false);

// Serialization: header naming kind, side, complexity and mesh, then
// coefficient records keyed by cube coordinates. Round-trips are bit-exact.
std::string write_opspec(const OperatorSpec& spec);
OperatorSpec read_opspec(const std::string& text);

// Discretized smooth-kernel CZO: midpoint rule at leaf resolution with the
// diagonal leaf excluded.
using Point = std::array<double, 2>;

struct SmoothKernelSpec {
    std::string name;
    Side side = Side::column;
    int d = 1;
    std::vector<double> params;
    std::function<Matrix(const Point&, const Point&)> sampler;
};

MatFn apply_smooth_czo(const SmoothKernelSpec& spec, const MatFn& f);
// Adjoint with respect to the anti-linear bracket: kernel k(y,x)*.
SmoothKernelSpec smooth_adjoint(const SmoothKernelSpec& spec);
// sup over cubes Q and sample points y in Q of
// sum_{leaves x outside the parent of Q} |leaf| ||k(x,y) - k(x,c_Q)||.
double hormander_functional(const SmoothKernelSpec& spec, const Grid& g);
// Named kernels: "sgn" (sign(x1-y1) times a fixed Hermitian), "inv"
// (1/(x1-y1) times a fixed Hermitian).
SmoothKernelSpec make_smooth_kernel(const std::string& name, int d, Side side);
Point leaf_midpoint(const Grid& g, int leaf);

// Annihilation identities for the proof split. Requires a column-side
// operator and positive f; builds the CZ decomposition at lambda = 2^ell and
// the lacunary family on [s_min, s_max].
struct AnnihilationReport {
    double max_ut_qhat = 0.0;        // UT_{k-1}(Delta_k gamma) qhat_{k-1}
    double max_perfect_dyadic = 0.0; // T_c(gamma^c) qhat
    double max_shift_c = 0.0;        // C_gamma
    double max_shift_a = 0.0;        // A_gamma qhat
    double max_shift_b = 0.0;        // B_gamma zeta
    double max_transform = 0.0;      // M_xi^c(gamma^c) qhat
    double max_paraproduct = 0.0;    // Pi_rho^c(gamma^c) qhat
    DeltaFormulasReport deltas;
    KeyIdentityReport keys;
    double cz_sum_defect = 0.0;      // f - (g_d + g_off + b_d + b_off)
    double series_defect = 0.0;      // g_off vs its series form
};

// Shared inputs for annihilation checks against several operators: the
// lacunary family, the CZ decomposition at lambda = 2^ell, and the q-hat
// family.
struct AnnihilationContext {
    int ell = 0;
    LacunaryFamily fam;
    CZParts parts;
    QhatFamily qhat;
};

AnnihilationContext make_annihilation_context(const MatFn& f, int ell, int s_min, int s_max);
AnnihilationReport annihilation_check(const OperatorSpec& op, const MatFn& f,
                                      const AnnihilationContext& ctx);
AnnihilationReport annihilation_check(const OperatorSpec& op, const MatFn& f, int ell,
                                      int s_min, int s_max);

// Weak-type scan over a randomized positive ensemble: split each sample,
// apply the row operator to f_r and the column operator to f_c, and take
// the worst ratio of lambda phi{|T f| > lambda} sums to ||f||_1 over a
// dyadic lambda grid.
struct WeakTypeSample {
    double sup_ratio = 0.0;
    int argmax_ell = 0;
    double psi_l1 = 0.0;          // L1 mass of the split residual
    double psi_tail_ratio = 0.0;  // worst lambda phi{|T_c residual| > lambda} / ||f||_1
};

struct WeakTypeScanReport {
    std::vector<WeakTypeSample> samples;
    double max_ratio = 0.0;
    int skipped = 0;  // samples with ||f||_1 = 0
};

struct WeakTypeParams {
    int s_min = -6;
    int ell_min = -2;
    int ell_max = 4;
    int jobs = 1;
};

WeakTypeScanReport weak_type_scan(const OperatorSpec& op, const EnsembleSpec& ens,
                                  const WeakTypeParams& params);

}  // namespace ncz
