#include "ncz/cuculescu.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ncz {

namespace {

void require_positive(const MatFn& f, const char* who) {
    const double scale = std::max(1.0, f.max_abs());
    for (int leaf = 0; leaf < f.leaves(); ++leaf) {
        if (f.value(leaf).herm_defect() > tol::herm * scale ||
            min_eig_herm(f.value(leaf)) < -tol::proj * scale) {
            std::ostringstream os;
            os << who << ": input is not a positive function (leaf " << leaf << ")";
            throw std::invalid_argument(os.str());
        }
    }
}

// Snap a nearly-idempotent Hermitian matrix to an exact projection.
Matrix snap_projection(Matrix p) {
    p.hermitize();
    return spectral_proj(p, Interval{0.5, 2.0, false, false}, 0.0);
}

}  // namespace

CuculescuSeq cuculescu_run(const MatFn& f, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("cuculescu_run: lambda must be positive");
    require_positive(f, "cuculescu_run");

    const Grid& g = f.grid();
    const int d = f.dim();
    const int K = g.depth;
    CuculescuSeq seq;
    seq.lambda = lambda;
    seq.q.reserve(K + 1);
    seq.p.reserve(K + 1);

    MatFn qprev = identity_fn(g, d);
    for (int k = 0; k <= K; ++k) {
        const MatFn fk = expect(f, k);
        MatFn qk(g, d);
        // One spectral cut per generation-k cube; refine to leaves.
        for (int c = 0; c < g.cubes_at(k); ++c) {
            const CubeIndex cube = cube_from_linear(g, k, c);
            int leaf0 = -1;
            for_each_leaf(g, cube, [&](int leaf) { if (leaf0 < 0) leaf0 = leaf; });
            const Matrix& qp = qprev.value(leaf0);
            Matrix m = qp * fk.value(leaf0) * qp;
            m.hermitize();
            const double band = tol::band_rel * std::max(1.0, m.max_abs());
            const Matrix cut = spectral_proj(m, Interval::closed(0.0, lambda), band);
            const Matrix qval = snap_projection(qp * cut);
            for_each_leaf(g, cube, [&](int leaf) { qk.value(leaf) = qval; });
        }
        seq.p.push_back(qprev - qk);
        seq.q.push_back(qk);
        qprev = seq.q.back();
    }
    return seq;
}

CZParts cz_decompose(const MatFn& f, const CuculescuSeq& seq) {
    const Grid& g = f.grid();
    const int d = f.dim();
    const int K = g.depth;

    std::vector<MatFn> fk;
    fk.reserve(K + 1);
    for (int k = 0; k <= K; ++k) fk.push_back(expect(f, k));

    const MatFn& q = seq.terminal();
    CZParts parts{zero_fn(g, d), zero_fn(g, d), zero_fn(g, d), zero_fn(g, d)};

    for (int leaf = 0; leaf < f.leaves(); ++leaf) {
        const Matrix& fv = f.value(leaf);
        const Matrix& qv = q.value(leaf);
        const Matrix one = Matrix::identity(d);

        Matrix gd = qv * fv * qv;
        Matrix bd(d);
        for (int k = 0; k <= K; ++k) {
            const Matrix& pk = seq.p[k].value(leaf);
            if (pk.max_abs() == 0.0) continue;
            gd += pk * fk[k].value(leaf) * pk;
            bd += pk * (fv - fk[k].value(leaf)) * pk;
        }

        Matrix boff(d), goff(d);
        for (int i = 0; i <= K; ++i) {
            const Matrix& pi = seq.p[i].value(leaf);
            if (pi.max_abs() == 0.0) continue;
            for (int j = 0; j <= K; ++j) {
                if (i == j) continue;
                const Matrix& pj = seq.p[j].value(leaf);
                if (pj.max_abs() == 0.0) continue;
                const Matrix& fij = fk[std::max(i, j)].value(leaf);
                boff += pi * (fv - fij) * pj;
                goff += pi * fij * pj;
            }
        }
        const Matrix qc = one - qv;
        goff += qv * fv * qc + qc * fv * qv;

        parts.g_d.value(leaf) = gd;
        parts.b_d.value(leaf) = bd;
        parts.b_off.value(leaf) = boff;
        parts.g_off.value(leaf) = goff;
    }
    parts.g_d.set_hermitian_flag(f.hermitian_flag());
    parts.b_d.set_hermitian_flag(f.hermitian_flag());
    parts.b_off.set_hermitian_flag(f.hermitian_flag());
    parts.g_off.set_hermitian_flag(f.hermitian_flag());
    return parts;
}

CZParts cz_decompose(const MatFn& f, double lambda) {
    return cz_decompose(f, cuculescu_run(f, lambda));
}

MatFn cz_series_term(const MatFn& f, const CuculescuSeq& seq, int k, int s) {
    const int K = f.grid().depth;
    if (s < 1 || k < 0 || k + s > K) throw std::invalid_argument("cz_series_term: bad indices");
    const MatFn df = mart_diff(f, k + s);
    const MatFn& pk = seq.p[k];
    const MatFn& qk = seq.q[k + s - 1];
    return pk * df * qk + qk * df * pk;
}

MatFn cz_series_sum(const MatFn& f, const CuculescuSeq& seq) {
    const int K = f.grid().depth;
    MatFn sum = zero_fn(f.grid(), f.dim());
    for (int s = 1; s <= K; ++s)
        for (int k = 0; k + s <= K; ++k) sum += cz_series_term(f, seq, k, s);
    return sum;
}

DeltaFormulasReport delta_formulas_check(const MatFn& f, const CuculescuSeq& seq,
                                         const CZParts& parts) {
    const Grid& g = f.grid();
    const int d = f.dim();
    const int K = g.depth;
    DeltaFormulasReport rep;

    const MatFn one = identity_fn(g, d);
    for (int k = 1; k <= K; ++k) {
        const MatFn df = mart_diff(f, k);
        const MatFn& qk1 = seq.q[k - 1];
        const MatFn qc = one - qk1;

        MatFn bd_expected = zero_fn(g, d);
        for (int j = 0; j <= k - 1; ++j) bd_expected += seq.p[j] * df * seq.p[j];
        rep.max_bd = std::max(rep.max_bd, max_abs_diff(mart_diff(parts.b_d, k), bd_expected));

        const MatFn goff_expected = qc * df * qk1 + qk1 * df * qc;
        rep.max_goff = std::max(rep.max_goff, max_abs_diff(mart_diff(parts.g_off, k), goff_expected));

        for (const MatFn* gamma : {&parts.b_d, &parts.g_off, &parts.b_off}) {
            const MatFn s = qk1 * mart_diff(*gamma, k) * qk1;
            rep.max_qsandwich = std::max(rep.max_qsandwich, s.max_abs());
        }
    }
    return rep;
}

int lacunary_top_exponent(const MatFn& f) {
    const double norm = lp_norm(f, kInfNorm);
    int s = 0;
    while (std::ldexp(1.0, s) < norm) ++s;
    return s;
}

LacunaryFamily lacunary_build(const MatFn& f, int s_min, int s_max) {
    if (s_min >= s_max) throw std::invalid_argument("lacunary_build: need s_min < s_max");
    const double top = std::ldexp(1.0, s_max);
    const double norm = lp_norm(f, kInfNorm);
    if (top < norm) {
        std::ostringstream os;
        os << "lacunary_build: 2^s_max = " << top << " below ||f||_inf = " << norm
           << "; need s_max >= " << lacunary_top_exponent(f);
        throw std::invalid_argument(os.str());
    }

    LacunaryFamily fam;
    fam.grid_ = f.grid();
    fam.d_ = f.dim();
    fam.s_min_ = s_min;
    fam.s_max_ = s_max;

    const int K = f.grid().depth;
    for (int s = s_min; s <= s_max; ++s) fam.runs_.push_back(cuculescu_run(f, std::ldexp(1.0, s)));

    // meets_[j - s_min][k], built downward so nesting is by construction.
    const int range = s_max - s_min + 1;
    fam.meets_.assign(range + 1, {});
    fam.meets_[range].assign(K + 1, identity_fn(f.grid(), f.dim()));
    for (int j = s_max; j >= s_min; --j) {
        auto& level = fam.meets_[j - s_min];
        level.reserve(K + 1);
        const auto& above = fam.meets_[j - s_min + 1];
        const CuculescuSeq& run = fam.runs_[j - s_min];
        for (int k = 0; k <= K; ++k) {
            MatFn m(f.grid(), f.dim());
            for (int leaf = 0; leaf < m.leaves(); ++leaf)
                m.value(leaf) = proj_meet(above[k].value(leaf), run.q[k].value(leaf));
            level.push_back(std::move(m));
        }
    }

    fam.pis_.assign(range - 1, {});
    for (int j = s_min + 1; j <= s_max; ++j) {
        auto& level = fam.pis_[j - s_min - 1];
        level.reserve(K + 1);
        for (int k = 0; k <= K; ++k)
            level.push_back(fam.meets_[j - s_min][k] - fam.meets_[j - s_min - 1][k]);
    }
    return fam;
}

const CuculescuSeq& LacunaryFamily::run_at(int s) const {
    if (s < s_min_ || s > s_max_) throw std::invalid_argument("LacunaryFamily: s out of range");
    return runs_[s - s_min_];
}

const MatFn& LacunaryFamily::meet_from(int j, int k) const {
    if (j < s_min_ || j > s_max_ + 1) throw std::invalid_argument("LacunaryFamily: j out of range");
    return meets_[j - s_min_][k];
}

const MatFn& LacunaryFamily::pi(int j, int k) const {
    if (j <= s_min_ || j > s_max_) throw std::invalid_argument("LacunaryFamily: pi index out of range");
    return pis_[j - s_min_ - 1][k];
}

const MatFn& LacunaryFamily::psi(int k) const { return meets_[0][k]; }

MatFn triangular_truncate(const MatFn& x, const LacunaryFamily& fam, int k, TrianglePart part) {
    if (!same_mesh(x.grid(), fam.grid()) || x.dim() != fam.dim())
        throw std::invalid_argument("triangular_truncate: grid mismatch");
    const int lo = fam.s_min() + 1, hi = fam.s_max();

    // Suffix sums S_i = sum_{j >= i} pi_j turn the double sum into
    // UT(x) = sum_i pi_i x S_i, LT(x) = sum_i pi_i x (P_i - pi_i) with
    // prefix P_i = sum_{j <= i} pi_j.
    MatFn out(x.grid(), x.dim());
    for (int leaf = 0; leaf < x.leaves(); ++leaf) {
        const Matrix& xv = x.value(leaf);
        Matrix acc(x.dim());
        if (part == TrianglePart::upper) {
            // Iterate i downward keeping suf = sum_{j >= i} pi_j.
            Matrix suf(x.dim());
            for (int i = hi; i >= lo; --i) {
                const Matrix& pi_i = fam.pi(i, k).value(leaf);
                suf += pi_i;
                if (pi_i.max_abs() == 0.0) continue;
                acc += pi_i * xv * suf;
            }
        } else {
            Matrix pre(x.dim());
            for (int i = lo; i <= hi; ++i) {
                const Matrix& pi_i = fam.pi(i, k).value(leaf);
                if (pi_i.max_abs() != 0.0 && pre.max_abs() != 0.0) acc += pi_i * xv * pre;
                pre += pi_i;
            }
        }
        out.value(leaf) = acc;
    }
    return out;
}

RowColSplit row_col_split(const MatFn& f, const LacunaryFamily& fam) {
    const int K = f.grid().depth;
    RowColSplit out{zero_fn(f.grid(), f.dim()), zero_fn(f.grid(), f.dim()),
                    zero_fn(f.grid(), f.dim())};
    for (int k = 1; k <= K; ++k) {
        const MatFn df = mart_diff(f, k);
        out.f_r += triangular_truncate(df, fam, k - 1, TrianglePart::lower);
        out.f_c += triangular_truncate(df, fam, k - 1, TrianglePart::upper);
    }
    out.residual = f - out.f_r - out.f_c;
    return out;
}

QhatFamily qhat_build(const LacunaryFamily& fam, int ell) {
    if (ell <= fam.s_min() || ell > fam.s_max())
        throw std::invalid_argument("qhat_build: need s_min < ell <= s_max");
    QhatFamily qf;
    qf.ell = ell;
    const int K = fam.grid().depth;
    for (int k = 0; k <= K; ++k) qf.qhat_k.push_back(fam.meet_from(ell, k));
    qf.qhat = qf.qhat_k.back();
    return qf;
}

ZetaFamily zeta_build(const QhatFamily& qf, const Grid& grid, int shift_s) {
    if (shift_s < 0) throw std::invalid_argument("zeta_build: shift complexity must be >= 0");
    const int K = grid.depth;
    const int d = qf.qhat.dim();
    ZetaFamily zf;
    zf.shift_s = shift_s;

    // rho_Q per generation-j cube from qhat_{j-1} - qhat_j (qhat_{-1} = 1).
    std::vector<std::vector<Matrix>> rho_at(K + 1);
    for (int j = 0; j <= K; ++j) {
        rho_at[j].resize(grid.cubes_at(j));
        for (int c = 0; c < grid.cubes_at(j); ++c) {
            const CubeIndex cube = cube_from_linear(grid, j, c);
            int leaf0 = -1;
            for_each_leaf(grid, cube, [&](int leaf) { if (leaf0 < 0) leaf0 = leaf; });
            const Matrix prev = j == 0 ? Matrix::identity(d) : qf.qhat_k[j - 1].value(leaf0);
            Matrix r = prev - qf.qhat_k[j].value(leaf0);
            if (r.max_abs() > tol::identity_tight) {
                r = spectral_proj(r, Interval{0.5, 2.0, false, false}, 0.0);
                zf.rho.emplace_back(cube, r);
            } else {
                r = Matrix(d);
            }
            rho_at[j][c] = std::move(r);
        }
    }

    // Per-leaf lists of rho's whose dilated cube covers the leaf, grown
    // generation by generation.
    std::vector<std::vector<Matrix>> lists(grid.leaf_count());
    const MatFn one = identity_fn(grid, d);
    for (int k = 0; k <= K; ++k) {
        for (int c = 0; c < grid.cubes_at(k); ++c) {
            const Matrix& r = rho_at[k][c];
            if (r.max_abs() == 0.0) continue;
            const CubeIndex dilated = ancestor(cube_from_linear(grid, k, c), shift_s);
            for_each_leaf(grid, dilated, [&](int leaf) { lists[leaf].push_back(r); });
        }
        MatFn zk(grid, d);
        for (int leaf = 0; leaf < grid.leaf_count(); ++leaf) {
            if (lists[leaf].empty())
                zk.value(leaf) = Matrix::identity(d);
            else
                zk.value(leaf) = Matrix::identity(d) -
                                 proj_join(std::span<const Matrix>(lists[leaf]));
        }
        zf.zeta_k.push_back(std::move(zk));
    }
    zf.zeta = zf.zeta_k.back();
    return zf;
}

KeyIdentityReport key_identity_check(const LacunaryFamily& fam, const QhatFamily& qf) {
    KeyIdentityReport rep;
    const int K = fam.grid().depth;
    const int ell = qf.ell;
    const CuculescuSeq& run = fam.run_at(ell);

    for (int k = 1; k <= K; ++k) {
        const MatFn& qhat = qf.qhat_k[k - 1];
        for (int i = fam.s_min() + 1; i <= fam.s_max(); ++i) {
            const MatFn& pi = fam.pi(i, k - 1);
            if (i > ell) {
                rep.max_qhat_pi = std::max(rep.max_qhat_pi, (qhat * pi).max_abs());
                rep.max_qhat_pi = std::max(rep.max_qhat_pi, (pi * qhat).max_abs());
            } else {
                for (int s = 1; s <= k; ++s) {
                    const MatFn& p = run.p[k - s];
                    rep.max_pi_p = std::max(rep.max_pi_p, (pi * p).max_abs());
                    rep.max_pi_p = std::max(rep.max_pi_p, (p * pi).max_abs());
                }
            }
        }
    }
    return rep;
}

}  // namespace ncz
