#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ncz/cuculescu.hpp"
#include "ncz/ensemble.hpp"
#include "oracle_scalar.hpp"

using namespace ncz;

namespace {

MatFn scalar_indicator(const Grid& g, int first_leaf, int last_leaf, double value) {
    MatFn f(g, 1);
    for (int leaf = first_leaf; leaf <= last_leaf; ++leaf) f.value(leaf).at(0, 0) = value;
    f.set_hermitian_flag(true);
    return f;
}

MatFn random_positive(const Grid& g, int d, Rng& rng, int spikes = 0) {
    EnsembleSpec ens;
    ens.d = d;
    ens.n = g.n;
    ens.depth = g.depth;
    ens.pad = g.pad;
    ens.spikes = spikes;
    return random_positive_fn(ens, rng);
}

}  // namespace

TEST_CASE("cuculescu keeps the identity below the threshold") {
    const Grid g(1, 3, 0);
    const MatFn f = constant_fn(g, Matrix::identity(2) * 0.5);
    const CuculescuSeq seq = cuculescu_run(f, 1.0);
    for (int k = 0; k <= g.depth; ++k) {
        CHECK(max_abs_diff(seq.q[k], identity_fn(g, 2)) < 1e-12);
        CHECK(seq.p[k].max_abs() < 1e-12);
    }
}

TEST_CASE("cuculescu matches the classical stopping time on a hand example") {
    // K = 2, f = 4 on [0, 1/4), lambda = 1
    const Grid g(1, 2, 0);
    const MatFn f = scalar_indicator(g, 0, 0, 4.0);
    const CuculescuSeq seq = cuculescu_run(f, 1.0);

    // q_0 = 1 (f_0 = 1 <= 1 inclusively), q_1 kills [0, 1/2), q_2 keeps [1/2, 1)
    for (int leaf = 0; leaf < 4; ++leaf) {
        CHECK(seq.q[0].value(leaf).at(0, 0).real() == doctest::Approx(1.0));
        const double expected1 = leaf < 2 ? 0.0 : 1.0;
        CHECK(seq.q[1].value(leaf).at(0, 0).real() == doctest::Approx(expected1));
        CHECK(seq.q[2].value(leaf).at(0, 0).real() == doctest::Approx(expected1));
    }
    const double weak = phi_trace(identity_fn(g, 1) - seq.terminal()).real();
    CHECK(weak == doctest::Approx(0.5));
    CHECK(weak <= lp_norm(f, 1.0) / 1.0);
}

TEST_CASE("cuculescu rejects non-positive input") {
    const Grid g(1, 2, 0);
    MatFn f(g, 2);
    f.value(0).at(0, 0) = -1.0;
    f.set_hermitian_flag(true);
    CHECK_THROWS_AS(cuculescu_run(f, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(cuculescu_run(identity_fn(g, 2), 0.0), std::invalid_argument);
}

TEST_CASE("cuculescu agrees with the scalar oracle at d = 1") {
    const Grid g(1, 4, 0);
    Rng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        const MatFn f = random_positive(g, 1, rng, trial % 3);
        const oracle::ScalarFn sf = oracle::from_matfn(f);
        for (int ell = -1; ell <= 2; ++ell) {
            const double lambda = std::ldexp(1.0, ell);
            const CuculescuSeq seq = cuculescu_run(f, lambda);
            const auto q = oracle::cuculescu(sf, lambda);
            for (int k = 0; k <= g.depth; ++k)
                for (int leaf = 0; leaf < f.leaves(); ++leaf)
                    CHECK(std::abs(seq.q[k].value(leaf).at(0, 0).real() - q[k].v[leaf]) < 1e-10);
        }
    }
}

TEST_CASE("cz parts collapse when the threshold dominates") {
    const Grid g(1, 3, 0);
    const MatFn f = constant_fn(g, Matrix::identity(2) * 0.5);
    const CZParts parts = cz_decompose(f, 1.0);
    CHECK(max_abs_diff(parts.g_d, f) < 1e-12);
    CHECK(parts.b_d.max_abs() < 1e-12);
    CHECK(parts.b_off.max_abs() < 1e-12);
    CHECK(parts.g_off.max_abs() < 1e-12);
}

TEST_CASE("cz parts sum to f and satisfy the closed forms") {
    const Grid g(1, 4, 0);
    Rng rng(103);
    for (int trial = 0; trial < 20; ++trial) {
        const MatFn f = random_positive(g, 3, rng, 1);
        const CuculescuSeq seq = cuculescu_run(f, 1.0);
        const CZParts parts = cz_decompose(f, seq);
        CHECK(max_abs_diff(f, parts.g_d + parts.b_d + parts.b_off + parts.g_off) < 1e-10);
        CHECK(max_abs_diff(parts.g_off, cz_series_sum(f, seq)) < 1e-9);
        const DeltaFormulasReport rep = delta_formulas_check(f, seq, parts);
        CHECK(rep.max_bd < 1e-9);
        CHECK(rep.max_goff < 1e-9);
        CHECK(rep.max_qsandwich < 1e-9);
    }
}

TEST_CASE("cz parts match the classical split at d = 1") {
    const Grid g(1, 4, 0);
    Rng rng(107);
    for (int trial = 0; trial < 50; ++trial) {
        const MatFn f = random_positive(g, 1, rng, trial % 2);
        const double lambda = std::ldexp(1.0, trial % 3);
        const CZParts parts = cz_decompose(f, lambda);
        const oracle::ScalarCZ cls = oracle::classical_cz(oracle::from_matfn(f), lambda);
        for (int leaf = 0; leaf < f.leaves(); ++leaf) {
            CHECK(std::abs(parts.g_d.value(leaf).at(0, 0).real() - cls.good.v[leaf]) < 1e-10);
            CHECK(std::abs(parts.b_d.value(leaf).at(0, 0).real() - cls.bad.v[leaf]) < 1e-10);
        }
        CHECK(parts.g_off.max_abs() < 1e-10);
        CHECK(parts.b_off.max_abs() < 1e-10);
    }
}

TEST_CASE("lacunary family on a constant function") {
    const Grid g(1, 3, 0);
    const MatFn f = constant_fn(g, Matrix::identity(2) * 3.0);
    // 2^{s_min} = 4 > 3 makes every run trivial
    const LacunaryFamily fam = lacunary_build(f, 2, 4);
    for (int k = 0; k <= g.depth; ++k) {
        CHECK(max_abs_diff(fam.psi(k), identity_fn(g, 2)) < 1e-12);
        for (int j = 3; j <= 4; ++j) CHECK(fam.pi(j, k).max_abs() < 1e-12);
    }
}

TEST_CASE("lacunary_build validates the top exponent") {
    const Grid g(1, 3, 0);
    const MatFn f = constant_fn(g, Matrix::identity(2) * 9.0);
    CHECK_THROWS_AS(lacunary_build(f, -2, 3), std::invalid_argument);  // 8 < 9
    CHECK_NOTHROW(lacunary_build(f, -2, lacunary_top_exponent(f)));
    CHECK_THROWS_AS(lacunary_build(f, 4, 4), std::invalid_argument);
}

TEST_CASE("scalar lacunary projections are maximal-function level sets") {
    const Grid g(1, 4, 0);
    Rng rng(109);
    const MatFn f = random_positive(g, 1, rng, 1);
    const int s_min = -5, s_max = lacunary_top_exponent(f);
    const LacunaryFamily fam = lacunary_build(f, s_min, s_max);
    const auto psi = oracle::lacunary_psi(oracle::from_matfn(f), s_min, s_max);
    for (int k = 0; k <= g.depth; ++k) {
        // partition and agreement with the oracle psi
        MatFn sum = fam.psi(k);
        for (int j = s_min + 1; j <= s_max; ++j) sum += fam.pi(j, k);
        CHECK(max_abs_diff(sum, identity_fn(g, 1)) < 1e-10);
        for (int leaf = 0; leaf < f.leaves(); ++leaf)
            CHECK(std::abs(fam.psi(k).value(leaf).at(0, 0).real() - psi[k].v[leaf]) < 1e-10);
    }
}

TEST_CASE("triangular truncations split the compression") {
    const Grid g(1, 4, 0);
    Rng rng(113);
    const MatFn f = random_positive(g, 3, rng);
    const LacunaryFamily fam = lacunary_build(f, -4, lacunary_top_exponent(f));
    const MatFn one = identity_fn(g, 3);
    for (int k = 1; k <= g.depth; ++k) {
        const MatFn df = mart_diff(f, k);
        const MatFn ut = triangular_truncate(df, fam, k - 1, TrianglePart::upper);
        const MatFn lt = triangular_truncate(df, fam, k - 1, TrianglePart::lower);
        const MatFn proj = (one - fam.psi(k - 1)) * df * (one - fam.psi(k - 1));
        CHECK(max_abs_diff(ut + lt, proj) < 1e-10);
        CHECK(lp_norm(ut, 2.0) <= lp_norm(df, 2.0) * (1 + 1e-9));
        CHECK(lp_norm(lt, 2.0) <= lp_norm(df, 2.0) * (1 + 1e-9));
    }
}

TEST_CASE("row/column split: exactness and the scalar collapse") {
    const Grid g(1, 4, 1);
    Rng rng(127);
    const MatFn f1 = random_positive(g, 1, rng);
    const LacunaryFamily fam1 = lacunary_build(f1, -5, lacunary_top_exponent(f1));
    const RowColSplit split1 = row_col_split(f1, fam1);
    CHECK(split1.f_r.max_abs() < 1e-12);
    CHECK(max_abs_diff(f1, split1.f_r + split1.f_c + split1.residual) < 1e-12);

    const MatFn f = random_positive(g, 3, rng);
    const int s_min = -6;
    const LacunaryFamily fam = lacunary_build(f, s_min, lacunary_top_exponent(f));
    const RowColSplit split = row_col_split(f, fam);
    CHECK(max_abs_diff(f, split.f_r + split.f_c + split.residual) < 1e-12);
    const double budget = (g.depth + 1) * std::ldexp(1.0, 1) * std::pow(2.0, 0.5 * s_min) *
                              std::sqrt(lp_norm(f, kInfNorm)) +
                          op_norm(expect(f, 0).value(0));
    CHECK(lp_norm(split.residual, kInfNorm) <= budget * (1 + 1e-9));
}

TEST_CASE("qhat family bounds and the trivial case") {
    const Grid g(1, 3, 0);
    const MatFn small = constant_fn(g, Matrix::identity(2) * 0.9);
    const LacunaryFamily triv = lacunary_build(small, -3, 2);
    const QhatFamily qtriv = qhat_build(triv, 0);  // f <= 1 = 2^0 everywhere
    CHECK(max_abs_diff(qtriv.qhat, identity_fn(g, 2)) < 1e-10);
    CHECK_THROWS_AS(qhat_build(triv, -3), std::invalid_argument);

    Rng rng(131);
    for (int trial = 0; trial < 20; ++trial) {
        const MatFn f = random_positive(g, 2, rng, 1);
        const LacunaryFamily fam = lacunary_build(f, -4, lacunary_top_exponent(f));
        for (int ell = -3; ell <= lacunary_top_exponent(f); ++ell) {
            const QhatFamily qf = qhat_build(fam, ell);
            const double lambda = std::ldexp(1.0, ell);
            const double mass = phi_trace(identity_fn(g, 2) - qf.qhat).real();
            CHECK(lambda * mass <= 2.0 * lp_norm(f, 1.0) * (1 + 1e-9));
        }
    }
}

TEST_CASE("zeta at shift complexity zero reproduces qhat") {
    const Grid g(1, 4, 0);
    Rng rng(137);
    const MatFn f = random_positive(g, 2, rng, 2);
    const LacunaryFamily fam = lacunary_build(f, -4, lacunary_top_exponent(f));
    const QhatFamily qf = qhat_build(fam, 0);
    const ZetaFamily zf = zeta_build(qf, g, 0);
    CHECK(max_abs_diff(zf.zeta, qf.qhat) < 1e-8);

    // trivial case: no rho's at all
    const MatFn small = constant_fn(g, Matrix::identity(2) * 0.5);
    const LacunaryFamily ts = lacunary_build(small, -3, 1);
    const ZetaFamily zt = zeta_build(qhat_build(ts, 0), g, 2);
    CHECK(zt.rho.empty());
    CHECK(max_abs_diff(zt.zeta, identity_fn(g, 2)) < 1e-12);
}
