#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "ncz/probes.hpp"
#include "oracle_scalar.hpp"

using namespace ncz;

namespace {

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

TEST_CASE("gundy parts collapse when the threshold dominates") {
    const Grid g(1, 3, 0);
    const MatFn f = constant_fn(g, Matrix::identity(2) * 0.5) ;
    const GundyParts parts = gundy_decompose(f, 2.0);
    CHECK(parts.beta.max_abs() < 1e-12);
    CHECK(parts.gamma.max_abs() < 1e-12);
    CHECK(max_abs_diff(parts.alpha, f - expect(f, 0)) < 1e-12);
}

TEST_CASE("gundy differences sum to the martingale differences") {
    const Grid g(1, 4, 0);
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const MatFn f = random_positive(g, 3, rng, trial % 3);
        const double lambda = std::ldexp(1.0, trial % 3);
        const GundyParts parts = gundy_decompose(f, lambda);
        const GundyEstimates est = gundy_estimates(f, lambda, parts);
        CHECK(est.sum_defect < 1e-10);
        CHECK(std::isfinite(est.alpha_ratio));
        CHECK(std::isfinite(est.beta_ratio));
        CHECK(std::isfinite(est.gamma_ratio));
    }
}

TEST_CASE("gundy matches the scalar decomposition at d = 1") {
    const Grid g(1, 4, 0);
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const MatFn f = random_positive(g, 1, rng, trial % 2);
        const double lambda = std::ldexp(1.0, trial % 3 - 1);
        const GundyParts parts = gundy_decompose(f, lambda);
        const oracle::ScalarGundy cls = oracle::classical_gundy(oracle::from_matfn(f), lambda);
        for (int k = 1; k <= g.depth; ++k)
            for (int leaf = 0; leaf < f.leaves(); ++leaf) {
                CHECK(std::abs(parts.d_alpha[k - 1].value(leaf).at(0, 0).real() -
                               cls.d_alpha[k - 1].v[leaf]) < 1e-10);
                CHECK(std::abs(parts.d_beta[k - 1].value(leaf).at(0, 0).real() -
                               cls.d_beta[k - 1].v[leaf]) < 1e-10);
                CHECK(std::abs(parts.d_gamma[k - 1].value(leaf).at(0, 0).real() -
                               cls.d_gamma[k - 1].v[leaf]) < 1e-10);
            }
    }
}

TEST_CASE("star support annihilates from both sides") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix a = random_matrix(3, rng);
        const Matrix s = star_support(a);
        CHECK(projection_defect(s) < 1e-9);
        const Matrix q = Matrix::identity(3) - s;
        CHECK((q * a * q).max_abs() < 1e-9);
        // supp* dominates the left and right supports
        CHECK((a * q).max_abs() < 1e-9);
        CHECK((q * a).max_abs() < 1e-9);
    }
    CHECK(star_support(Matrix(2)).max_abs() == 0.0);
}

TEST_CASE("left/right CZ reassembles the split and is classical at d = 1") {
    const Grid g(1, 4, 0);
    Rng rng(11);
    const MatFn f = random_positive(g, 1, rng, 1);
    const LacunaryFamily fam = lacunary_build(f, -5, lacunary_top_exponent(f));
    const RowColSplit split = row_col_split(f, fam);
    const LeftRightCZ lr = leftright_cz(f, fam, 0);
    CHECK(max_abs_diff(lr.g_r + lr.b_r, split.f_r) < 1e-10);
    CHECK(max_abs_diff(lr.g_c + lr.b_c, split.f_c) < 1e-10);
    // f_r = 0 at d = 1, so the left pieces vanish
    CHECK(lr.g_r.max_abs() < 1e-12);
    CHECK(lr.b_r.max_abs() < 1e-12);

    // trivial qhat: everything lands in the good parts
    const Grid g2(1, 3, 0);
    const MatFn small = constant_fn(g2, Matrix::identity(2) * 0.4);
    const LacunaryFamily fam2 = lacunary_build(small, -3, 1);
    const RowColSplit split2 = row_col_split(small, fam2);
    const LeftRightCZ lr2 = leftright_cz(small, fam2, 0);
    CHECK(max_abs_diff(lr2.g_c, split2.f_c) < 1e-10);
    CHECK(lr2.b_c.max_abs() < 1e-10);
}

TEST_CASE("truncation probe ratios and ledger") {
    EnsembleSpec ens;
    ens.samples = 12;
    ens.seed = 31;
    ens.d = 3;
    ens.depth = 4;

    const std::string ledger = "truncation_ledger_test.jsonl";
    std::remove(ledger.c_str());
    TruncationProbeParams params;
    params.s_min = -4;
    params.ledger_path = ledger;

    const ProbeReport rep = truncation_probe(ens, params);
    CHECK(rep.aggregate_max("max_R1") > 0.0);
    CHECK(rep.aggregate_max("max_R2") > 0.0);

    // the ledger grows only on record-breaking samples and embeds full data
    std::ifstream is(ledger);
    REQUIRE(is.good());
    int lines = 0;
    std::string line;
    while (std::getline(is, line)) {
        ++lines;
        CHECK(line.find("\"driver\"") != std::string::npos);
        CHECK(line.find("\"alpha\"") != std::string::npos);
    }
    CHECK(lines >= 1);
    CHECK(lines <= ens.samples);

    // scalar collapse: R2 <= 1 by Hoelder when everything commutes
    EnsembleSpec scalar = ens;
    scalar.d = 1;
    TruncationProbeParams p2;
    p2.s_min = -4;
    const ProbeReport srep = truncation_probe(scalar, p2);
    CHECK(srep.aggregate_max("max_R2") <= 1.0 + 1e-9);
    std::remove(ledger.c_str());
}

TEST_CASE("probe reports are deterministic under a fixed seed") {
    EnsembleSpec ens;
    ens.samples = 8;
    ens.seed = 77;
    ens.d = 2;
    ens.depth = 4;
    TruncationProbeParams params;
    params.s_min = -3;
    const ProbeReport a = truncation_probe(ens, params);
    const ProbeReport b = truncation_probe(ens, params);
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].values == b.rows[i].values);
    CHECK(a.aggregates == b.aggregates);
}
