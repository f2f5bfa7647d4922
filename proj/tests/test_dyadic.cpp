#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ncz/dyadic.hpp"
#include "ncz/ensemble.hpp"

using namespace ncz;

TEST_CASE("cube navigation") {
    const Grid g(2, 3, 0);
    const CubeIndex q{2, {1, 3}};
    for (int which = 0; which < 4; ++which) CHECK(parent(child(g, q, which)) == q);
    CHECK(ancestor(q, 5).gen == 0);  // clamps at the root
    CHECK(ancestor(q, 1) == parent(q));
    CHECK(cube_contains(g, parent(q), q));
    CHECK(!cube_contains(g, q, parent(q)));

    for (int leaf = 0; leaf < g.leaf_count(); ++leaf) {
        const CubeIndex at = leaf_cube(g, leaf, g.depth);
        CHECK(leaf_linear(g, at) == leaf);
    }
}

TEST_CASE("phi_trace basics") {
    const Grid g(1, 4, 2);
    CHECK(phi_trace(identity_fn(g, 3)).real() == doctest::Approx(1.0));
    CHECK(phi_trace(zero_fn(g, 3)).real() == doctest::Approx(0.0));

    // c * indicator of the support subcube has trace c * 2^{-np}
    MatFn f = zero_fn(g, 2);
    for_each_leaf(g, support_cube(g), [&](int leaf) {
        f.value(leaf) = Matrix::identity(2) * 3.0;
    });
    CHECK(phi_trace(f).real() == doctest::Approx(3.0 * 0.25));
}

TEST_CASE("expect tower property and trace preservation") {
    const Grid g(1, 5, 0);
    Rng rng(3);
    const MatFn f = random_fn(g, 3, rng);

    CHECK(max_abs_diff(expect(f, g.depth), f) < 1e-14);
    for (int j = 0; j <= g.depth; ++j)
        for (int k = 0; k <= g.depth; ++k)
            CHECK(max_abs_diff(expect(expect(f, j), k), expect(f, std::min(j, k))) < 1e-13);
    for (int k = 0; k <= g.depth; ++k)
        CHECK(std::abs(phi_trace(expect(f, k)) - phi_trace(f)) < 1e-12);

    const MatFn c = constant_fn(g, Matrix::identity(3) * cplx(0.3, 0.0));
    for (int k = 0; k <= g.depth; ++k) CHECK(max_abs_diff(expect(c, k), c) < 1e-15);

    CHECK_THROWS_AS(expect(f, g.depth + 1), std::invalid_argument);
}

TEST_CASE("martingale differences telescope") {
    const Grid g(1, 5, 0);
    Rng rng(7);
    const MatFn f = random_fn(g, 2, rng);
    MatFn sum = expect(f, 0);
    for (int k = 1; k <= g.depth; ++k) {
        const MatFn df = mart_diff(f, k);
        CHECK(expect(df, k - 1).max_abs() < 1e-13);
        sum += df;
    }
    CHECK(max_abs_diff(sum, f) < 1e-12);
}

TEST_CASE("haar function shape and normalization") {
    const Grid g(1, 4, 0);
    const HaarIndex root{CubeIndex{0, {0, 0}}, 1};
    const MatFn h = haar_fn(g, root);
    for (int leaf = 0; leaf < g.leaf_count(); ++leaf)
        CHECK(h.value(leaf).at(0, 0).real() == (leaf < g.leaf_count() / 2 ? 1.0 : -1.0));

    CHECK(std::abs(l2_inner(h, h).real() - 1.0) < 1e-13);
    double mean = 0.0;
    for (int leaf = 0; leaf < g.leaf_count(); ++leaf) mean += h.value(leaf).at(0, 0).real();
    CHECK(std::abs(mean) < 1e-13);

    CHECK_THROWS_AS(haar_value(g, HaarIndex{root.cube, 0}, 0), std::invalid_argument);
}

TEST_CASE("haar system is orthonormal") {
    const Grid g(2, 2, 0);
    const auto indices = all_haar_indices(g);
    for (size_t i = 0; i < indices.size(); ++i)
        for (size_t j = 0; j < indices.size(); ++j) {
            const cplx ip = l2_inner(haar_fn(g, indices[i]), haar_fn(g, indices[j]));
            CHECK(std::abs(ip - (i == j ? 1.0 : 0.0)) < 1e-12);
        }
}

TEST_CASE("haar coefficients reconstruct the function") {
    for (int n : {1, 2}) {
        const Grid g(n, n == 1 ? 4 : 2, 0);
        Rng rng(13);
        const MatFn f = random_fn(g, 2, rng);
        MatFn rec = expect(f, 0);
        for (const auto& h : all_haar_indices(g)) {
            const Matrix coef = haar_coeff(f, h);
            for (int leaf = 0; leaf < g.leaf_count(); ++leaf)
                rec.value(leaf) += coef * haar_value(g, h, leaf);
        }
        CHECK(max_abs_diff(rec, f) < 1e-10);
    }
}

TEST_CASE("haar coefficient edge cases") {
    const Grid g(1, 3, 0);
    const MatFn c = constant_fn(g, Matrix::identity(2));
    for (const auto& h : all_haar_indices(g)) CHECK(haar_coeff(c, h).max_abs() < 1e-14);

    // an unresolved index is rejected
    CHECK_THROWS_AS(haar_coeff(c, HaarIndex{CubeIndex{3, {0, 0}}, 1}), std::invalid_argument);

    // f = h * A has exactly one nonzero coefficient
    const HaarIndex root{CubeIndex{0, {0, 0}}, 1};
    Rng rng(17);
    const Matrix a = random_matrix(2, rng);
    MatFn f(g, 2);
    for (int leaf = 0; leaf < g.leaf_count(); ++leaf)
        f.value(leaf) = a * haar_value(g, root, leaf);
    CHECK(max_abs_diff(haar_coeff(f, root), a) < 1e-13);
    for (const auto& h : all_haar_indices(g))
        if (!(h.cube == root.cube))
            CHECK(haar_coeff(f, h).max_abs() < 1e-13);
}

TEST_CASE("lp norms and the weak tail") {
    const Grid g(1, 2, 0);
    MatFn f(g, 1);
    f.value(0).at(0, 0) = 3.0;  // 3 * indicator of [0, 1/4)
    CHECK(weak_l1_tail(f, 2.0) == doctest::Approx(0.5));
    CHECK(weak_l1_tail(f, 4.0) == doctest::Approx(0.0));
    CHECK(lp_norm(f, kInfNorm) == doctest::Approx(3.0));
    CHECK_THROWS_AS(lp_norm(f, 0.5), std::invalid_argument);

    Rng rng(19);
    const Grid g2(1, 4, 0);
    const MatFn r = random_fn(g2, 3, rng);
    CHECK(lp_norm(r, 2.0) * lp_norm(r, 2.0) ==
          doctest::Approx(phi_trace(r.adjoint() * r).real()).epsilon(1e-10));
}

TEST_CASE("weak tails satisfy the quasi-triangle inequality") {
    const Grid g(1, 4, 0);
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const MatFn f1 = random_fn(g, 3, rng);
        const MatFn f2 = random_fn(g, 3, rng);
        const double lambda = std::ldexp(1.0, rng.uniform_int(-3, 3));
        const double lhs = weak_l1_tail(f1 + f2, lambda);
        const double rhs =
            2.0 * weak_l1_tail(f1, lambda / 2) + 2.0 * weak_l1_tail(f2, lambda / 2);
        CHECK(lhs <= rhs + 1e-12);
    }
}

TEST_CASE("expect is positive and contractive, and dyadically regular") {
    const Grid g(1, 4, 0);
    Rng rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        EnsembleSpec ens;
        ens.d = 3;
        ens.depth = g.depth;
        const MatFn f = random_positive_fn(ens, rng);
        for (int k = 0; k <= g.depth; ++k) {
            const MatFn ek = expect(f, k);
            for (int leaf = 0; leaf < f.leaves(); ++leaf)
                CHECK(min_eig_herm(ek.value(leaf)) > -1e-10);
            for (double p : {1.0, 2.0, kInfNorm})
                CHECK(lp_norm(ek, p) <= lp_norm(f, p) * (1 + 1e-9) + 1e-12);
            if (k >= 1) {
                const MatFn reg = expect(f, k - 1) * 2.0 - ek;
                for (int leaf = 0; leaf < f.leaves(); ++leaf) {
                    Matrix m = reg.value(leaf);
                    m.hermitize();
                    CHECK(min_eig_herm(m) > -1e-10);
                }
            }
        }
    }
}

TEST_CASE("column and row L_inf(L_2) norms") {
    const Grid g(1, 3, 0);
    CHECK(linf_l2c_norm(identity_fn(g, 3)) == doctest::Approx(1.0));

    Rng rng(31);
    const MatFn f = random_fn(g, 1, rng);
    CHECK(linf_l2c_norm(f) == doctest::Approx(lp_norm(f, 2.0)));

    // orthogonal ranges per leaf: the quadratic sum is diagonal and the norm
    // is the largest accumulated diagonal entry
    const Grid g1(1, 1, 0);
    MatFn h(g1, 2);
    h.value(0).at(0, 0) = 2.0;
    h.value(1).at(1, 1) = 1.0;
    CHECK(linf_l2c_norm(h) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("serialization round-trips bit-exactly") {
    const Grid g(2, 2, 1);
    Rng rng(37);
    MatFn f = random_fn(g, 3, rng);
    f.set_hermitian_flag(false);
    const std::string text = write_matfn(f);
    const MatFn back = read_matfn(text);
    CHECK(back.grid() == f.grid());
    CHECK(back.dim() == f.dim());
    CHECK(max_abs_diff(back, f) == 0.0);
    CHECK(write_matfn(back) == text);

    CHECK_THROWS_AS(read_matfn("1 2"), std::invalid_argument);
}
