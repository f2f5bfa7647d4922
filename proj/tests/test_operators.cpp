#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ncz/operators.hpp"

using namespace ncz;

namespace {

MatFn scalar_haar(const Grid& g, const HaarIndex& h, const Matrix& coef) {
    MatFn f(g, coef.dim());
    for (int leaf = 0; leaf < g.leaf_count(); ++leaf)
        f.value(leaf) = coef * haar_value(g, h, leaf);
    return f;
}

}  // namespace

TEST_CASE("identity shift at complexity (0,0) telescopes") {
    const Grid g(1, 4, 0);
    OperatorSpec spec;
    spec.kind = OpKind::haar_shift;
    spec.side = Side::column;
    spec.grid = g;
    spec.d = 2;
    for (int gen = 0; gen <= g.depth - 1; ++gen)
        for (int c = 0; c < g.cubes_at(gen); ++c) {
            const CubeIndex q = cube_from_linear(g, gen, c);
            spec.shift.push_back(ShiftCoef{q, q, q, 1, 1, Matrix::identity(2)});
        }
    validate_spec(spec);
    CHECK(shift_overshoot(spec) == doctest::Approx(1.0));

    Rng rng(7);
    const MatFn f = random_fn(g, 2, rng);
    const MatFn out = apply_haar_shift(spec, f);
    CHECK(max_abs_diff(out, f - expect(f, 0)) < 1e-12);
    CHECK(lp_norm(out, 2.0) <= lp_norm(f, 2.0) * (1 + 1e-12));
}

TEST_CASE("dyadic Hilbert transform maps child Haars to the parent Haar") {
    const Grid g(1, 4, 0);
    const OperatorSpec dht = dyadic_hilbert_spec(g, 1, Side::column);
    CHECK(dht.r == 0);
    CHECK(dht.s == 1);
    CHECK(shift_overshoot(dht) == doctest::Approx(std::sqrt(2.0)));

    const Matrix one = Matrix::identity(1);
    const HaarIndex parent_h{CubeIndex{0, {0, 0}}, 1};
    const HaarIndex left_h{CubeIndex{1, {0, 0}}, 1};
    const HaarIndex right_h{CubeIndex{1, {1, 0}}, 1};

    // h_{J-} -> h_J and h_{J+} -> -h_J
    CHECK(max_abs_diff(apply_haar_shift(dht, scalar_haar(g, left_h, one)),
                       scalar_haar(g, parent_h, one)) < 1e-12);
    CHECK(max_abs_diff(apply_haar_shift(dht, scalar_haar(g, right_h, one)),
                       scalar_haar(g, parent_h, one) * -1.0) < 1e-12);

    // the root Haar pairs with no input Haar of the table
    CHECK(apply_haar_shift(dht, scalar_haar(g, parent_h, one)).max_abs() < 1e-12);

    // the adjoint table (swap R and S, conjugate) maps h_J to h_{J-} - h_{J+}
    OperatorSpec adj = dht;
    for (auto& c : adj.shift) {
        std::swap(c.r_cube, c.s_cube);
        c.alpha = c.alpha.adjoint();
    }
    adj.r = 1;
    adj.s = 0;
    validate_spec(adj);
    const MatFn img = apply_haar_shift(adj, scalar_haar(g, parent_h, one));
    const MatFn expected =
        scalar_haar(g, left_h, one) - scalar_haar(g, right_h, one);
    CHECK(max_abs_diff(img, expected) < 1e-12);
}

TEST_CASE("haar shift validation rejects malformed tables") {
    const Grid g(1, 3, 0);
    OperatorSpec spec;
    spec.kind = OpKind::haar_shift;
    spec.grid = g;
    spec.d = 1;
    spec.r = 0;
    spec.s = 1;
    // S not a descendant of Q
    spec.shift.push_back(ShiftCoef{CubeIndex{1, {0, 0}}, CubeIndex{1, {0, 0}},
                                   CubeIndex{2, {3, 0}}, 1, 1, Matrix::identity(1)});
    CHECK_THROWS_AS(validate_spec(spec), std::invalid_argument);

    // unresolved cube: gen(Q) + max(r,s) > K-1
    spec.shift.clear();
    spec.shift.push_back(ShiftCoef{CubeIndex{2, {0, 0}}, CubeIndex{2, {0, 0}},
                                   CubeIndex{3, {0, 0}}, 1, 1, Matrix::identity(1)});
    CHECK_THROWS_AS(validate_spec(spec), std::invalid_argument);
}

TEST_CASE("haar multiplier with identity coefficients telescopes") {
    const Grid g(1, 4, 0);
    std::vector<MatFn> xi;
    for (int k = 0; k < g.depth; ++k) xi.push_back(identity_fn(g, 2));
    const OperatorSpec spec = make_haar_multiplier(g, xi, Side::column);

    Rng rng(11);
    const MatFn f = random_fn(g, 2, rng);
    CHECK(max_abs_diff(apply_perfect_dyadic(spec, f), f - expect(f, 0)) < 1e-12);
    CHECK(max_abs_diff(apply_perfect_dyadic_kernel(spec, f), f - expect(f, 0)) < 1e-11);
}

TEST_CASE("non-adapted coefficients are rejected") {
    const Grid g(1, 3, 0);
    Rng rng(13);
    std::vector<MatFn> xi;
    for (int k = 0; k < g.depth; ++k) xi.push_back(random_fn(g, 2, rng));  // leafwise, not adapted
    CHECK_THROWS_AS(make_haar_multiplier(g, xi, Side::column), std::invalid_argument);
}

TEST_CASE("paraproduct with a constant symbol vanishes") {
    const Grid g(1, 3, 0);
    const OperatorSpec spec = make_paraproduct(identity_fn(g, 2) * 3.0, Side::column);
    Rng rng(17);
    const MatFn f = random_fn(g, 2, rng);
    CHECK(mart_paraproduct(spec, f).max_abs() < 1e-13);
}

TEST_CASE("row and column actions differ for a noncommuting multiplier") {
    const Grid g(1, 3, 0);
    Matrix proj(2);
    proj.at(0, 0) = 1.0;  // fixed non-scalar projection
    std::vector<MatFn> xi;
    for (int k = 0; k < g.depth; ++k) xi.push_back(constant_fn(g, proj));
    const OperatorSpec col = make_haar_multiplier(g, xi, Side::column);
    const OperatorSpec row = col.with_side(Side::row);

    Rng rng(19);
    const MatFn f = random_fn(g, 2, rng);
    const double gap = max_abs_diff(apply_perfect_dyadic(col, f), apply_perfect_dyadic(row, f));
    CHECK(gap > 1e-3);
}

TEST_CASE("perfect dyadic kernels are constant on sibling products") {
    const Grid g(1, 4, 0);
    Rng rng(23);
    const OperatorSpec hx =
        make_haar_multiplier(g, random_adapted_sequence(g, 2, rng), Side::column);
    const OperatorSpec pr = make_paraproduct(random_hermitian_fn(g, 2, rng), Side::column);

    for (const OperatorSpec* spec : {&hx, &pr}) {
        for (int gen = 1; gen <= g.depth; ++gen) {
            for (int c = 0; c + 1 < g.cubes_at(gen); c += 2) {
                const CubeIndex q = cube_from_linear(g, gen, c);
                const CubeIndex r = cube_from_linear(g, gen, c + 1);  // the sibling
                double variation = 0.0;
                Matrix ref;
                bool first = true;
                for_each_leaf(g, q, [&](int x) {
                    for_each_leaf(g, r, [&](int y) {
                        const Matrix k = perfect_dyadic_kernel_value(*spec, x, y);
                        if (first) {
                            ref = k;
                            first = false;
                        } else {
                            variation = std::max(variation, max_abs_diff(k, ref));
                        }
                    });
                });
                CHECK(variation < 1e-12);
            }
        }
    }
}

TEST_CASE("operator serialization round-trips") {
    const Grid g(1, 3, 0);
    Rng rng(29);

    const OperatorSpec shift = random_normalized_shift(g, 2, 0, 1, Side::row, rng);
    const std::string text = write_opspec(shift);
    const OperatorSpec back = read_opspec(text);
    CHECK(write_opspec(back) == text);
    const MatFn f = random_fn(g, 2, rng);
    CHECK(max_abs_diff(apply_haar_shift(shift, f), apply_haar_shift(back, f)) == 0.0);

    const OperatorSpec hx =
        make_haar_multiplier(g, random_adapted_sequence(g, 2, rng), Side::column);
    CHECK(write_opspec(read_opspec(write_opspec(hx))) == write_opspec(hx));
    CHECK(max_abs_diff(apply_perfect_dyadic(hx, f),
                       apply_perfect_dyadic(read_opspec(write_opspec(hx)), f)) == 0.0);

    const OperatorSpec pr = make_paraproduct(random_hermitian_fn(g, 2, rng), Side::column, true);
    CHECK(write_opspec(read_opspec(write_opspec(pr))) == write_opspec(pr));

    CHECK_THROWS_AS(read_opspec("bogus"), std::invalid_argument);
}

TEST_CASE("smooth kernel operator matches dense assembly and is modular") {
    const Grid g(1, 4, 0);
    const SmoothKernelSpec sgn = make_smooth_kernel("sgn", 1, Side::column);
    Rng rng(31);
    const MatFn f = random_fn(g, 1, rng);

    // dense oracle: out(x) = sum_y w sgn(x-y) f(y), diagonal excluded
    MatFn expected(g, 1);
    const double w = g.leaf_measure();
    for (int x = 0; x < g.leaf_count(); ++x) {
        cplx acc = 0.0;
        for (int y = 0; y < g.leaf_count(); ++y) {
            if (x == y) continue;
            acc += (x > y ? 1.0 : -1.0) * f.value(y).at(0, 0);
        }
        expected.value(x).at(0, 0) = acc * w;
    }
    CHECK(max_abs_diff(apply_smooth_czo(sgn, f), expected) < 1e-13);

    // right modularity of the column operator
    const SmoothKernelSpec sgn2 = make_smooth_kernel("sgn", 2, Side::column);
    const MatFn f2 = random_fn(g, 2, rng);
    const Matrix u = random_matrix(2, rng);
    CHECK(max_abs_diff(apply_smooth_czo(sgn2, right_mul(f2, u)),
                       right_mul(apply_smooth_czo(sgn2, f2), u)) < 1e-12);

    // adjoint duality within quadrature tolerance (exact here: same grid sums)
    const SmoothKernelSpec adj = smooth_adjoint(sgn2);
    const MatFn h = random_fn(g, 2, rng);
    const cplx lhs = l2_inner(apply_smooth_czo(sgn2, f2), h);
    const cplx rhs = l2_inner(f2, apply_smooth_czo(adj, h));
    CHECK(std::abs(lhs - rhs) < 1e-12);

    CHECK(apply_smooth_czo(make_smooth_kernel("inv", 1, Side::column), zero_fn(g, 1)).max_abs() ==
          0.0);
    CHECK(hormander_functional(sgn, g) >= 0.0);
    CHECK_THROWS_AS(make_smooth_kernel("nope", 1, Side::column), std::invalid_argument);
}

TEST_CASE("annihilation requires the column side") {
    const Grid g(1, 3, 0);
    Rng rng(37);
    EnsembleSpec ens;
    ens.d = 2;
    ens.depth = g.depth;
    const MatFn f = random_positive_fn(ens, rng);
    const OperatorSpec row_op =
        make_haar_multiplier(g, random_adapted_sequence(g, 2, rng), Side::row);
    CHECK_THROWS_AS(annihilation_check(row_op, f, 0, -3, lacunary_top_exponent(f)),
                    std::invalid_argument);
}

TEST_CASE("weak-type scan is deterministic and finite") {
    const Grid g(1, 4, 0);
    Rng rng(41);
    const OperatorSpec op =
        make_haar_multiplier(g, random_adapted_sequence(g, 2, rng), Side::column);
    EnsembleSpec ens;
    ens.samples = 8;
    ens.seed = 4242;
    ens.d = 2;
    ens.depth = g.depth;
    WeakTypeParams params;
    params.s_min = -5;
    const WeakTypeScanReport a = weak_type_scan(op, ens, params);
    params.jobs = 4;
    const WeakTypeScanReport b = weak_type_scan(op, ens, params);
    REQUIRE(a.samples.size() == b.samples.size());
    for (size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].sup_ratio == b.samples[i].sup_ratio);
        CHECK(a.samples[i].psi_l1 == b.samples[i].psi_l1);
    }
    CHECK(a.max_ratio < 100.0);
}
