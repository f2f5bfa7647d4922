#include "ncz/ensemble.hpp"

#include <cmath>
#include <stdexcept>

namespace ncz {

Matrix random_matrix(int d, Rng& rng) {
    Matrix m(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m.at(i, j) = rng.cgauss();
    return m;
}

Matrix random_hermitian(int d, Rng& rng) {
    Matrix m = random_matrix(d, rng);
    m.hermitize();
    return m;
}

Matrix random_psd(int d, Rng& rng) {
    const Matrix g = random_matrix(d, rng);
    Matrix m = g.adjoint() * g;
    m *= 1.0 / static_cast<double>(d);
    m.hermitize();
    return m;
}

Matrix random_unitary(int d, Rng& rng) {
    Matrix g = random_matrix(d, rng);
    // Modified Gram-Schmidt on columns.
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < j; ++i) {
            cplx dot = 0.0;
            for (int r = 0; r < d; ++r) dot += std::conj(g.at(r, i)) * g.at(r, j);
            for (int r = 0; r < d; ++r) g.at(r, j) -= dot * g.at(r, i);
        }
        double norm = 0.0;
        for (int r = 0; r < d; ++r) norm += std::norm(g.at(r, j));
        norm = std::sqrt(norm);
        if (norm < 1e-12) {  // resample a degenerate column
            for (int r = 0; r < d; ++r) g.at(r, j) = rng.cgauss();
            --j;
            continue;
        }
        for (int r = 0; r < d; ++r) g.at(r, j) /= norm;
    }
    return g;
}

Matrix random_projection(int d, int rank, Rng& rng) {
    if (rank < 0 || rank > d) throw std::invalid_argument("random_projection: bad rank");
    const Matrix u = random_unitary(d, rng);
    Matrix p(d);
    for (int k = 0; k < rank; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) p.at(i, j) += u.at(i, k) * std::conj(u.at(j, k));
    p.hermitize();
    return p;
}

MatFn random_positive_fn(const EnsembleSpec& spec, Rng& rng) {
    const Grid g = spec.grid();
    MatFn f(g, spec.d);
    const CubeIndex sup = support_cube(g);
    std::vector<int> in_support;
    for_each_leaf(g, sup, [&](int leaf) { in_support.push_back(leaf); });
    for (int leaf : in_support) f.value(leaf) = random_psd(spec.d, rng);
    for (int b = 0; b < spec.spikes; ++b) {
        const int leaf = in_support[rng.uniform_int(0, static_cast<int>(in_support.size()) - 1)];
        std::vector<cplx> v(spec.d);
        double norm = 0.0;
        for (auto& x : v) {
            x = rng.cgauss();
            norm += std::norm(x);
        }
        norm = std::sqrt(norm);
        Matrix burst(spec.d);
        for (int i = 0; i < spec.d; ++i)
            for (int j = 0; j < spec.d; ++j)
                burst.at(i, j) = spec.spike_scale * v[i] * std::conj(v[j]) / (norm * norm);
        f.value(leaf) += burst;
    }
    f.set_hermitian_flag(true);
    return f;
}

MatFn random_hermitian_fn(const Grid& g, int d, Rng& rng) {
    MatFn f(g, d);
    for (int leaf = 0; leaf < f.leaves(); ++leaf) f.value(leaf) = random_hermitian(d, rng);
    f.set_hermitian_flag(true);
    return f;
}

MatFn random_fn(const Grid& g, int d, Rng& rng) {
    MatFn f(g, d);
    for (int leaf = 0; leaf < f.leaves(); ++leaf) f.value(leaf) = random_matrix(d, rng);
    return f;
}

std::vector<MatFn> random_adapted_sequence(const Grid& g, int d, Rng& rng) {
    std::vector<MatFn> xi;
    for (int k = 0; k < g.depth; ++k) {
        MatFn level(g, d);
        for (int c = 0; c < g.cubes_at(k); ++c) {
            Matrix m = random_matrix(d, rng);
            const double norm = op_norm(m);
            if (norm > 0.0) m *= 1.0 / norm;
            for_each_leaf(g, cube_from_linear(g, k, c), [&](int leaf) { level.value(leaf) = m; });
        }
        xi.push_back(std::move(level));
    }
    return xi;
}

}  // namespace ncz
