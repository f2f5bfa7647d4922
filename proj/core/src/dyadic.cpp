#include "ncz/dyadic.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ncz {

Grid::Grid(int n_, int depth_, int pad_) : n(n_), depth(depth_), pad(pad_) {
    if (n != 1 && n != 2) throw std::invalid_argument("Grid: n must be 1 or 2");
    if (depth < 0 || depth > 20 / n) throw std::invalid_argument("Grid: depth out of range");
    if (pad < 0 || pad > depth) throw std::invalid_argument("Grid: pad out of range");
}

CubeIndex parent(const CubeIndex& q) {
    if (q.gen == 0) throw std::invalid_argument("parent: root cube has no parent");
    return CubeIndex{q.gen - 1, {q.coord[0] >> 1, q.coord[1] >> 1}};
}

CubeIndex ancestor(const CubeIndex& q, int s) {
    const int up = std::min(s, q.gen);
    return CubeIndex{q.gen - up, {q.coord[0] >> up, q.coord[1] >> up}};
}

CubeIndex child(const Grid& g, const CubeIndex& q, int which) {
    CubeIndex c{q.gen + 1, {q.coord[0] * 2 + (which & 1), 0}};
    if (g.n == 2) c.coord[1] = q.coord[1] * 2 + ((which >> 1) & 1);
    return c;
}

bool cube_contains(const Grid& g, const CubeIndex& q, const CubeIndex& sub) {
    if (sub.gen < q.gen) return false;
    const int shift = sub.gen - q.gen;
    for (int a = 0; a < g.n; ++a)
        if ((sub.coord[a] >> shift) != q.coord[a]) return false;
    return true;
}

int cube_linear(const Grid& g, const CubeIndex& q) {
    return g.n == 1 ? q.coord[0] : q.coord[0] * (1 << q.gen) + q.coord[1];
}

CubeIndex cube_from_linear(const Grid& g, int gen, int linear) {
    if (g.n == 1) return CubeIndex{gen, {linear, 0}};
    const int side = 1 << gen;
    return CubeIndex{gen, {linear / side, linear % side}};
}

CubeIndex leaf_cube(const Grid& g, int leaf, int gen) {
    CubeIndex l = cube_from_linear(g, g.depth, leaf);
    return ancestor(l, g.depth - gen);
}

int leaf_linear(const Grid& g, const CubeIndex& c) { return cube_linear(g, c); }

CubeIndex support_cube(const Grid& g) { return CubeIndex{g.pad, {0, 0}}; }

MatFn::MatFn(const Grid& g, int d)
    : grid_(g), d_(d), v_(static_cast<size_t>(g.leaf_count()), Matrix(d)) {
    if (d < 1) throw std::invalid_argument("MatFn: dimension must be positive");
}

double MatFn::herm_defect() const {
    double m = 0.0;
    for (const auto& x : v_) m = std::max(m, x.herm_defect());
    return m;
}

MatFn& MatFn::operator+=(const MatFn& o) {
    if (!same_mesh(grid_, o.grid_) || d_ != o.d_) throw std::invalid_argument("MatFn: mismatch in +=");
    for (size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
}

MatFn& MatFn::operator-=(const MatFn& o) {
    if (!same_mesh(grid_, o.grid_) || d_ != o.d_) throw std::invalid_argument("MatFn: mismatch in -=");
    for (size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
}

MatFn& MatFn::operator*=(double s) {
    for (auto& x : v_) x *= s;
    return *this;
}

MatFn& MatFn::operator*=(cplx s) {
    for (auto& x : v_) x *= s;
    hermitian_ = false;
    return *this;
}

MatFn operator*(const MatFn& a, const MatFn& b) {
    if (!same_mesh(a.grid_, b.grid_) || a.d_ != b.d_) throw std::invalid_argument("MatFn: mismatch in *");
    MatFn c(a.grid_, a.d_);
    for (size_t i = 0; i < a.v_.size(); ++i) c.v_[i] = a.v_[i] * b.v_[i];
    return c;
}

MatFn MatFn::adjoint() const {
    MatFn c(grid_, d_);
    for (int i = 0; i < leaves(); ++i) c.value(i) = v_[i].adjoint();
    c.set_hermitian_flag(hermitian_);
    return c;
}

double MatFn::max_abs() const {
    double m = 0.0;
    for (const auto& x : v_) m = std::max(m, x.max_abs());
    return m;
}

MatFn constant_fn(const Grid& g, const Matrix& m) {
    MatFn f(g, m.dim());
    for (int i = 0; i < f.leaves(); ++i) f.value(i) = m;
    f.set_hermitian_flag(m.herm_defect() == 0.0);
    return f;
}

MatFn identity_fn(const Grid& g, int d) { return constant_fn(g, Matrix::identity(d)); }
MatFn zero_fn(const Grid& g, int d) { return MatFn(g, d); }

MatFn left_mul(const Matrix& m, const MatFn& f) {
    MatFn c(f.grid(), f.dim());
    for (int i = 0; i < f.leaves(); ++i) c.value(i) = m * f.value(i);
    return c;
}

MatFn right_mul(const MatFn& f, const Matrix& m) {
    MatFn c(f.grid(), f.dim());
    for (int i = 0; i < f.leaves(); ++i) c.value(i) = f.value(i) * m;
    return c;
}

double max_abs_diff(const MatFn& a, const MatFn& b) {
    double m = 0.0;
    for (int i = 0; i < a.leaves(); ++i) m = std::max(m, max_abs_diff(a.value(i), b.value(i)));
    return m;
}

cplx phi_trace(const MatFn& f) {
    cplx s = 0.0;
    for (int i = 0; i < f.leaves(); ++i) s += f.value(i).ntrace();
    return s * f.grid().leaf_measure();
}

cplx l2_inner(const MatFn& f, const MatFn& g) {
    if (!same_mesh(f.grid(), g.grid()) || f.dim() != g.dim())
        throw std::invalid_argument("l2_inner: mismatch");
    cplx s = 0.0;
    const int d = f.dim();
    for (int leaf = 0; leaf < f.leaves(); ++leaf) {
        cplx t = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) t += std::conj(f.value(leaf).at(i, j)) * g.value(leaf).at(i, j);
        s += t / static_cast<double>(d);
    }
    return s * f.grid().leaf_measure();
}

MatFn expect(const MatFn& f, int k) {
    const Grid& g = f.grid();
    if (k < 0 || k > g.depth) throw std::invalid_argument("expect: generation out of range");
    const int cubes = g.cubes_at(k);
    std::vector<Matrix> avg(cubes, Matrix(f.dim()));
    for (int leaf = 0; leaf < f.leaves(); ++leaf)
        avg[cube_linear(g, leaf_cube(g, leaf, k))] += f.value(leaf);
    const double inv = 1.0 / static_cast<double>(f.leaves() / cubes);
    for (auto& m : avg) m *= inv;
    MatFn out(g, f.dim());
    for (int leaf = 0; leaf < f.leaves(); ++leaf)
        out.value(leaf) = avg[cube_linear(g, leaf_cube(g, leaf, k))];
    out.set_hermitian_flag(f.hermitian_flag());
    return out;
}

MatFn mart_diff(const MatFn& f, int k) {
    if (k < 1 || k > f.grid().depth)
        throw std::invalid_argument("mart_diff: generation out of range");
    return expect(f, k) - expect(f, k - 1);
}

double haar_value(const Grid& g, const HaarIndex& h, int leaf) {
    if (h.eps <= 0 || h.eps >= (1 << g.n))
        throw std::invalid_argument("haar_value: inadmissible sign pattern");
    const CubeIndex l = cube_from_linear(g, g.depth, leaf);
    if (!cube_contains(g, h.cube, l)) return 0.0;
    const int shift = g.depth - h.cube.gen - 1;  // bit selecting the half per axis
    if (shift < 0) throw std::invalid_argument("haar_value: unresolved Haar index");
    double v = std::pow(2.0, 0.5 * g.n * h.cube.gen);  // 1/sqrt(|Q|)
    for (int a = 0; a < g.n; ++a) {
        const bool right = (l.coord[a] >> shift) & 1;
        if (right && (h.eps >> a) & 1) v = -v;
    }
    return v;
}

MatFn haar_fn(const Grid& g, const HaarIndex& h) {
    MatFn out(g, 1);
    for (int leaf = 0; leaf < out.leaves(); ++leaf) out.value(leaf).at(0, 0) = haar_value(g, h, leaf);
    out.set_hermitian_flag(true);
    return out;
}

Matrix haar_coeff(const MatFn& f, const HaarIndex& h) {
    const Grid& g = f.grid();
    if (h.cube.gen > g.depth - 1)
        throw std::invalid_argument("haar_coeff: Haar index not resolved by the grid");
    Matrix s(f.dim());
    for_each_leaf(g, h.cube, [&](int leaf) {
        const double hv = haar_value(g, h, leaf);
        if (hv != 0.0) s += f.value(leaf) * hv;
    });
    return s * g.leaf_measure();
}

std::vector<HaarIndex> all_haar_indices(const Grid& g) {
    std::vector<HaarIndex> out;
    for (int gen = 0; gen <= g.depth - 1; ++gen)
        for (int c = 0; c < g.cubes_at(gen); ++c)
            for (int eps = 1; eps < (1 << g.n); ++eps)
                out.push_back(HaarIndex{cube_from_linear(g, gen, c), eps});
    return out;
}

double lp_norm(const MatFn& f, double p) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p < 1");
    if (p >= kInfNorm) {
        double m = 0.0;
        for (int i = 0; i < f.leaves(); ++i) m = std::max(m, op_norm(f.value(i)));
        return m;
    }
    double s = 0.0;
    for (int i = 0; i < f.leaves(); ++i) {
        const auto sv = singular_values(f.value(i));
        double t = 0.0;
        for (double x : sv) t += std::pow(x, p);
        s += t / static_cast<double>(f.dim());
    }
    return std::pow(s * f.grid().leaf_measure(), 1.0 / p);
}

double weak_l1_tail(const MatFn& f, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("weak_l1_tail: lambda must be positive");
    double mass = 0.0;
    for (int i = 0; i < f.leaves(); ++i) {
        const auto sv = singular_values(f.value(i));
        int count = 0;
        for (double x : sv)
            if (x > lambda) ++count;
        mass += static_cast<double>(count) / static_cast<double>(f.dim());
    }
    return lambda * mass * f.grid().leaf_measure();
}

double linf_l2c_norm(const MatFn& f) {
    Matrix s(f.dim());
    for (int i = 0; i < f.leaves(); ++i) s += f.value(i).adjoint() * f.value(i);
    s *= f.grid().leaf_measure();
    return std::sqrt(std::max(0.0, max_eig_herm(s)));
}

double linf_l2r_norm(const MatFn& f) {
    Matrix s(f.dim());
    for (int i = 0; i < f.leaves(); ++i) s += f.value(i) * f.value(i).adjoint();
    s *= f.grid().leaf_measure();
    return std::sqrt(std::max(0.0, max_eig_herm(s)));
}

namespace {

void append_double(std::string& out, double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out += buf;
}

}  // namespace

std::string write_matfn(const MatFn& f) {
    std::string out;
    out += std::to_string(f.grid().n) + " " + std::to_string(f.grid().depth) + " " +
           std::to_string(f.dim()) + " " + std::to_string(f.grid().pad) + " " +
           (f.hermitian_flag() ? "1" : "0") + "\n";
    for (int leaf = 0; leaf < f.leaves(); ++leaf) {
        const Matrix& m = f.value(leaf);
        for (int i = 0; i < f.dim(); ++i)
            for (int j = 0; j < f.dim(); ++j) {
                if (i != 0 || j != 0) out += ' ';
                append_double(out, m.at(i, j).real());
                out += ' ';
                append_double(out, m.at(i, j).imag());
            }
        out += '\n';
    }
    return out;
}

MatFn read_matfn(const std::string& text) {
    std::istringstream is(text);
    int n, depth, d, pad, herm;
    if (!(is >> n >> depth >> d >> pad >> herm))
        throw std::invalid_argument("read_matfn: bad header");
    MatFn f(Grid(n, depth, pad), d);
    for (int leaf = 0; leaf < f.leaves(); ++leaf)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double re, im;
                if (!(is >> re >> im)) throw std::invalid_argument("read_matfn: truncated data");
                f.value(leaf).at(i, j) = cplx(re, im);
            }
    f.set_hermitian_flag(herm != 0);
    return f;
}

}  // namespace ncz
