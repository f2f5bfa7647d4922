#include "ncz/operators.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace ncz {

const char* to_string(Side s) { return s == Side::row ? "row" : "column"; }

const char* to_string(OpKind k) {
    switch (k) {
        case OpKind::haar_multiplier: return "haar_multiplier";
        case OpKind::paraproduct: return "paraproduct";
        case OpKind::paraproduct_adjoint: return "paraproduct_adjoint";
        case OpKind::haar_shift: return "haar_shift";
        case OpKind::martingale_transform: return "martingale_transform";
    }
    return "?";
}

Side side_from_string(const std::string& s) {
    if (s == "row") return Side::row;
    if (s == "column") return Side::column;
    throw std::invalid_argument("unknown side: " + s);
}

OpKind op_kind_from_string(const std::string& s) {
    for (OpKind k : {OpKind::haar_multiplier, OpKind::paraproduct, OpKind::paraproduct_adjoint,
                     OpKind::haar_shift, OpKind::martingale_transform})
        if (s == to_string(k)) return k;
    throw std::invalid_argument("unknown operator kind: " + s);
}

namespace {

double cube_measure_of(const Grid& g, const CubeIndex& q) { return g.cube_measure(q.gen); }

void check_adapted(const std::vector<MatFn>& xi, const Grid& g) {
    if (static_cast<int>(xi.size()) != g.depth)
        throw std::invalid_argument("operator: need one adapted coefficient level per generation");
    for (int k = 0; k < g.depth; ++k) {
        if (!same_mesh(xi[k].grid(), g))
            throw std::invalid_argument("operator: coefficient mesh mismatch");
        const MatFn avg = expect(xi[k], k);
        if (max_abs_diff(avg, xi[k]) > 1e-10)
            throw std::invalid_argument("operator: coefficients not adapted at generation " +
                                        std::to_string(k));
    }
}

}  // namespace

void validate_spec(const OperatorSpec& spec) {
    const Grid& g = spec.grid;
    switch (spec.kind) {
        case OpKind::haar_multiplier:
        case OpKind::martingale_transform:
            check_adapted(spec.xi, g);
            break;
        case OpKind::paraproduct:
        case OpKind::paraproduct_adjoint:
            if (!spec.symbol || !same_mesh(spec.symbol->grid(), g))
                throw std::invalid_argument("operator: paraproduct needs a symbol on the mesh");
            break;
        case OpKind::haar_shift: {
            if (spec.r < 0 || spec.s < 0)
                throw std::invalid_argument("haar shift: negative complexity");
            for (const auto& c : spec.shift) {
                if (c.q.gen + std::max(spec.r, spec.s) > g.depth - 1)
                    throw std::invalid_argument("haar shift: coefficient cube not resolved");
                if (c.r_cube.gen != c.q.gen + spec.r || c.s_cube.gen != c.q.gen + spec.s ||
                    !cube_contains(g, c.q, c.r_cube) || !cube_contains(g, c.q, c.s_cube))
                    throw std::invalid_argument(
                        "haar shift: coefficient for a non-descendant cube pair");
                if (c.eps_r <= 0 || c.eps_r >= (1 << g.n) || c.eps_s <= 0 || c.eps_s >= (1 << g.n))
                    throw std::invalid_argument("haar shift: inadmissible sign pattern");
                if (c.alpha.dim() != spec.d)
                    throw std::invalid_argument("haar shift: coefficient dimension mismatch");
            }
            break;
        }
    }
}

double shift_overshoot(const OperatorSpec& spec) {
    double worst = 0.0;
    for (const auto& c : spec.shift) {
        const double bound = std::sqrt(cube_measure_of(spec.grid, c.r_cube) *
                                       cube_measure_of(spec.grid, c.s_cube)) /
                             cube_measure_of(spec.grid, c.q);
        worst = std::max(worst, op_norm(c.alpha) / bound);
    }
    return worst;
}

MatFn apply_haar_shift_gens(const OperatorSpec& spec, const MatFn& f, int gen_lo, int gen_hi) {
    if (spec.kind != OpKind::haar_shift)
        throw std::invalid_argument("apply_haar_shift: wrong operator kind");
    if (!same_mesh(spec.grid, f.grid()) || spec.d != f.dim())
        throw std::invalid_argument("apply_haar_shift: mesh mismatch");
    const Grid& g = f.grid();
    MatFn out(g, f.dim());
    for (const auto& c : spec.shift) {
        if (c.q.gen < gen_lo || c.q.gen > gen_hi) continue;
        const Matrix coef = haar_coeff(f, HaarIndex{c.s_cube, c.eps_s});
        const Matrix m = spec.side == Side::column ? c.alpha * coef : coef * c.alpha;
        for_each_leaf(g, c.r_cube, [&](int leaf) {
            const double hv = haar_value(g, HaarIndex{c.r_cube, c.eps_r}, leaf);
            if (hv != 0.0) out.value(leaf) += m * hv;
        });
    }
    return out;
}

MatFn apply_haar_shift(const OperatorSpec& spec, const MatFn& f) {
    return apply_haar_shift_gens(spec, f, 0, f.grid().depth);
}

MatFn apply_perfect_dyadic(const OperatorSpec& spec, const MatFn& f) {
    const Grid& g = f.grid();
    if (!same_mesh(spec.grid, g) || spec.d != f.dim())
        throw std::invalid_argument("apply_perfect_dyadic: mesh mismatch");
    switch (spec.kind) {
        case OpKind::haar_multiplier:
        case OpKind::martingale_transform:
            return martingale_transform(spec, f);
        case OpKind::paraproduct:
            return mart_paraproduct(spec, f);
        case OpKind::paraproduct_adjoint:
            return paraproduct_adjoint(spec, f);
        default:
            throw std::invalid_argument("apply_perfect_dyadic: not a perfect dyadic kind");
    }
}

MatFn martingale_transform(const OperatorSpec& spec, const MatFn& f) {
    if (spec.kind != OpKind::haar_multiplier && spec.kind != OpKind::martingale_transform)
        throw std::invalid_argument("martingale_transform: wrong operator kind");
    check_adapted(spec.xi, f.grid());
    const int K = f.grid().depth;
    MatFn out = zero_fn(f.grid(), f.dim());
    for (int k = 1; k <= K; ++k) {
        const MatFn df = mart_diff(f, k);
        out += spec.side == Side::column ? spec.xi[k - 1] * df : df * spec.xi[k - 1];
    }
    return out;
}

MatFn mart_paraproduct(const OperatorSpec& spec, const MatFn& f) {
    if (spec.kind != OpKind::paraproduct)
        throw std::invalid_argument("mart_paraproduct: wrong operator kind");
    const MatFn& rho = *spec.symbol;
    const int K = f.grid().depth;
    MatFn out = zero_fn(f.grid(), f.dim());
    for (int k = 1; k <= K; ++k) {
        const MatFn drho = mart_diff(rho, k);
        const MatFn ef = expect(f, k - 1);
        out += spec.side == Side::column ? drho * ef : ef * drho;
    }
    return out;
}

MatFn paraproduct_adjoint(const OperatorSpec& spec, const MatFn& f) {
    if (spec.kind != OpKind::paraproduct_adjoint)
        throw std::invalid_argument("paraproduct_adjoint: wrong operator kind");
    const MatFn& rho = *spec.symbol;
    const int K = f.grid().depth;
    MatFn out = zero_fn(f.grid(), f.dim());
    for (int k = 1; k <= K; ++k) {
        const MatFn drho_star = mart_diff(rho, k).adjoint();
        const MatFn df = mart_diff(f, k);
        out += expect(spec.side == Side::column ? drho_star * df : df * drho_star, k - 1);
    }
    return out;
}

MatFn apply_operator(const OperatorSpec& spec, const MatFn& f) {
    switch (spec.kind) {
        case OpKind::haar_shift: return apply_haar_shift(spec, f);
        case OpKind::martingale_transform: return martingale_transform(spec, f);
        default: return apply_perfect_dyadic(spec, f);
    }
}

namespace {

// Kernel value with the symbol's martingale differences precomputed
// (drho[k-1] = Delta_k rho); drho is ignored for multiplier kinds.
Matrix kernel_value_impl(const OperatorSpec& spec, const std::vector<MatFn>& drho, int leaf_x,
                         int leaf_y) {
    const Grid& g = spec.grid;
    const int K = g.depth;
    Matrix k_val(spec.d);
    const CubeIndex ly = leaf_cube(g, leaf_y, K);
    if (spec.kind == OpKind::haar_multiplier || spec.kind == OpKind::martingale_transform) {
        // sum_Q xi(parent Q)/|Q| 1_Q(x) (1_Q - 2^{-n} 1_{parent Q})(y)
        for (int k = 1; k <= K; ++k) {
            const CubeIndex qx = leaf_cube(g, leaf_x, k);
            double w = 0.0;
            if (cube_contains(g, qx, ly)) w += 1.0;
            if (cube_contains(g, parent(qx), ly)) w -= std::ldexp(1.0, -g.n);
            if (w != 0.0) k_val += spec.xi[k - 1].value(leaf_x) * (w / g.cube_measure(k));
        }
    } else {
        // sum_Q (rho_Q - rho_parent)/|Q| 1_Q(x) 2^{-n} 1_{parent Q}(y)
        for (int k = 1; k <= K; ++k) {
            const CubeIndex qx = leaf_cube(g, leaf_x, k);
            if (!cube_contains(g, parent(qx), ly)) continue;
            k_val += drho[k - 1].value(leaf_x) * (std::ldexp(1.0, -g.n) / g.cube_measure(k));
        }
    }
    return k_val;
}

std::vector<MatFn> symbol_diffs(const OperatorSpec& spec) {
    std::vector<MatFn> drho;
    if (spec.kind == OpKind::paraproduct || spec.kind == OpKind::paraproduct_adjoint)
        for (int k = 1; k <= spec.grid.depth; ++k) drho.push_back(mart_diff(*spec.symbol, k));
    return drho;
}

}  // namespace

Matrix perfect_dyadic_kernel_value(const OperatorSpec& spec, int leaf_x, int leaf_y) {
    if (spec.kind == OpKind::haar_shift)
        throw std::invalid_argument("perfect_dyadic_kernel_value: not a perfect dyadic kind");
    if (spec.kind == OpKind::paraproduct_adjoint) {
        OperatorSpec base = spec;
        base.kind = OpKind::paraproduct;
        return perfect_dyadic_kernel_value(base, leaf_y, leaf_x).adjoint();
    }
    return kernel_value_impl(spec, symbol_diffs(spec), leaf_x, leaf_y);
}

MatFn apply_perfect_dyadic_kernel(const OperatorSpec& spec, const MatFn& f) {
    const Grid& g = f.grid();
    if (!same_mesh(spec.grid, g) || spec.d != f.dim())
        throw std::invalid_argument("apply_perfect_dyadic_kernel: mesh mismatch");
    const bool adjoint = spec.kind == OpKind::paraproduct_adjoint;
    OperatorSpec base = spec;
    if (adjoint) base.kind = OpKind::paraproduct;
    const std::vector<MatFn> drho = symbol_diffs(base);
    const double w = g.leaf_measure();
    MatFn out(g, f.dim());
    for (int x = 0; x < f.leaves(); ++x) {
        Matrix acc(f.dim());
        for (int y = 0; y < f.leaves(); ++y) {
            const Matrix kv = adjoint ? kernel_value_impl(base, drho, y, x).adjoint()
                                      : kernel_value_impl(base, drho, x, y);
            if (kv.max_abs() == 0.0) continue;
            if (spec.side == Side::column)
                add_product(acc, kv, f.value(y));
            else
                add_product(acc, f.value(y), kv);
        }
        out.value(x) = acc * w;
    }
    return out;
}

OperatorSpec make_haar_multiplier(const Grid& g, std::vector<MatFn> xi, Side side) {
    OperatorSpec spec;
    spec.kind = OpKind::haar_multiplier;
    spec.side = side;
    spec.grid = g;
    spec.d = xi.empty() ? 1 : xi[0].dim();
    spec.xi = std::move(xi);
    validate_spec(spec);
    return spec;
}

OperatorSpec make_martingale_transform(const Grid& g, std::vector<MatFn> xi, Side side) {
    OperatorSpec spec = make_haar_multiplier(g, std::move(xi), side);
    spec.kind = OpKind::martingale_transform;
    return spec;
}

OperatorSpec make_paraproduct(const MatFn& symbol, Side side, bool adjoint) {
    OperatorSpec spec;
    spec.kind = adjoint ? OpKind::paraproduct_adjoint : OpKind::paraproduct;
    spec.side = side;
    spec.grid = symbol.grid();
    spec.d = symbol.dim();
    spec.symbol = symbol;
    validate_spec(spec);
    return spec;
}

OperatorSpec random_normalized_shift(const Grid& g, int d, int r, int s, Side side, Rng& rng) {
    OperatorSpec spec;
    spec.kind = OpKind::haar_shift;
    spec.side = side;
    spec.grid = g;
    spec.d = d;
    spec.r = r;
    spec.s = s;
    const int top = g.depth - 1 - std::max(r, s);
    for (int gq = 0; gq <= top; ++gq) {
        for (int c = 0; c < g.cubes_at(gq); ++c) {
            const CubeIndex q = cube_from_linear(g, gq, c);
            const int nr = g.cubes_at(r), ns = g.cubes_at(s);
            for (int ir = 0; ir < nr; ++ir) {
                for (int is = 0; is < ns; ++is) {
                    ShiftCoef coef;
                    coef.q = q;
                    const CubeIndex lr = cube_from_linear(g, r, ir);
                    coef.r_cube = CubeIndex{gq + r,
                                            {q.coord[0] * (1 << r) + lr.coord[0],
                                             q.coord[1] * (1 << r) + lr.coord[1]}};
                    const CubeIndex ls = cube_from_linear(g, s, is);
                    coef.s_cube = CubeIndex{gq + s,
                                            {q.coord[0] * (1 << s) + ls.coord[0],
                                             q.coord[1] * (1 << s) + ls.coord[1]}};
                    coef.eps_r = rng.uniform_int(1, (1 << g.n) - 1);
                    coef.eps_s = rng.uniform_int(1, (1 << g.n) - 1);
                    const double bound = std::sqrt(g.cube_measure(gq + r) * g.cube_measure(gq + s)) /
                                         g.cube_measure(gq);
                    coef.alpha = random_unitary(d, rng) * bound;
                    spec.shift.push_back(std::move(coef));
                }
            }
        }
    }
    validate_spec(spec);
    return spec;
}

OperatorSpec dyadic_hilbert_spec(const Grid& g, int d, Side side, bool normalized) {
    if (g.n != 1) throw std::invalid_argument("dyadic_hilbert_spec: one-dimensional grids only");
    OperatorSpec spec;
    spec.kind = OpKind::haar_shift;
    spec.side = side;
    spec.grid = g;
    spec.d = d;
    spec.r = 0;
    spec.s = 1;
    const double scale = normalized ? std::sqrt(0.5) : 1.0;
    for (int gq = 0; gq <= g.depth - 2; ++gq) {
        for (int c = 0; c < g.cubes_at(gq); ++c) {
            const CubeIndex q = cube_from_linear(g, gq, c);
            for (int half = 0; half < 2; ++half) {
                ShiftCoef coef;
                coef.q = q;
                coef.r_cube = q;
                coef.s_cube = CubeIndex{gq + 1, {2 * q.coord[0] + half, 0}};
                coef.eps_r = 1;
                coef.eps_s = 1;
                coef.alpha = Matrix::identity(d) * (half == 0 ? scale : -scale);
                spec.shift.push_back(std::move(coef));
            }
        }
    }
    validate_spec(spec);
    return spec;
}

namespace {

void append_double(std::string& out, double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out += buf;
}

void append_matrix(std::string& out, const Matrix& m) {
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) {
            out += ' ';
            append_double(out, m.at(i, j).real());
            out += ' ';
            append_double(out, m.at(i, j).imag());
        }
}

Matrix read_matrix(std::istringstream& is, int d) {
    Matrix m(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double re, im;
            if (!(is >> re >> im)) throw std::invalid_argument("opspec: truncated matrix");
            m.at(i, j) = cplx(re, im);
        }
    return m;
}

}  // namespace

std::string write_opspec(const OperatorSpec& spec) {
    std::string out = "opspec ";
    out += to_string(spec.kind);
    out += ' ';
    out += to_string(spec.side);
    out += " r=" + std::to_string(spec.r) + " s=" + std::to_string(spec.s) +
           " d=" + std::to_string(spec.d) + " n=" + std::to_string(spec.grid.n) +
           " K=" + std::to_string(spec.grid.depth) + "\n";
    if (spec.kind == OpKind::haar_shift) {
        for (const auto& c : spec.shift) {
            out += "alpha " + std::to_string(c.q.gen) + " " + std::to_string(c.q.coord[0]) + " " +
                   std::to_string(c.q.coord[1]) + " " + std::to_string(c.r_cube.coord[0]) + " " +
                   std::to_string(c.r_cube.coord[1]) + " " + std::to_string(c.s_cube.coord[0]) +
                   " " + std::to_string(c.s_cube.coord[1]) + " " + std::to_string(c.eps_r) + " " +
                   std::to_string(c.eps_s);
            append_matrix(out, c.alpha);
            out += '\n';
        }
    } else if (spec.kind == OpKind::haar_multiplier || spec.kind == OpKind::martingale_transform) {
        for (int k = 0; k < spec.grid.depth; ++k)
            for (int c = 0; c < spec.grid.cubes_at(k); ++c) {
                const CubeIndex q = cube_from_linear(spec.grid, k, c);
                int leaf0 = -1;
                for_each_leaf(spec.grid, q, [&](int leaf) { if (leaf0 < 0) leaf0 = leaf; });
                out += "xi " + std::to_string(k) + " " + std::to_string(q.coord[0]) + " " +
                       std::to_string(q.coord[1]);
                append_matrix(out, spec.xi[k].value(leaf0));
                out += '\n';
            }
    } else {
        out += "symbol\n";
        out += write_matfn(*spec.symbol);
    }
    return out;
}

OperatorSpec read_opspec(const std::string& text) {
    std::istringstream is(text);
    std::string magic, kind_s, side_s;
    if (!(is >> magic >> kind_s >> side_s) || magic != "opspec")
        throw std::invalid_argument("opspec: bad header");
    OperatorSpec spec;
    spec.kind = op_kind_from_string(kind_s);
    spec.side = side_from_string(side_s);
    int n = 1, K = 4;
    std::string tok;
    for (int i = 0; i < 5; ++i) {
        if (!(is >> tok)) throw std::invalid_argument("opspec: bad header fields");
        const auto eq = tok.find('=');
        const std::string key = tok.substr(0, eq);
        const int val = std::stoi(tok.substr(eq + 1));
        if (key == "r") spec.r = val;
        else if (key == "s") spec.s = val;
        else if (key == "d") spec.d = val;
        else if (key == "n") n = val;
        else if (key == "K") K = val;
        else throw std::invalid_argument("opspec: unknown header field " + key);
    }
    spec.grid = Grid(n, K, 0);

    if (spec.kind == OpKind::haar_shift) {
        while (is >> tok) {
            if (tok != "alpha") throw std::invalid_argument("opspec: expected alpha record");
            ShiftCoef c;
            int qx, qy, rx, ry, sx, sy;
            if (!(is >> c.q.gen >> qx >> qy >> rx >> ry >> sx >> sy >> c.eps_r >> c.eps_s))
                throw std::invalid_argument("opspec: bad alpha record");
            c.q.coord = {qx, qy};
            c.r_cube = CubeIndex{c.q.gen + spec.r, {rx, ry}};
            c.s_cube = CubeIndex{c.q.gen + spec.s, {sx, sy}};
            std::string rest;
            std::getline(is, rest);
            std::istringstream ms(rest);
            c.alpha = read_matrix(ms, spec.d);
            spec.shift.push_back(std::move(c));
        }
    } else if (spec.kind == OpKind::haar_multiplier || spec.kind == OpKind::martingale_transform) {
        spec.xi.assign(K, MatFn(spec.grid, spec.d));
        while (is >> tok) {
            if (tok != "xi") throw std::invalid_argument("opspec: expected xi record");
            int k, cx, cy;
            if (!(is >> k >> cx >> cy)) throw std::invalid_argument("opspec: bad xi record");
            std::string rest;
            std::getline(is, rest);
            std::istringstream ms(rest);
            const Matrix m = read_matrix(ms, spec.d);
            for_each_leaf(spec.grid, CubeIndex{k, {cx, cy}},
                          [&](int leaf) { spec.xi[k].value(leaf) = m; });
        }
    } else {
        if (!(is >> tok) || tok != "symbol") throw std::invalid_argument("opspec: expected symbol");
        std::string rest((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        spec.symbol = read_matfn(rest);
        spec.grid = spec.symbol->grid();
    }
    validate_spec(spec);
    return spec;
}

Point leaf_midpoint(const Grid& g, int leaf) {
    const CubeIndex l = cube_from_linear(g, g.depth, leaf);
    const double h = 1.0 / static_cast<double>(1 << g.depth);
    return Point{(l.coord[0] + 0.5) * h, g.n == 2 ? (l.coord[1] + 0.5) * h : 0.0};
}

MatFn apply_smooth_czo(const SmoothKernelSpec& spec, const MatFn& f) {
    const Grid& g = f.grid();
    if (spec.d != f.dim()) throw std::invalid_argument("apply_smooth_czo: dimension mismatch");
    const double w = g.leaf_measure();
    MatFn out(g, f.dim());
    for (int x = 0; x < f.leaves(); ++x) {
        Matrix acc(f.dim());
        const Point px = leaf_midpoint(g, x);
        for (int y = 0; y < f.leaves(); ++y) {
            if (y == x) continue;  // diagonal leaf excluded
            Matrix kv;
            try {
                kv = spec.sampler(px, leaf_midpoint(g, y));
            } catch (const std::exception& e) {
                std::ostringstream os;
                os << "smooth kernel sampler failed at leaf pair (" << x << "," << y
                   << "): " << e.what();
                throw std::runtime_error(os.str());
            }
            if (spec.side == Side::column)
                add_product(acc, kv, f.value(y));
            else
                add_product(acc, f.value(y), kv);
        }
        out.value(x) = acc * w;
    }
    return out;
}

SmoothKernelSpec smooth_adjoint(const SmoothKernelSpec& spec) {
    SmoothKernelSpec adj = spec;
    adj.name = spec.name + "_adjoint";
    auto base = spec.sampler;
    adj.sampler = [base](const Point& x, const Point& y) { return base(y, x).adjoint(); };
    return adj;
}

double hormander_functional(const SmoothKernelSpec& spec, const Grid& g) {
    double sup = 0.0;
    const double w = g.leaf_measure();
    for (int gen = 1; gen <= g.depth; ++gen) {
        for (int c = 0; c < g.cubes_at(gen); ++c) {
            const CubeIndex q = cube_from_linear(g, gen, c);
            const CubeIndex twoq = parent(q);
            const Point cq{(q.coord[0] + 0.5) / (1 << gen),
                           g.n == 2 ? (q.coord[1] + 0.5) / (1 << gen) : 0.0};
            std::vector<int> inside;
            for_each_leaf(g, q, [&](int leaf) { inside.push_back(leaf); });
            for (int y : inside) {
                const Point py = leaf_midpoint(g, y);
                double integral = 0.0;
                for (int x = 0; x < g.leaf_count(); ++x) {
                    if (cube_contains(g, twoq, cube_from_linear(g, g.depth, x))) continue;
                    const Point px = leaf_midpoint(g, x);
                    integral += w * op_norm(spec.sampler(px, py) - spec.sampler(px, cq));
                }
                sup = std::max(sup, integral);
            }
        }
    }
    return sup;
}

SmoothKernelSpec make_smooth_kernel(const std::string& name, int d, Side side) {
    SmoothKernelSpec spec;
    spec.name = name;
    spec.side = side;
    spec.d = d;
    if (name == "sgn") {
        spec.sampler = [d](const Point& x, const Point& y) {
            const double s = x[0] > y[0] ? 1.0 : (x[0] < y[0] ? -1.0 : 0.0);
            return Matrix::identity(d) * s;
        };
    } else if (name == "inv") {
        spec.sampler = [d](const Point& x, const Point& y) {
            const double dx = x[0] - y[0];
            if (dx == 0.0) throw std::domain_error("kernel singular on the diagonal");
            return Matrix::identity(d) * (1.0 / dx);
        };
    } else {
        throw std::invalid_argument("make_smooth_kernel: unknown kernel " + name);
    }
    return spec;
}

AnnihilationContext make_annihilation_context(const MatFn& f, int ell, int s_min, int s_max) {
    AnnihilationContext ctx;
    ctx.ell = ell;
    ctx.fam = lacunary_build(f, s_min, s_max);
    ctx.parts = cz_decompose(f, ctx.fam.run_at(ell));
    ctx.qhat = qhat_build(ctx.fam, ell);
    return ctx;
}

AnnihilationReport annihilation_check(const OperatorSpec& op, const MatFn& f, int ell,
                                      int s_min, int s_max) {
    return annihilation_check(op, f, make_annihilation_context(f, ell, s_min, s_max));
}

AnnihilationReport annihilation_check(const OperatorSpec& op, const MatFn& f,
                                      const AnnihilationContext& ctx) {
    if (op.side != Side::column)
        throw std::invalid_argument(
            "annihilation_check: column side required (row follows by symmetry)");
    const Grid& g = f.grid();
    const int K = g.depth;

    const LacunaryFamily& fam = ctx.fam;
    const CuculescuSeq& seq = fam.run_at(ctx.ell);
    const CZParts& parts = ctx.parts;
    const QhatFamily& qf = ctx.qhat;

    AnnihilationReport rep;
    rep.deltas = delta_formulas_check(f, seq, parts);
    rep.keys = key_identity_check(fam, qf);
    rep.cz_sum_defect = max_abs_diff(f, parts.g_d + parts.b_d + parts.b_off + parts.g_off);
    rep.series_defect = max_abs_diff(parts.g_off, cz_series_sum(f, seq));

    ZetaFamily zf;
    if (op.kind == OpKind::haar_shift) zf = zeta_build(qf, g, op.s);

    for (const MatFn* gamma : {&parts.b_d, &parts.g_off, &parts.b_off}) {
        std::vector<MatFn> terms;  // UT_{k-1}(Delta_k gamma), k = 1..K
        MatFn gamma_c = zero_fn(g, f.dim());
        for (int k = 1; k <= K; ++k) {
            terms.push_back(
                triangular_truncate(mart_diff(*gamma, k), fam, k - 1, TrianglePart::upper));
            gamma_c += terms.back();
            rep.max_ut_qhat =
                std::max(rep.max_ut_qhat, (terms.back() * qf.qhat_k[k - 1]).max_abs());
        }

        switch (op.kind) {
            case OpKind::haar_multiplier:
            case OpKind::paraproduct_adjoint: {
                const MatFn image = apply_perfect_dyadic(op, gamma_c);
                rep.max_perfect_dyadic =
                    std::max(rep.max_perfect_dyadic, (image * qf.qhat).max_abs());
                break;
            }
            case OpKind::paraproduct: {
                const MatFn image = mart_paraproduct(op, gamma_c);
                const double resid = (image * qf.qhat).max_abs();
                rep.max_paraproduct = std::max(rep.max_paraproduct, resid);
                rep.max_perfect_dyadic = std::max(rep.max_perfect_dyadic, resid);
                break;
            }
            case OpKind::martingale_transform: {
                const MatFn image = martingale_transform(op, gamma_c);
                rep.max_transform = std::max(rep.max_transform, (image * qf.qhat).max_abs());
                break;
            }
            case OpKind::haar_shift: {
                MatFn a = zero_fn(g, f.dim()), b = zero_fn(g, f.dim()), cpart = zero_fn(g, f.dim());
                for (int k = 1; k <= K; ++k) {
                    a += apply_haar_shift_gens(op, terms[k - 1], k - 1, K);
                    if (op.s >= 1)
                        b += apply_haar_shift_gens(op, terms[k - 1],
                                                   std::max(0, k - 1 - op.s), k - 2);
                    cpart += apply_haar_shift_gens(op, terms[k - 1], 0, k - 2 - op.s);
                }
                rep.max_shift_c = std::max(rep.max_shift_c, cpart.max_abs());
                rep.max_shift_a = std::max(rep.max_shift_a, (a * qf.qhat).max_abs());
                rep.max_shift_b = std::max(rep.max_shift_b, (b * zf.zeta).max_abs());
                break;
            }
        }
    }
    return rep;
}

WeakTypeScanReport weak_type_scan(const OperatorSpec& op, const EnsembleSpec& ens,
                                  const WeakTypeParams& params) {
    WeakTypeScanReport rep;
    rep.samples.resize(ens.samples);
    std::vector<char> skip(ens.samples, 0);

    auto worker = [&](int i) {
        Rng rng = Rng::for_sample(ens.seed, static_cast<uint64_t>(i));
        const MatFn f = random_positive_fn(ens, rng);
        const double l1 = lp_norm(f, 1.0);
        if (l1 <= 0.0) {
            skip[i] = 1;
            return;
        }
        const int top = std::max(params.s_min + 1, lacunary_top_exponent(f));
        const LacunaryFamily fam = lacunary_build(f, params.s_min, top);
        const RowColSplit split = row_col_split(f, fam);

        const MatFn tr = apply_operator(op.with_side(Side::row), split.f_r);
        const MatFn tc = apply_operator(op.with_side(Side::column), split.f_c);
        const MatFn tpsi = apply_operator(op.with_side(Side::column), split.residual);

        WeakTypeSample out;
        out.psi_l1 = lp_norm(split.residual, 1.0);
        for (int ell = params.ell_min; ell <= params.ell_max; ++ell) {
            const double lambda = std::ldexp(1.0, ell);
            const double ratio = (weak_l1_tail(tr, lambda) + weak_l1_tail(tc, lambda)) / l1;
            if (ratio > out.sup_ratio) {
                out.sup_ratio = ratio;
                out.argmax_ell = ell;
            }
            out.psi_tail_ratio = std::max(out.psi_tail_ratio, weak_l1_tail(tpsi, lambda) / l1);
        }
        rep.samples[i] = out;
    };

    const int jobs = std::max(1, params.jobs);
    if (jobs == 1) {
        for (int i = 0; i < ens.samples; ++i) worker(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < ens.samples; i = next.fetch_add(1)) worker(i);
            });
        for (auto& th : pool) th.join();
    }

    for (int i = 0; i < ens.samples; ++i) {
        if (skip[i]) {
            ++rep.skipped;
            continue;
        }
        rep.max_ratio = std::max(rep.max_ratio, rep.samples[i].sup_ratio);
    }
    return rep;
}

}  // namespace ncz
