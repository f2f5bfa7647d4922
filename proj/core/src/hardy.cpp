#include "ncz/hardy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ncz {

double ProbeReport::aggregate_max(const std::string& key) const {
    auto it = aggregates.find(key);
    return it == aggregates.end() ? 0.0 : it->second;
}

namespace {

// Leafwise PSD square root of a positive leafwise sum.
MatFn sqrt_fn(const MatFn& f) {
    MatFn out(f.grid(), f.dim());
    for (int leaf = 0; leaf < f.leaves(); ++leaf) out.value(leaf) = sqrt_psd(f.value(leaf));
    out.set_hermitian_flag(true);
    return out;
}

double sup_opnorm_sqrt(const MatFn& f) {
    double m = 0.0;
    for (int leaf = 0; leaf < f.leaves(); ++leaf)
        m = std::max(m, std::max(0.0, max_eig_herm(f.value(leaf))));
    return std::sqrt(m);
}

}  // namespace

NormReport hardy_norms(const MatFn& f, std::span<const double> ps) {
    const int K = f.grid().depth;
    NormReport rep;

    MatFn sq_c = zero_fn(f.grid(), f.dim());
    MatFn sq_r = zero_fn(f.grid(), f.dim());
    MatFn cond_c = zero_fn(f.grid(), f.dim());
    MatFn cond_r = zero_fn(f.grid(), f.dim());
    for (int k = 1; k <= K; ++k) {
        const MatFn df = mart_diff(f, k);
        const MatFn dstar = df.adjoint();
        const MatFn col = dstar * df;
        const MatFn row = df * dstar;
        sq_c += col;
        sq_r += row;
        cond_c += expect(col, k - 1);
        cond_r += expect(row, k - 1);
        rep.h1d += lp_norm(df, 1.0);
    }
    rep.H1c = lp_norm(sqrt_fn(sq_c), 1.0);
    rep.H1r = lp_norm(sqrt_fn(sq_r), 1.0);
    rep.h1c = lp_norm(sqrt_fn(cond_c), 1.0);
    rep.h1r = lp_norm(sqrt_fn(cond_r), 1.0);
    for (double p : ps) {
        rep.Hp_c[p] = lp_norm(sqrt_fn(sq_c), p);
        rep.Hp_r[p] = lp_norm(sqrt_fn(sq_r), p);
    }
    return rep;
}

NormReport bmo_norms(const MatFn& f) {
    const int K = f.grid().depth;
    NormReport rep;
    const MatFn fstar = f.adjoint();

    for (int k = 1; k <= K; ++k) {
        const MatFn tail_c = f - expect(f, k - 1);
        rep.BMOc = std::max(rep.BMOc, sup_opnorm_sqrt(expect(tail_c.adjoint() * tail_c, k)));
        const MatFn tail_r = fstar - expect(fstar, k - 1);
        rep.BMOr = std::max(rep.BMOr, sup_opnorm_sqrt(expect(tail_r.adjoint() * tail_r, k)));
        rep.bmod = std::max(rep.bmod, lp_norm(mart_diff(f, k), kInfNorm));
    }
    for (int k = 0; k <= K; ++k) {
        const MatFn tail_c = f - expect(f, k);
        rep.bmoc = std::max(rep.bmoc, sup_opnorm_sqrt(expect(tail_c.adjoint() * tail_c, k)));
        const MatFn tail_r = fstar - expect(fstar, k);
        rep.bmor = std::max(rep.bmor, sup_opnorm_sqrt(expect(tail_r.adjoint() * tail_r, k)));
    }
    const double coarse = lp_norm(expect(f, 0), 1.0);
    rep.bmoc = std::max(rep.bmoc, coarse);
    rep.bmor = std::max(rep.bmor, lp_norm(expect(fstar, 0), 1.0));
    rep.BMO = std::max(rep.BMOr, rep.BMOc);
    rep.bmo = std::max({rep.bmor, rep.bmoc, rep.bmod});
    return rep;
}

const char* to_string(AtomKind k) {
    switch (k) {
        case AtomKind::mei_column: return "mei_column";
        case AtomKind::mei_row: return "mei_row";
        case AtomKind::perrin_c: return "perrin_c";
        case AtomKind::perrin_r: return "perrin_r";
        case AtomKind::unit_a1: return "unit_a1";
    }
    return "?";
}

namespace {

// int_Q |a|^2 as a single matrix (column flavor: a* a).
Matrix cube_second_moment(const MatFn& a, const CubeIndex& q, bool column) {
    Matrix s(a.dim());
    for_each_leaf(a.grid(), q, [&](int leaf) {
        const Matrix& v = a.value(leaf);
        s += column ? v.adjoint() * v : v * v.adjoint();
    });
    return s * a.grid().leaf_measure();
}

double mei_normalization(const MatFn& a, const CubeIndex& q, bool column) {
    return trace_norm(sqrt_psd(cube_second_moment(a, q, column)));
}

}  // namespace

AtomSpec make_atom(AtomKind kind, const Grid& g, int d, Rng& rng) {
    AtomSpec atom;
    atom.kind = kind;
    switch (kind) {
        case AtomKind::mei_column:
        case AtomKind::mei_row: {
            const int gen = rng.uniform_int(0, g.depth - 1);
            atom.cube = cube_from_linear(g, gen, rng.uniform_int(0, g.cubes_at(gen) - 1));
            MatFn a = zero_fn(g, d);
            Matrix mean(d);
            int count = 0;
            for_each_leaf(g, atom.cube, [&](int leaf) {
                a.value(leaf) = random_matrix(d, rng);
                mean += a.value(leaf);
                ++count;
            });
            mean *= 1.0 / static_cast<double>(count);
            for_each_leaf(g, atom.cube, [&](int leaf) { a.value(leaf) -= mean; });
            const double norm = mei_normalization(a, atom.cube, kind == AtomKind::mei_column);
            const double target = std::sqrt(static_cast<double>(g.cubes_at(atom.cube.gen)));
            if (norm > 0.0) a *= target / norm;
            atom.a = std::move(a);
            break;
        }
        case AtomKind::perrin_c:
        case AtomKind::perrin_r: {
            atom.k0 = rng.uniform_int(0, g.depth - 1);
            MatFn e(g, d);
            for (int c = 0; c < g.cubes_at(atom.k0); ++c) {
                const Matrix p = random_projection(d, rng.uniform_int(1, d), rng);
                for_each_leaf(g, cube_from_linear(g, atom.k0, c),
                              [&](int leaf) { e.value(leaf) = p; });
            }
            const double phi_e = phi_trace(e).real();
            if (phi_e <= 0.0) throw std::invalid_argument("make_atom: zero localizing projection");
            MatFn raw = random_fn(g, d, rng);
            raw -= expect(raw, atom.k0);
            MatFn a = kind == AtomKind::perrin_c ? raw * e : e * raw;
            const double l2 = lp_norm(a, 2.0);
            if (l2 > 0.0) a *= 1.0 / (l2 * std::sqrt(phi_e));
            atom.e = std::move(e);
            atom.a = std::move(a);
            break;
        }
        case AtomKind::unit_a1: {
            MatFn a = constant_fn(g, random_matrix(d, rng));
            const double l1 = lp_norm(a, 1.0);
            if (l1 > 0.0) a *= 1.0 / l1;
            atom.a = std::move(a);
            break;
        }
    }
    return atom;
}

AtomCheck verify_atom(const AtomSpec& atom) {
    AtomCheck chk;
    const MatFn& a = atom.a;
    const Grid& g = a.grid();
    switch (atom.kind) {
        case AtomKind::mei_column:
        case AtomKind::mei_row: {
            for (int leaf = 0; leaf < a.leaves(); ++leaf)
                if (!cube_contains(g, atom.cube, cube_from_linear(g, g.depth, leaf)))
                    chk.support_defect = std::max(chk.support_defect, a.value(leaf).max_abs());
            Matrix mean(a.dim());
            for_each_leaf(g, atom.cube, [&](int leaf) { mean += a.value(leaf); });
            chk.mean_defect = (mean * g.leaf_measure()).max_abs();
            const double norm =
                mei_normalization(a, atom.cube, atom.kind == AtomKind::mei_column);
            const double bound = 1.0 / std::sqrt(g.cube_measure(atom.cube.gen));
            chk.norm_slack = bound - norm;
            break;
        }
        case AtomKind::perrin_c:
        case AtomKind::perrin_r: {
            const MatFn localized =
                atom.kind == AtomKind::perrin_c ? a * atom.e : atom.e * a;
            chk.support_defect = max_abs_diff(a, localized);
            chk.mean_defect = expect(a, atom.k0).max_abs();
            const double bound = 1.0 / std::sqrt(phi_trace(atom.e).real());
            chk.norm_slack = bound - lp_norm(a, 2.0);
            break;
        }
        case AtomKind::unit_a1: {
            chk.support_defect = max_abs_diff(a, expect(a, 0));
            chk.norm_slack = 1.0 - lp_norm(a, 1.0);
            break;
        }
    }
    chk.ok = chk.support_defect <= tol::identity && chk.mean_defect <= tol::identity &&
             chk.norm_slack >= -tol::identity;
    return chk;
}

HansenCheck hansen_check(const MatFn& a, const CubeIndex& q) {
    HansenCheck chk;
    Matrix first(a.dim());
    for_each_leaf(a.grid(), q, [&](int leaf) { first += abs_matrix(a.value(leaf)); });
    chk.lhs = (first * a.grid().leaf_measure()).ntrace().real();
    const double vol = a.grid().cube_measure(q.gen);
    chk.rhs = std::sqrt(vol) * trace_norm(sqrt_psd(cube_second_moment(a, q, true)));
    return chk;
}

ProbeReport atom_operator_bound(const OperatorSpec& op, AtomKind kind, const EnsembleSpec& ens) {
    ProbeReport rep;
    rep.name = std::string("atom_operator_bound/") + to_string(kind);
    const Grid g = ens.grid();
    double sup_total = 0.0, sup_hansen_ratio = 0.0, sup_chain_ratio = 0.0;

    for (int i = 0; i < ens.samples; ++i) {
        Rng rng = Rng::for_sample(ens.seed, static_cast<uint64_t>(i));
        const AtomSpec atom = make_atom(kind, g, ens.d, rng);
        const MatFn image = apply_operator(op, atom.a);

        ProbeRecord row;
        row.sample = i;
        row.values["l1_total"] = lp_norm(image, 1.0);
        sup_total = std::max(sup_total, row.values["l1_total"]);

        if (kind == AtomKind::mei_column || kind == AtomKind::mei_row) {
            const CubeIndex twoq = atom.cube.gen > 0 ? parent(atom.cube) : atom.cube;
            MatFn near = zero_fn(g, ens.d);
            for_each_leaf(g, twoq, [&](int leaf) { near.value(leaf) = image.value(leaf); });
            row.values["l1_near"] = lp_norm(near, 1.0);
            row.values["l1_far"] = lp_norm(image - near, 1.0);
            const HansenCheck h = hansen_check(atom.a, atom.cube);
            row.values["hansen_lhs"] = h.lhs;
            row.values["hansen_rhs"] = h.rhs;
            if (h.rhs > 0.0)
                sup_hansen_ratio = std::max(sup_hansen_ratio, h.lhs / h.rhs);
            row.values["atom_l1"] = lp_norm(atom.a, 1.0);
        } else if (kind == AtomKind::perrin_c || kind == AtomKind::perrin_r) {
            const MatFn localized = atom.kind == AtomKind::perrin_c ? image * atom.e
                                                                    : atom.e * image;
            row.values["chain_lhs"] = lp_norm(localized, 1.0);
            row.values["chain_rhs"] = lp_norm(image, 2.0) * lp_norm(atom.e, 2.0);
            if (row.values["chain_rhs"] > 0.0)
                sup_chain_ratio =
                    std::max(sup_chain_ratio, row.values["chain_lhs"] / row.values["chain_rhs"]);
            row.values["localization_defect"] = max_abs_diff(image, localized);
        }
        rep.rows.push_back(std::move(row));
    }
    rep.aggregates["sup_l1_total"] = sup_total;
    rep.aggregates["sup_hansen_ratio"] = sup_hansen_ratio;
    rep.aggregates["sup_chain_ratio"] = sup_chain_ratio;
    return rep;
}

ProbeReport paraproduct_bmo_estimate(const MatFn& rho, const EnsembleSpec& ens) {
    ProbeReport rep;
    rep.name = "paraproduct_bmo_estimate";
    const Grid g = rho.grid();
    const OperatorSpec op = make_paraproduct(rho, Side::column);
    const double rho_bmor = bmo_norms(rho).BMOr;
    const double rho_bmo = bmo_norms(rho).bmo;

    double worst_excess = -1e300;
    double max_h1d_ratio = 0.0;
    for (int i = 0; i < ens.samples; ++i) {
        Rng rng = Rng::for_sample(ens.seed, static_cast<uint64_t>(i));
        const MatFn f = random_hermitian_fn(g, ens.d, rng);
        const MatFn image = mart_paraproduct(op, f);
        const double lhs = bmo_norms(image).BMOr;
        const double rhs = rho_bmor * lp_norm(f, kInfNorm);

        ProbeRecord row;
        row.sample = i;
        row.values["bmor_image"] = lhs;
        row.values["bmor_bound"] = rhs;
        worst_excess = std::max(worst_excess, lhs - rhs);

        // h1d form: || sum_k (rho - rho_k) df_k ||_1 against bmo(rho) h1d(f).
        MatFn sum = zero_fn(g, f.dim());
        for (int k = 1; k <= g.depth; ++k) sum += (rho - expect(rho, k)) * mart_diff(f, k);
        const double h1d = hardy_norms(f).h1d;
        row.values["h1d_form_l1"] = lp_norm(sum, 1.0);
        if (rho_bmo > 0.0 && h1d > 0.0) {
            row.values["h1d_form_ratio"] = row.values["h1d_form_l1"] / (rho_bmo * h1d);
            max_h1d_ratio = std::max(max_h1d_ratio, row.values["h1d_form_ratio"]);
        }
        rep.rows.push_back(std::move(row));
    }
    rep.aggregates["worst_bmor_excess"] = worst_excess;
    rep.aggregates["max_h1d_form_ratio"] = max_h1d_ratio;
    return rep;
}

ProbeReport john_nirenberg_sample(const MatFn& f, int betas_per_level, Rng& rng) {
    ProbeReport rep;
    rep.name = "john_nirenberg_sample";
    const Grid& g = f.grid();
    const double bmo = bmo_norms(f).bmo;
    double max_ratio = 0.0;
    for (int k = 0; k <= g.depth; ++k) {
        const MatFn tail = f - expect(f, k);
        for (int t = 0; t < betas_per_level; ++t) {
            // rank-one beta = u v* on a random generation-k cube, normalized in L1
            MatFn beta = zero_fn(g, f.dim());
            const int c = rng.uniform_int(0, g.cubes_at(k) - 1);
            Matrix uv(f.dim());
            for (int i = 0; i < f.dim(); ++i)
                for (int j = 0; j < f.dim(); ++j) uv.at(i, j) = rng.cgauss();
            for_each_leaf(g, cube_from_linear(g, k, c), [&](int leaf) { beta.value(leaf) = uv; });
            const double l1 = lp_norm(beta, 1.0);
            if (l1 <= 0.0) continue;
            beta *= 1.0 / l1;
            const double val = lp_norm(beta * tail, 1.0);
            ProbeRecord row;
            row.sample = k * betas_per_level + t;
            row.values["beta_tail_l1"] = val;
            if (bmo > 0.0) {
                row.values["ratio"] = val / bmo;
                max_ratio = std::max(max_ratio, row.values["ratio"]);
            }
            rep.rows.push_back(std::move(row));
        }
    }
    rep.aggregates["max_ratio"] = max_ratio;
    rep.aggregates["bmo"] = bmo;
    return rep;
}

}  // namespace ncz
