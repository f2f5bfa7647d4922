#include "ncz/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <thread>

#include "ncz/hardy.hpp"
#include "ncz/probes.hpp"

namespace ncz {

namespace {

constexpr double kTiny = 1e-300;

// Aggregates per-check worst cases across an ensemble. `residual` asserts
// an absolute tolerance; `leq` asserts value <= bound recording the worst
// value/bound ratio; `measured` never fails.
class Checks {
public:
    void residual(const std::string& name, const std::string& anchor, double value, double bound,
                  const std::string& note = "") {
        auto& it = slot(name, anchor, note);
        it.kind = Kind::residual;
        it.rec.value = std::max(it.rec.value, value);
        it.rec.bound = bound;
    }

    void leq(const std::string& name, const std::string& anchor, double value, double bound,
             const std::string& note = "") {
        auto& it = slot(name, anchor, note);
        it.kind = Kind::ratio;
        it.rec.value = std::max(it.rec.value, value / std::max(bound, kTiny));
        it.rec.bound = 1.0;
    }

    void measured(const std::string& name, const std::string& anchor, double value,
                  const std::string& note = "") {
        auto& it = slot(name, anchor, note);
        it.kind = Kind::measured;
        it.rec.value = std::max(it.rec.value, value);
    }

    void fail(const std::string& name, const std::string& note) {
        auto& it = slot(name, "", note);
        it.kind = Kind::hard_fail;
    }

    void merge(const Checks& other) {
        for (const auto& name : other.order_) {
            const Item& o = other.items_.at(name);
            auto& it = slot(name, o.rec.anchor, o.rec.note);
            it.kind = o.kind;
            it.rec.value = std::max(it.rec.value, o.rec.value);
            it.rec.bound = o.rec.bound;
        }
    }

    std::vector<CheckRecord> finish() const {
        std::vector<CheckRecord> out;
        for (const auto& name : order_) {
            const Item& it = items_.at(name);
            CheckRecord rec = it.rec;
            switch (it.kind) {
                case Kind::residual:
                    rec.status = rec.value <= rec.bound ? CheckStatus::pass : CheckStatus::fail;
                    break;
                case Kind::ratio:
                    rec.status = rec.value <= 1.0 + tol::slack ? CheckStatus::pass
                                                               : CheckStatus::fail;
                    break;
                case Kind::measured:
                    rec.status = CheckStatus::measured;
                    break;
                case Kind::hard_fail:
                    rec.status = CheckStatus::fail;
                    break;
            }
            out.push_back(std::move(rec));
        }
        return out;
    }

private:
    enum class Kind { residual, ratio, measured, hard_fail };
    struct Item {
        CheckRecord rec;
        Kind kind = Kind::measured;
    };

    Item& slot(const std::string& name, const std::string& anchor, const std::string& note) {
        auto found = items_.find(name);
        if (found == items_.end()) {
            order_.push_back(name);
            Item it;
            it.rec.name = name;
            it.rec.anchor = anchor;
            it.rec.note = note;
            found = items_.emplace(name, std::move(it)).first;
        }
        return found->second;
    }

    std::vector<std::string> order_;
    std::map<std::string, Item> items_;
};

EnsembleSpec ensemble_from(const Config& cfg) {
    EnsembleSpec e;
    e.samples = cfg.samples;
    e.seed = cfg.seed;
    e.d = cfg.d;
    e.n = cfg.n;
    e.depth = cfg.depth;
    e.pad = cfg.pad;
    e.spikes = cfg.spikes;
    e.spike_scale = cfg.spike_scale;
    return e;
}

int auto_s_max(const Config& cfg, const MatFn& f) {
    if (!cfg.s_max_auto) return cfg.s_max;
    return std::max(lacunary_top_exponent(f), cfg.s_min + 2);
}

int pick_ell(const Config& cfg, int sample) {
    const int span = cfg.ell_max - cfg.ell_min + 1;
    return cfg.ell_min + (sample % span);
}

// Deterministic per-sample ensemble loop with optional thread parallelism;
// results merge in sample order. Exceptions become failing records.
void for_samples(const Config& cfg, Checks& checks,
                 const std::function<void(int, Rng&, Checks&)>& fn) {
    std::vector<Checks> locals(cfg.samples);
    auto run_one = [&](int i) {
        Rng rng = Rng::for_sample(cfg.seed, static_cast<uint64_t>(i));
        try {
            fn(i, rng, locals[i]);
        } catch (const std::exception& e) {
            locals[i].fail("sample_error", std::string("sample ") + std::to_string(i) + ": " +
                                               e.what());
        }
    };
    if (cfg.jobs <= 1) {
        for (int i = 0; i < cfg.samples; ++i) run_one(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < cfg.jobs; ++t)
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < cfg.samples; i = next.fetch_add(1)) run_one(i);
            });
        for (auto& th : pool) th.join();
    }
    for (const auto& local : locals) checks.merge(local);
}

double sup_norm(const MatFn& f) { return lp_norm(f, kInfNorm); }

double max_leafwise_leq_defect(const MatFn& a, const MatFn& b) {
    double m = 0.0;
    for (int leaf = 0; leaf < a.leaves(); ++leaf)
        m = std::max(m, proj_leq_defect(a.value(leaf), b.value(leaf)));
    return m;
}

OperatorSpec operator_from_config(const Config& cfg) {
    if (!cfg.op_file.empty()) {
        std::ifstream is(cfg.op_file);
        if (!is) throw std::invalid_argument("cannot read operator file " + cfg.op_file);
        std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        return read_opspec(text);
    }
    const Grid g(cfg.n, cfg.depth, 0);
    const Side side = side_from_string(cfg.op_side);
    Rng rng(cfg.seed ^ 0x0faceb00cULL);
    if (cfg.op_kind == "haar_multiplier")
        return make_haar_multiplier(g, random_adapted_sequence(g, cfg.d, rng), side);
    if (cfg.op_kind == "martingale_transform")
        return make_martingale_transform(g, random_adapted_sequence(g, cfg.d, rng), side);
    if (cfg.op_kind == "paraproduct")
        return make_paraproduct(random_hermitian_fn(g, cfg.d, rng), side, false);
    if (cfg.op_kind == "paraproduct_adjoint")
        return make_paraproduct(random_hermitian_fn(g, cfg.d, rng), side, true);
    if (cfg.op_kind == "haar_shift")
        return random_normalized_shift(g, cfg.d, cfg.shift_r, cfg.shift_s, side, rng);
    if (cfg.op_kind == "dyadic_hilbert") return dyadic_hilbert_spec(g, cfg.d, side, true);
    throw std::invalid_argument("config: unknown operator.kind " + cfg.op_kind);
}

// ---------------------------------------------------------------------------

void ex_cuculescu_bounds(const Config& cfg, Checks& checks) {
    for_samples(cfg, checks, [&](int, Rng& rng, Checks& out) {
        const EnsembleSpec ens = ensemble_from(cfg);
        const MatFn f = random_positive_fn(ens, rng);
        const MatFn one = identity_fn(f.grid(), f.dim());
        const double l1 = lp_norm(f, 1.0);
        for (int ell = cfg.ell_min; ell <= cfg.ell_max; ++ell) {
            const double lambda = std::ldexp(1.0, ell);
            const CuculescuSeq seq = cuculescu_run(f, lambda);
            const int K = f.grid().depth;

            double dec = 0.0, comm = 0.0, compress = 0.0, disjoint = 0.0;
            for (int k = 0; k <= K; ++k) {
                const MatFn& qk = seq.q[k];
                const MatFn& qprev = k == 0 ? one : seq.q[k - 1];
                dec = std::max(dec, max_leafwise_leq_defect(qk, qprev));
                const MatFn m = qprev * expect(f, k) * qprev;
                comm = std::max(comm, max_abs_diff(qk * m, m * qk));
                for (int leaf = 0; leaf < f.leaves(); ++leaf) {
                    Matrix slack = qk.value(leaf) * lambda - qk.value(leaf) *
                                       expect(f, k).value(leaf) * qk.value(leaf);
                    slack.hermitize();
                    compress = std::max(compress, std::max(0.0, -min_eig_herm(slack)));
                }
                for (int j = 0; j < k; ++j)
                    disjoint = std::max(disjoint, (seq.p[j] * seq.p[k]).max_abs());
            }
            MatFn psum = zero_fn(f.grid(), f.dim());
            for (const auto& p : seq.p) psum += p;
            out.residual("q_decreasing", "q_k <= q_{k-1}", dec, tol::identity);
            out.residual("q_commutes", "[q_k, q_{k-1} f_k q_{k-1}] = 0", comm, tol::identity);
            out.residual("q_compression", "q_k f_k q_k <= lambda q_k", compress, tol::identity);
            out.residual("p_disjoint", "p_i p_j = 0 (i != j)", disjoint, tol::identity);
            out.residual("p_sum", "sum p_k = 1 - q", max_abs_diff(psum, one - seq.terminal()),
                         tol::identity);
            out.leq("weak_bound", "phi(1-q) <= ||f||_1 / lambda",
                    phi_trace(one - seq.terminal()).real(), l1 / lambda);
        }
    });
}

void ex_cz_identities(const Config& cfg, Checks& checks) {
    for_samples(cfg, checks, [&](int, Rng& rng, Checks& out) {
        const EnsembleSpec ens = ensemble_from(cfg);
        const MatFn f = random_positive_fn(ens, rng);
        const double l1 = lp_norm(f, 1.0);
        const double f0_norm = op_norm(expect(f, 0).value(0));
        int ell_top = cfg.ell_max;
        while (std::ldexp(1.0, ell_top) < f0_norm) ++ell_top;

        for (int ell = cfg.ell_min; ell <= ell_top; ++ell) {
            const double lambda = std::ldexp(1.0, ell);
            const CuculescuSeq seq = cuculescu_run(f, lambda);
            const CZParts parts = cz_decompose(f, seq);

            out.residual("cz_sum", "f = g_d + g_off + b_d + b_off",
                         max_abs_diff(f, parts.g_d + parts.b_d + parts.b_off + parts.g_off),
                         tol::identity_tight);
            out.residual("goff_series", "g_off = sum_{k,s} g_{k,s}",
                         max_abs_diff(parts.g_off, cz_series_sum(f, seq)), tol::delta);
            const DeltaFormulasReport dr = delta_formulas_check(f, seq, parts);
            out.residual("delta_bd", "Delta_k(b_d) = sum_{j<k} p_j df_k p_j", dr.max_bd,
                         tol::delta);
            out.residual("delta_goff",
                         "Delta_k(g_off) = (1-q_{k-1}) df_k q_{k-1} + q_{k-1} df_k (1-q_{k-1})",
                         dr.max_goff, tol::delta);
            out.residual("q_sandwich", "q_{k-1} Delta_k(gamma) q_{k-1} = 0", dr.max_qsandwich,
                         tol::delta);

            double bad_diag = 0.0;
            for (int k = 0; k <= f.grid().depth; ++k)
                bad_diag += lp_norm(seq.p[k] * (f - expect(f, k)) * seq.p[k], 1.0);
            out.leq("diag_l1", "sum_k ||p_k (f - f_k) p_k||_1 <= 2 ||f||_1", bad_diag, 2.0 * l1);

            if (lambda >= f0_norm) {
                const double g2 = lp_norm(parts.g_d, 2.0);
                out.leq("diag_l2", "||g_d||_2^2 <= 2^n lambda ||f||_1", g2 * g2,
                        std::ldexp(1.0, cfg.n) * lambda * l1,
                        "evaluated at thresholds with f_0 <= lambda");
            }
        }
    });
}

void ex_lacunary_identities(const Config& cfg, Checks& checks) {
    for_samples(cfg, checks, [&](int, Rng& rng, Checks& out) {
        const EnsembleSpec ens = ensemble_from(cfg);
        const MatFn f = random_positive_fn(ens, rng);
        const int s_max = auto_s_max(cfg, f);
        const LacunaryFamily fam = lacunary_build(f, cfg.s_min, s_max);
        const Grid& g = f.grid();
        const int K = g.depth;
        const MatFn one = identity_fn(g, f.dim());
        const double sup_f = sup_norm(f);

        double partition = 0.0, ortho = 0.0, proj_def = 0.0, nest = 0.0;
        for (int k = 0; k <= K; ++k) {
            MatFn sum = fam.psi(k);
            for (int j = cfg.s_min + 1; j <= s_max; ++j) {
                const MatFn& pi = fam.pi(j, k);
                sum += pi;
                for (int leaf = 0; leaf < f.leaves(); ++leaf)
                    proj_def = std::max(proj_def, projection_defect(pi.value(leaf)));
                for (int j2 = j + 1; j2 <= s_max; ++j2)
                    ortho = std::max(ortho, (pi * fam.pi(j2, k)).max_abs());
            }
            partition = std::max(partition, max_abs_diff(sum, one));
            for (int j = cfg.s_min; j <= s_max; ++j) {
                nest = std::max(nest, max_leafwise_leq_defect(fam.meet_from(j, k),
                                                              fam.meet_from(j + 1, k)));
                if (k > 0)
                    nest = std::max(nest, max_leafwise_leq_defect(fam.meet_from(j, k),
                                                                  fam.meet_from(j, k - 1)));
            }
        }
        out.residual("pi_partition", "sum_j pi_{j,k} + psi_k = 1", partition, tol::identity);
        out.residual("pi_orthogonal", "pi_{j,k} pi_{j',k} = 0 (j != j')", ortho, tol::identity);
        out.residual("pi_projection", "pi_{j,k} idempotent Hermitian", proj_def, tol::identity);
        out.residual("meet_nesting", "meets increase in j, decrease in k", nest, tol::order);

        double psi_ratio = 0.0, utlt = 0.0, contraction = 0.0;
        const double psi_bound = std::ldexp(1.0, 1) * std::pow(2.0, 0.5 * cfg.s_min) *
                                 std::sqrt(sup_f);
        for (int k = 1; k <= K; ++k) {
            const MatFn df = mart_diff(f, k);
            psi_ratio = std::max(psi_ratio, sup_norm(fam.psi(k) * df) / std::max(psi_bound, kTiny));
            const MatFn ut = triangular_truncate(df, fam, k - 1, TrianglePart::upper);
            const MatFn lt = triangular_truncate(df, fam, k - 1, TrianglePart::lower);
            const MatFn proj = (one - fam.psi(k - 1)) * df * (one - fam.psi(k - 1));
            utlt = std::max(utlt, max_abs_diff(ut + lt, proj));
            const double df2 = lp_norm(df, 2.0);
            if (df2 > 0.0) contraction = std::max(contraction, lp_norm(ut, 2.0) / df2);
        }
        out.leq("psi_annihilation", "||psi_k df_k|| <= 2^{1+s_min/2} ||f||^{1/2}", psi_ratio, 1.0);
        out.residual("ut_plus_lt", "UT + LT = (1-psi) x (1-psi)", utlt, tol::identity);
        out.leq("ut_contraction", "||UT(x)||_2 <= ||x||_2", contraction, 1.0);

        double keys_qhat = 0.0, keys_p = 0.0;
        for (int ell = cfg.s_min + 1; ell <= s_max; ++ell) {
            const KeyIdentityReport kr = key_identity_check(fam, qhat_build(fam, ell));
            keys_qhat = std::max(keys_qhat, kr.max_qhat_pi);
            keys_p = std::max(keys_p, kr.max_pi_p);
        }
        out.residual("key_qhat_pi", "qhat_{k-1} pi_{i,k-1} = 0 (i > ell)", keys_qhat,
                     tol::identity);
        out.residual("key_pi_p", "pi_{i,k-1} p_{k-s} = 0 (s >= 1, i <= ell)", keys_p,
                     tol::identity);

        const RowColSplit split = row_col_split(f, fam);
        out.residual("split_exact", "f = f_r + f_c + residual",
                     max_abs_diff(f, split.f_r + split.f_c + split.residual), 1e-12);
        const double psi_budget = (K + 1) * psi_bound + op_norm(expect(f, 0).value(0));
        out.leq("split_residual",
                "||residual||_inf <= (K+1) 2^{1+s_min/2} ||f||^{1/2} + ||f_0||", sup_norm(split.residual),
                psi_budget);
        if (cfg.d == 1)
            out.residual("scalar_fr_zero", "d = 1 collapses LT to zero", sup_norm(split.f_r),
                         tol::identity_tight);
    });
}

void ex_perfect_dyadic_annihilation(const Config& cfg, Checks& checks) {
    for_samples(cfg, checks, [&](int i, Rng& rng, Checks& out) {
        const EnsembleSpec ens = ensemble_from(cfg);
        const MatFn f = random_positive_fn(ens, rng);
        const Grid& g = f.grid();
        const int s_max = auto_s_max(cfg, f);
        const int ell = std::clamp(pick_ell(cfg, i), cfg.s_min + 1, s_max);
        const AnnihilationContext ctx = make_annihilation_context(f, ell, cfg.s_min, s_max);

        const OperatorSpec hx =
            make_haar_multiplier(g, random_adapted_sequence(g, cfg.d, rng), Side::column);
        const MatFn rho = random_hermitian_fn(g, cfg.d, rng);
        const OperatorSpec pi_c = make_paraproduct(rho, Side::column, false);
        const OperatorSpec pi_adj = make_paraproduct(rho, Side::column, true);

        for (const OperatorSpec* op : {&hx, &pi_c, &pi_adj}) {
            const AnnihilationReport rep = annihilation_check(*op, f, ctx);
            out.residual("cz_sum", "f = g_d + g_off + b_d + b_off", rep.cz_sum_defect,
                         tol::identity_tight);
            out.residual("goff_series", "g_off = sum_{k,s} g_{k,s}", rep.series_defect, tol::delta);
            out.residual("ut_qhat", "UT_{k-1}(Delta_k gamma) qhat_{k-1} = 0", rep.max_ut_qhat,
                         tol::identity);
            out.residual("tc_gamma_qhat", "T_c(gamma^c) qhat = 0", rep.max_perfect_dyadic,
                         tol::identity);
        }

        // Dual-path agreement on the sample itself.
        double dual = 0.0;
        dual = std::max(dual, max_abs_diff(apply_perfect_dyadic(hx, f),
                                           apply_perfect_dyadic_kernel(hx, f)));
        dual = std::max(dual, max_abs_diff(apply_perfect_dyadic(pi_c, f),
                                           apply_perfect_dyadic_kernel(pi_c, f)));
        dual = std::max(dual, max_abs_diff(apply_perfect_dyadic(pi_adj, f),
                                           apply_perfect_dyadic_kernel(pi_adj, f)));
        out.residual("kernel_vs_martingale", "kernel-sum and martingale paths agree", dual,
                     tol::identity_tight);
    });
}

// Dense-kernel application of a shift table; an independent route for the
// dual-path criterion.
MatFn dense_shift_oracle(const OperatorSpec& spec, const MatFn& f) {
    const Grid& g = f.grid();
    std::vector<Matrix> kernel(static_cast<size_t>(g.leaf_count()) * g.leaf_count(),
                               Matrix(f.dim()));
    for (const auto& c : spec.shift) {
        for_each_leaf(g, c.r_cube, [&](int x) {
            const double hr = haar_value(g, HaarIndex{c.r_cube, c.eps_r}, x);
            if (hr == 0.0) return;
            for_each_leaf(g, c.s_cube, [&](int y) {
                const double hs = haar_value(g, HaarIndex{c.s_cube, c.eps_s}, y);
                if (hs != 0.0)
                    kernel[static_cast<size_t>(x) * g.leaf_count() + y] += c.alpha * (hr * hs);
            });
        });
    }
    const double w = g.leaf_measure();
    MatFn out(g, f.dim());
    for (int x = 0; x < g.leaf_count(); ++x) {
        Matrix acc(f.dim());
        for (int y = 0; y < g.leaf_count(); ++y) {
            const Matrix& kv = kernel[static_cast<size_t>(x) * g.leaf_count() + y];
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

void ex_haar_shift_annihilation(const Config& cfg, Checks& checks) {
    for_samples(cfg, checks, [&](int i, Rng& rng, Checks& out) {
        const EnsembleSpec ens = ensemble_from(cfg);
        const MatFn f = random_positive_fn(ens, rng);
        const Grid& g = f.grid();
        const int s_max = auto_s_max(cfg, f);
        const int ell = std::clamp(pick_ell(cfg, i), cfg.s_min + 1, s_max);
        const AnnihilationContext ctx = make_annihilation_context(f, ell, cfg.s_min, s_max);

        std::vector<OperatorSpec> ops;
        ops.push_back(
            random_normalized_shift(g, cfg.d, cfg.shift_r, cfg.shift_s, Side::column, rng));
        if (g.n == 1 && g.depth >= 2) ops.push_back(dyadic_hilbert_spec(g, cfg.d, Side::column));

        for (const auto& op : ops) {
            const AnnihilationReport rep = annihilation_check(op, f, ctx);
            out.residual("shift_c_zero", "C_gamma = 0", rep.max_shift_c, tol::identity_tight);
            out.residual("shift_a_qhat", "A_gamma qhat = 0", rep.max_shift_a, tol::identity);
            out.residual("shift_b_zeta", "B_gamma zeta = 0", rep.max_shift_b, tol::identity);
            out.residual("ut_qhat", "UT_{k-1}(Delta_k gamma) qhat_{k-1} = 0", rep.max_ut_qhat,
                         tol::identity);
            out.residual("shift_vs_dense_kernel", "table application = dense kernel oracle",
                         max_abs_diff(apply_haar_shift(op, f), dense_shift_oracle(op, f)),
                         tol::identity_tight);
        }
    });
}

void ex_shift_l2(const Config& cfg, Checks& checks) {
    for_samples(cfg, checks, [&](int, Rng& rng, Checks& out) {
        const Grid g(cfg.n, cfg.depth, cfg.pad);
        const MatFn f = random_hermitian_fn(g, cfg.d, rng);
        const double f2 = lp_norm(f, 2.0);
        if (f2 <= 0.0) return;

        for (int r = 0; r <= 1; ++r)
            for (int s = 0; s <= 1; ++s) {
                if (g.depth - 1 - std::max(r, s) < 0) continue;
                const OperatorSpec shift =
                    random_normalized_shift(g, cfg.d, r, s, Side::column, rng);
                out.leq("shift_l2_contraction", "||Sha f||_2 <= ||f||_2 (normalized table)",
                        lp_norm(apply_haar_shift(shift, f), 2.0), f2);
                out.residual("shift_normalized", "||alpha|| <= sqrt(|R||S|)/|Q|",
                             std::max(0.0, shift_overshoot(shift) - 1.0), tol::slack);
            }

        if (g.n == 1 && g.depth >= 2) {
            const OperatorSpec dht = dyadic_hilbert_spec(g, cfg.d, Side::column, false);
            out.residual("hilbert_overshoot", "coefficient overshoot = sqrt(2)",
                         std::abs(shift_overshoot(dht) - std::sqrt(2.0)), tol::slack);
            out.leq("hilbert_l2", "||DHT f||_2 <= sqrt(2) ||f||_2",
                    lp_norm(apply_haar_shift(dht, f), 2.0), std::sqrt(2.0) * f2);
            const OperatorSpec dht_n = dyadic_hilbert_spec(g, cfg.d, Side::column, true);
            out.leq("hilbert_l2_normalized", "||DHT_n f||_2 <= ||f||_2",
                    lp_norm(apply_haar_shift(dht_n, f), 2.0), f2);
        }
    });
}

void ex_dilation_lemma(const Config& cfg, Checks& checks) {
    for_samples(cfg, checks, [&](int i, Rng& rng, Checks& out) {
        const EnsembleSpec ens = ensemble_from(cfg);
        const MatFn f = random_positive_fn(ens, rng);
        const Grid& g = f.grid();
        const int K = g.depth;
        const double l1 = lp_norm(f, 1.0);
        const int s_max = auto_s_max(cfg, f);
        const int ell = std::clamp(pick_ell(cfg, i), cfg.s_min + 1, s_max);
        const double lambda = std::ldexp(1.0, ell);
        const LacunaryFamily fam = lacunary_build(f, cfg.s_min, s_max);
        const QhatFamily qf = qhat_build(fam, ell);
        const MatFn one = identity_fn(g, f.dim());

        out.leq("qhat_bound", "lambda phi(1-qhat) <= 2 ||f||_1",
                lambda * phi_trace(one - qf.qhat).real(), 2.0 * l1);
        double qhat_nest = 0.0;
        for (int k = 0; k <= K; ++k)
            qhat_nest = std::max(qhat_nest, max_leafwise_leq_defect(qf.qhat, qf.qhat_k[k]));
        out.residual("qhat_nested", "qhat <= qhat_k", qhat_nest, tol::order);

        for (int s = 0; s <= 2; ++s) {
            const ZetaFamily zf = zeta_build(qf, g, s);
            out.leq("zeta_bound", "lambda phi(1-zeta) <= 2^{sn+1} ||f||_1",
                    lambda * phi_trace(one - zf.zeta).real(),
                    std::ldexp(2.0, s * cfg.n) * l1);
            if (s == 0)
                out.residual("zeta_s0", "s = 0 gives zeta = qhat",
                             max_abs_diff(zf.zeta, qf.qhat), tol::identity);

            double ordering = 0.0;
            for (int k0 = 0; k0 <= K; ++k0) {
                for (int c = 0; c < g.cubes_at(k0); ++c) {
                    const CubeIndex q0 = cube_from_linear(g, k0, c);
                    const CubeIndex dil = ancestor(q0, s);
                    int y0 = -1;
                    for_each_leaf(g, q0, [&](int leaf) { if (y0 < 0) y0 = leaf; });
                    const Matrix& qv = qf.qhat_k[k0].value(y0);
                    for_each_leaf(g, dil, [&](int x) {
                        ordering = std::max(ordering,
                                            proj_leq_defect(zf.zeta.value(x), qv));
                    });
                }
            }
            out.residual("zeta_ordering", "zeta(x) <= qhat_{k0}(y) on dilated cubes", ordering,
                         tol::order);

            double rho_ortho = 0.0;
            for (size_t a = 0; a < zf.rho.size(); ++a)
                for (size_t b = 0; b < zf.rho.size(); ++b) {
                    if (a == b) continue;
                    const auto& [qa, ra] = zf.rho[a];
                    const auto& [qb, rb] = zf.rho[b];
                    if (qa.gen > qb.gen && cube_contains(g, qb, qa))
                        rho_ortho = std::max(rho_ortho, (ra * rb).max_abs());
                }
            out.residual("rho_orthogonal", "nested rho_Q are orthogonal", rho_ortho,
                         tol::identity);
        }
    });
}

void ex_atom_bounds(const Config& cfg, Checks& checks) {
    const Grid g(cfg.n, cfg.depth, cfg.pad);
    Rng oprng(cfg.seed ^ 0xa70b0a7ULL);
    const OperatorSpec mxi =
        make_martingale_transform(g, random_adapted_sequence(g, cfg.d, oprng), Side::column);
    const OperatorSpec pirho =
        make_paraproduct(random_hermitian_fn(g, cfg.d, oprng), Side::column);

    for_samples(cfg, checks, [&](int, Rng& rng, Checks& out) {
        for (AtomKind kind : {AtomKind::mei_column, AtomKind::mei_row, AtomKind::perrin_c,
                              AtomKind::perrin_r, AtomKind::unit_a1}) {
            const AtomSpec atom = make_atom(kind, g, cfg.d, rng);
            const AtomCheck chk = verify_atom(atom);
            const std::string base = to_string(kind);
            out.residual(base + "/support", "support and mean constraints",
                         std::max(chk.support_defect, chk.mean_defect), tol::identity);
            out.residual(base + "/normalization", "norm within its bound",
                         std::max(0.0, -chk.norm_slack), tol::identity);
            if (kind == AtomKind::mei_column || kind == AtomKind::mei_row) {
                const HansenCheck h = hansen_check(atom.a, atom.cube);
                out.leq("hansen", "tau int|a| <= sqrt(|Q|) tau[(int |a|^2)^{1/2}]", h.lhs,
                        h.rhs);
                out.leq("mei_atom_l1", "||a||_1 <= 1", lp_norm(atom.a, 1.0), 1.0);
            }
            if (kind == AtomKind::perrin_c) {
                for (const OperatorSpec* op : {&mxi, &pirho}) {
                    const MatFn image = apply_operator(*op, atom.a);
                    const double chain_rhs = lp_norm(image, 2.0) * lp_norm(atom.e, 2.0);
                    out.leq("perrin_chain", "||T(a) e||_1 <= ||T(a)||_2 ||e||_2",
                            lp_norm(image * atom.e, 1.0), std::max(chain_rhs, kTiny));
                    out.residual("perrin_localized", "T(a) = T(a) e",
                                 max_abs_diff(image, image * atom.e), tol::identity);
                }
                out.leq("transform_atom_uniform", "||M(a)||_1 <= sup||xi||",
                        lp_norm(apply_operator(mxi, atom.a), 1.0), 1.0);
            }
        }
    });
}

void ex_transform_paraproduct(const Config& cfg, Checks& checks) {
    for_samples(cfg, checks, [&](int, Rng& rng, Checks& out) {
        const Grid g(cfg.n, cfg.depth, cfg.pad);
        const auto xi = random_adapted_sequence(g, cfg.d, rng);
        const MatFn rho = random_hermitian_fn(g, cfg.d, rng);
        const MatFn f = random_fn(g, cfg.d, rng);
        const MatFn h = random_fn(g, cfg.d, rng);

        const OperatorSpec mcol = make_martingale_transform(g, xi, Side::column);
        const OperatorSpec mrow = mcol.with_side(Side::row);
        const OperatorSpec pcol = make_paraproduct(rho, Side::column);
        const OperatorSpec padj = make_paraproduct(rho, Side::column, true);

        double sup_xi = 0.0;
        for (const auto& level : xi) sup_xi = std::max(sup_xi, sup_norm(level));
        out.leq("transform_l2", "||M_xi f||_2 <= sup||xi_k|| ||f||_2",
                lp_norm(martingale_transform(mcol, f), 2.0), sup_xi * lp_norm(f, 2.0));

        const cplx lhs = l2_inner(mart_paraproduct(pcol, f), h);
        const cplx rhs = l2_inner(f, paraproduct_adjoint(padj, h));
        out.residual("paraproduct_duality", "<Pi f, g> = <f, Pi* g>", std::abs(lhs - rhs),
                     tol::identity_tight);

        double dual = 0.0;
        const OperatorSpec hm = make_haar_multiplier(g, xi, Side::column);
        dual = std::max(dual, max_abs_diff(apply_perfect_dyadic(hm, f),
                                           apply_perfect_dyadic_kernel(hm, f)));
        dual = std::max(dual, max_abs_diff(apply_perfect_dyadic(pcol, f),
                                           apply_perfect_dyadic_kernel(pcol, f)));
        dual = std::max(dual, max_abs_diff(apply_perfect_dyadic(padj, f),
                                           apply_perfect_dyadic_kernel(padj, f)));
        out.residual("kernel_vs_martingale", "kernel-sum and martingale paths agree", dual,
                     tol::identity_tight);

        // Adjoint side symmetry: conjugating inputs and swapping sides.
        std::vector<MatFn> xistar;
        for (const auto& level : xi) xistar.push_back(level.adjoint());
        const OperatorSpec mcol_star = make_martingale_transform(g, xistar, Side::column);
        out.residual("side_symmetry", "M^r_xi(f*) = (M^c_{xi*} f)*",
                     max_abs_diff(martingale_transform(mrow, f.adjoint()),
                                  martingale_transform(mcol_star, f).adjoint()),
                     tol::identity_tight);

        if (cfg.d >= 2)
            out.measured("row_col_gap", "||M^c f - M^r f||_inf (noncommuting witness)",
                         sup_norm(martingale_transform(mcol, f) -
                                  martingale_transform(mrow, f)));
    });
}

void ex_bmo_estimates(const Config& cfg, Checks& checks) {
    for_samples(cfg, checks, [&](int, Rng& rng, Checks& out) {
        const Grid g(cfg.n, cfg.depth, cfg.pad);
        const MatFn rho = random_hermitian_fn(g, cfg.d, rng);
        const MatFn f = random_hermitian_fn(g, cfg.d, rng);
        const OperatorSpec pcol = make_paraproduct(rho, Side::column);

        const double rho_bmor = bmo_norms(rho).BMOr;
        const MatFn image = mart_paraproduct(pcol, f);
        out.leq("paraproduct_bmor", "||Pi_rho^c f||_BMOr <= ||rho||_BMOr ||f||_inf",
                bmo_norms(image).BMOr, rho_bmor * sup_norm(f));

        const double ps[] = {2.0};
        const NormReport hn = hardy_norms(f, ps);
        out.residual("h2_parseval", "H2c = ||f - f_0||_2",
                     std::abs(hn.Hp_c.at(2.0) - lp_norm(f - expect(f, 0), 2.0)),
                     tol::identity_tight);
        out.leq("h1d_dominates", "||f - f_0||_1 <= h1d", lp_norm(f - expect(f, 0), 1.0),
                std::max(hn.h1d, kTiny));
        const NormReport bn = bmo_norms(f);
        out.leq("bmo_le_2linf", "BMOc <= 2 ||f||_inf", bn.BMOc, 2.0 * sup_norm(f));

        const NormReport hn_star = hardy_norms(f.adjoint());
        const NormReport bn_star = bmo_norms(f.adjoint());
        out.residual("norm_symmetry", "row norms of f equal column norms of f*",
                     std::max(std::abs(hn.H1r - hn_star.H1c), std::abs(bn.BMOr - bn_star.BMOc)),
                     1e-12);

        // h1d form of the paraproduct bound, constant recorded only.
        MatFn sum = zero_fn(g, cfg.d);
        for (int k = 1; k <= g.depth; ++k) sum += (rho - expect(rho, k)) * mart_diff(f, k);
        const double denom = bn.bmo * hn.h1d;
        if (denom > 0.0)
            out.measured("h1d_form_ratio", "||sum (rho-rho_k) df_k||_1 / (bmo(rho) h1d(f))",
                         lp_norm(sum, 1.0) / denom);

        Rng jn_rng = rng;
        const ProbeReport jn = john_nirenberg_sample(f, 4, jn_rng);
        out.leq("john_nirenberg_sampled", "||beta (f - f_k)||_1 <= bmo(f) for ||beta||_1 <= 1",
                jn.aggregate_max("max_ratio"), 1.0);
    });
}

void ex_gundy(const Config& cfg, Checks& checks) {
    for_samples(cfg, checks, [&](int, Rng& rng, Checks& out) {
        const EnsembleSpec ens = ensemble_from(cfg);
        const MatFn f = random_positive_fn(ens, rng);
        for (int ell = cfg.ell_min; ell <= cfg.ell_max; ++ell) {
            const double lambda = std::ldexp(1.0, ell);
            const GundyParts parts = gundy_decompose(f, lambda);
            const GundyEstimates est = gundy_estimates(f, lambda, parts);
            out.residual("gundy_sum", "d_alpha + d_beta + d_gamma = df_k", est.sum_defect,
                         tol::identity_tight);
            out.measured("gundy_alpha_ratio", "(1/lambda)||alpha||_2^2 / ||f||_1",
                         est.alpha_ratio);
            out.measured("gundy_beta_ratio", "sum||d_beta_k||_1 / ||f||_1", est.beta_ratio);
            out.measured("gundy_gamma_ratio", "lambda phi(join supp* d_gamma_k) / ||f||_1",
                         est.gamma_ratio);
        }
    });
}

void ex_leftright_cz(const Config& cfg, Checks& checks) {
    for_samples(cfg, checks, [&](int i, Rng& rng, Checks& out) {
        const EnsembleSpec ens = ensemble_from(cfg);
        const MatFn f = random_positive_fn(ens, rng);
        const int s_max = auto_s_max(cfg, f);
        const int ell = std::clamp(pick_ell(cfg, i), cfg.s_min + 1, s_max);
        const LacunaryFamily fam = lacunary_build(f, cfg.s_min, s_max);
        const RowColSplit split = row_col_split(f, fam);
        const LeftRightCZ lr = leftright_cz(f, fam, ell);
        out.residual("leftright_sum", "g_r + b_r = f_r and g_c + b_c = f_c",
                     std::max(max_abs_diff(lr.g_r + lr.b_r, split.f_r),
                              max_abs_diff(lr.g_c + lr.b_c, split.f_c)),
                     tol::identity_tight);
        out.measured("good_r_ratio", "||g_r||_2^2 / (lambda ||f||_1)", lr.good_r_ratio);
        out.measured("good_c_ratio", "||g_c||_2^2 / (lambda ||f||_1)", lr.good_c_ratio);
        out.measured("bad_l1_ratio",
                     "sum_k (||phat_k(f_r - E_k f_r)||_1 + ||(f_c - E_k f_c) phat_k||_1) / ||f||_1",
                     lr.bad_l1_ratio);
    });
}

void ex_truncation_probe(const Config& cfg, Checks& checks) {
    TruncationProbeParams params;
    params.s_min = cfg.s_min;
    params.ledger_path = cfg.ledger_path;
    const ProbeReport rep = truncation_probe(ensemble_from(cfg), params);
    checks.measured("truncation_R1", "||sum a_k Tr_k(b_k)||_1 / sum ||a_k b_k||_1",
                    rep.aggregate_max("max_R1"));
    checks.measured("truncation_R2", "||sum a_k Tr_k(b_k)||_1 / (sup||a_k|| sum||b_k||_1)",
                    rep.aggregate_max("max_R2"));
    checks.measured("truncation_skipped", "samples skipped for zero denominators",
                    rep.aggregate_max("skipped"));
}

void ex_weak_type_scan(const Config& cfg, Checks& checks) {
    const OperatorSpec op = operator_from_config(cfg);
    WeakTypeParams params;
    params.s_min = cfg.s_min;
    params.ell_min = cfg.ell_min;
    params.ell_max = cfg.ell_max;
    params.jobs = cfg.jobs;
    const WeakTypeScanReport rep = weak_type_scan(op, ensemble_from(cfg), params);
    checks.leq("weak_type_ceiling", "sup_lambda weak ratios below the configured ceiling",
               rep.max_ratio, cfg.ceiling, "sanity ceiling, not an asserted constant");
    checks.measured("weak_type_max_ratio",
                    "sup_lambda [lambda phi{|T_r f_r|>lambda} + lambda phi{|T_c f_c|>lambda}] / ||f||_1",
                    rep.max_ratio);
    double psi_l1 = 0.0, psi_tail = 0.0;
    for (const auto& s : rep.samples) {
        psi_l1 = std::max(psi_l1, s.psi_l1);
        psi_tail = std::max(psi_tail, s.psi_tail_ratio);
    }
    checks.measured("split_residual_l1", "||residual||_1 over the ensemble", psi_l1);
    checks.measured("split_residual_tail", "worst residual tail ratio", psi_tail);
    checks.measured("weak_type_skipped", "samples skipped for ||f||_1 = 0",
                    static_cast<double>(rep.skipped));
}

}  // namespace

ExperimentResult run_experiment(const Config& cfg) {
    validate_config(cfg);
    if (cfg.experiment.empty())
        throw std::invalid_argument("run_experiment: no experiment selected");

    using Fn = void (*)(const Config&, Checks&);
    static const std::map<std::string, Fn> catalog = {
        {"cuculescu_bounds", ex_cuculescu_bounds},
        {"cz_identities", ex_cz_identities},
        {"lacunary_identities", ex_lacunary_identities},
        {"perfect_dyadic_annihilation", ex_perfect_dyadic_annihilation},
        {"haar_shift_annihilation", ex_haar_shift_annihilation},
        {"shift_l2", ex_shift_l2},
        {"dilation_lemma", ex_dilation_lemma},
        {"atom_bounds", ex_atom_bounds},
        {"transform_paraproduct", ex_transform_paraproduct},
        {"bmo_estimates", ex_bmo_estimates},
        {"gundy", ex_gundy},
        {"leftright_cz", ex_leftright_cz},
        {"truncation_probe", ex_truncation_probe},
        {"weak_type_scan", ex_weak_type_scan},
    };

    const auto it = catalog.find(cfg.experiment);
    if (it == catalog.end())
        throw std::invalid_argument("run_experiment: unknown experiment " + cfg.experiment);

    ExperimentResult result;
    result.config = cfg;
    const auto t0 = std::chrono::steady_clock::now();
    Checks checks;
    it->second(cfg, checks);
    result.checks = checks.finish();
    result.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace ncz
