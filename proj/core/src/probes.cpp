#include "ncz/probes.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ncz {

GundyParts gundy_decompose(const MatFn& f, double lambda) {
    const CuculescuSeq seq = cuculescu_run(f, lambda);
    const Grid& g = f.grid();
    const int K = g.depth;

    GundyParts parts;
    parts.alpha = zero_fn(g, f.dim());
    parts.beta = zero_fn(g, f.dim());
    parts.gamma = zero_fn(g, f.dim());
    for (int k = 1; k <= K; ++k) {
        const MatFn df = mart_diff(f, k);
        const MatFn inner = seq.q[k] * df * seq.q[k];
        const MatFn outer = seq.q[k - 1] * df * seq.q[k - 1];
        const MatFn comp = expect(inner, k - 1);
        parts.d_alpha.push_back(inner - comp);
        parts.d_beta.push_back(outer - inner + comp);
        parts.d_gamma.push_back(df - outer);
        parts.alpha += parts.d_alpha.back();
        parts.beta += parts.d_beta.back();
        parts.gamma += parts.d_gamma.back();
    }
    return parts;
}

Matrix star_support(const Matrix& a) {
    const double scale = op_norm(a);
    if (scale <= 0.0) return Matrix(a.dim());
    const double cut = 1e-9 * scale;
    const Matrix left = spectral_proj(a * a.adjoint(), Interval::above(cut * cut), 0.0);
    const Matrix right = spectral_proj(a.adjoint() * a, Interval::above(cut * cut), 0.0);
    return proj_join(left, right);
}

GundyEstimates gundy_estimates(const MatFn& f, double lambda, const GundyParts& parts) {
    GundyEstimates est;
    const double l1 = lp_norm(f, 1.0);
    if (l1 <= 0.0) return est;
    const int K = f.grid().depth;

    const double a2 = lp_norm(parts.alpha, 2.0);
    est.alpha_ratio = a2 * a2 / (lambda * l1);

    double beta_sum = 0.0;
    for (const MatFn& db : parts.d_beta) beta_sum += lp_norm(db, 1.0);
    est.beta_ratio = beta_sum / l1;

    MatFn join = zero_fn(f.grid(), f.dim());
    for (int leaf = 0; leaf < f.leaves(); ++leaf) {
        std::vector<Matrix> supports;
        for (const MatFn& dg : parts.d_gamma) {
            Matrix s = star_support(dg.value(leaf));
            if (s.max_abs() > 0.0) supports.push_back(std::move(s));
        }
        join.value(leaf) = supports.empty()
                               ? Matrix(f.dim())
                               : proj_join(std::span<const Matrix>(supports));
    }
    est.gamma_ratio = lambda * phi_trace(join).real() / l1;

    for (int k = 1; k <= K; ++k) {
        const MatFn sum = parts.d_alpha[k - 1] + parts.d_beta[k - 1] + parts.d_gamma[k - 1];
        est.sum_defect = std::max(est.sum_defect, max_abs_diff(sum, mart_diff(f, k)));
    }
    return est;
}

LeftRightCZ leftright_cz(const MatFn& f, const LacunaryFamily& fam, int ell) {
    const Grid& g = f.grid();
    const int K = g.depth;
    const double lambda = std::ldexp(1.0, ell);
    const double l1 = lp_norm(f, 1.0);

    const RowColSplit split = row_col_split(f, fam);
    const QhatFamily qf = qhat_build(fam, ell);

    // phat_k = qhat_{k-1} - qhat_k with qhat_{-1} = 1.
    std::vector<MatFn> phat;
    phat.push_back(identity_fn(g, f.dim()) - qf.qhat_k[0]);
    for (int k = 1; k <= K; ++k) phat.push_back(qf.qhat_k[k - 1] - qf.qhat_k[k]);

    LeftRightCZ out;
    out.g_r = qf.qhat * split.f_r;
    out.b_r = zero_fn(g, f.dim());
    out.g_c = split.f_c * qf.qhat;
    out.b_c = zero_fn(g, f.dim());
    double bad_l1 = 0.0;
    for (int k = 0; k <= K; ++k) {
        const MatFn er = expect(split.f_r, k);
        const MatFn ec = expect(split.f_c, k);
        out.g_r += phat[k] * er;
        out.g_c += ec * phat[k];
        const MatFn br_k = phat[k] * (split.f_r - er);
        const MatFn bc_k = (split.f_c - ec) * phat[k];
        out.b_r += br_k;
        out.b_c += bc_k;
        bad_l1 += lp_norm(br_k, 1.0) + lp_norm(bc_k, 1.0);
    }
    if (l1 > 0.0) {
        const double gr2 = lp_norm(out.g_r, 2.0);
        const double gc2 = lp_norm(out.g_c, 2.0);
        out.good_r_ratio = gr2 * gr2 / (lambda * l1);
        out.good_c_ratio = gc2 * gc2 / (lambda * l1);
        out.bad_l1_ratio = bad_l1 / l1;
    }
    return out;
}

ProbeReport truncation_probe(const EnsembleSpec& ens, const TruncationProbeParams& params) {
    ProbeReport rep;
    rep.name = "truncation_probe";
    const Grid g = ens.grid();
    double max_r1 = 0.0, max_r2 = 0.0;
    int skipped = 0;

    std::ofstream ledger;
    if (!params.ledger_path.empty()) ledger.open(params.ledger_path, std::ios::app);

    for (int i = 0; i < ens.samples; ++i) {
        Rng rng = Rng::for_sample(ens.seed, static_cast<uint64_t>(i));
        // Driver for the truncation family.
        EnsembleSpec driver_spec = ens;
        const MatFn driver = random_positive_fn(driver_spec, rng);
        const int top = std::max(params.s_min + 1, lacunary_top_exponent(driver));
        const LacunaryFamily fam = lacunary_build(driver, params.s_min, top);

        std::vector<MatFn> alphas, betas;
        for (int k = 1; k <= g.depth; ++k) {
            MatFn a = random_fn(g, ens.d, rng);
            const double sup = lp_norm(a, kInfNorm);
            if (sup > 0.0) a *= 1.0 / sup;
            alphas.push_back(std::move(a));
            MatFn b = random_fn(g, ens.d, rng);
            if (params.adversarial) {
                // bias toward the strictly-upper block of the truncation at k
                b = triangular_truncate(b, fam, k, TrianglePart::upper) * 3.0 + b;
            }
            betas.push_back(std::move(b));
        }

        MatFn num = zero_fn(g, ens.d);
        double denom1 = 0.0, denom2_sum = 0.0, denom2_sup = 0.0;
        for (int k = 1; k <= g.depth; ++k) {
            num += alphas[k - 1] * triangular_truncate(betas[k - 1], fam, k, TrianglePart::upper);
            denom1 += lp_norm(alphas[k - 1] * betas[k - 1], 1.0);
            denom2_sum += lp_norm(betas[k - 1], 1.0);
            denom2_sup = std::max(denom2_sup, lp_norm(alphas[k - 1], kInfNorm));
        }
        const double num_l1 = lp_norm(num, 1.0);

        ProbeRecord row;
        row.sample = i;
        bool have_any = false;
        if (denom1 > 0.0) {
            row.values["R1"] = num_l1 / denom1;
            have_any = true;
        }
        if (denom2_sup * denom2_sum > 0.0) {
            row.values["R2"] = num_l1 / (denom2_sup * denom2_sum);
            have_any = true;
        }
        if (!have_any) {
            ++skipped;
            continue;
        }

        const bool record_breaker = (row.values.count("R1") && row.values["R1"] > max_r1) ||
                                    (row.values.count("R2") && row.values["R2"] > max_r2);
        if (row.values.count("R1")) max_r1 = std::max(max_r1, row.values["R1"]);
        if (row.values.count("R2")) max_r2 = std::max(max_r2, row.values["R2"]);

        if (record_breaker && ledger.is_open()) {
            nlohmann::ordered_json rec;
            rec["sample"] = i;
            rec["R1"] = row.values.count("R1") ? row.values["R1"] : 0.0;
            rec["R2"] = row.values.count("R2") ? row.values["R2"] : 0.0;
            rec["driver"] = write_matfn(driver);
            nlohmann::ordered_json as = nlohmann::ordered_json::array();
            nlohmann::ordered_json bs = nlohmann::ordered_json::array();
            for (const auto& a : alphas) as.push_back(write_matfn(a));
            for (const auto& b : betas) bs.push_back(write_matfn(b));
            rec["alpha"] = as;
            rec["beta"] = bs;
            ledger << rec.dump() << "\n";
        }
        rep.rows.push_back(std::move(row));
    }
    rep.aggregates["max_R1"] = max_r1;
    rep.aggregates["max_R2"] = max_r2;
    rep.aggregates["skipped"] = static_cast<double>(skipped);
    return rep;
}

}  // namespace ncz
