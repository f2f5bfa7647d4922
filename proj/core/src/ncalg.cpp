#include "ncz/ncalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ncz {

namespace {

// One complex Jacobi rotation zeroing A[p][q], accumulated into V.
void jacobi_rotate(Matrix& a, Matrix& v, int p, int q) {
    const cplx apq = a.at(p, q);
    const double beta = std::abs(apq);
    if (beta == 0.0) return;
    const cplx phase = apq / beta;  // e^{i phi}

    const double app = a.at(p, p).real();
    const double aqq = a.at(q, q).real();
    const double tau = (aqq - app) / (2.0 * beta);
    const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;

    const int d = a.dim();
    // Columns: A <- A * U with U[p][p]=c, U[p][q]=s*phase, U[q][p]=-s*conj(phase), U[q][q]=c.
    for (int i = 0; i < d; ++i) {
        const cplx aip = a.at(i, p);
        const cplx aiq = a.at(i, q);
        a.at(i, p) = c * aip - s * std::conj(phase) * aiq;
        a.at(i, q) = s * phase * aip + c * aiq;
    }
    // Rows: A <- U* * A.
    for (int j = 0; j < d; ++j) {
        const cplx apj = a.at(p, j);
        const cplx aqj = a.at(q, j);
        a.at(p, j) = c * apj - s * phase * aqj;
        a.at(q, j) = s * std::conj(phase) * apj + c * aqj;
    }
    for (int i = 0; i < d; ++i) {
        const cplx vip = v.at(i, p);
        const cplx viq = v.at(i, q);
        v.at(i, p) = c * vip - s * std::conj(phase) * viq;
        v.at(i, q) = s * phase * vip + c * viq;
    }
}

double offdiag_norm(const Matrix& a) {
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j)
            if (i != j) s += std::norm(a.at(i, j));
    return std::sqrt(s);
}

}  // namespace

SpectralDecomp herm_eig(const Matrix& a) {
    const int d = a.dim();
    if (d == 0) throw std::invalid_argument("herm_eig: empty matrix");
    const double defect = a.herm_defect();
    if (defect > tol::herm * std::max(1.0, a.max_abs())) {
        std::ostringstream os;
        os << "herm_eig: input not Hermitian, defect " << defect;
        throw std::invalid_argument(os.str());
    }

    Matrix w = a;
    w.hermitize();
    Matrix v = Matrix::identity(d);

    if (d > 1) {
        const double target = tol::eig * std::max(w.frobenius(), 1e-300);
        for (int sweep = 0; sweep < 64 && offdiag_norm(w) > target; ++sweep) {
            for (int p = 0; p < d - 1; ++p)
                for (int q = p + 1; q < d; ++q) jacobi_rotate(w, v, p, q);
        }
    }

    SpectralDecomp out;
    out.eigenvalues.resize(d);
    for (int i = 0; i < d; ++i) out.eigenvalues[i] = w.at(i, i).real();

    std::vector<int> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int i, int j) { return out.eigenvalues[i] < out.eigenvalues[j]; });

    std::vector<double> ev(d);
    Matrix u(d);
    for (int j = 0; j < d; ++j) {
        ev[j] = out.eigenvalues[idx[j]];
        for (int i = 0; i < d; ++i) u.at(i, j) = v.at(i, idx[j]);
    }
    out.eigenvalues = std::move(ev);
    out.vectors = std::move(u);
    return out;
}

Matrix func_calc(const Matrix& a, const std::function<double(double)>& phi) {
    const SpectralDecomp sd = herm_eig(a);
    const int d = a.dim();
    std::vector<double> vals(d);
    for (int i = 0; i < d; ++i) {
        vals[i] = phi(sd.eigenvalues[i]);
        if (!std::isfinite(vals[i]))
            throw std::domain_error("func_calc: function undefined at an eigenvalue");
    }
    Matrix out(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            cplx s = 0.0;
            for (int k = 0; k < d; ++k)
                s += sd.vectors.at(i, k) * vals[k] * std::conj(sd.vectors.at(j, k));
            out.at(i, j) = s;
        }
    out.hermitize();
    return out;
}

bool Interval::contains(double x, double band) const {
    bool above_lo;
    if (lo <= -kInf)
        above_lo = true;
    else if (lo_open)
        above_lo = x > lo + band;
    else
        above_lo = x >= lo - band;
    bool below_hi;
    if (hi >= kInf)
        below_hi = true;
    else if (hi_open)
        below_hi = x < hi - band;
    else
        below_hi = x <= hi + band;
    return above_lo && below_hi;
}

Matrix spectral_proj(const Matrix& a, const Interval& iv) {
    return spectral_proj(a, iv, tol::band_rel * std::max(1.0, a.max_abs()));
}

Matrix spectral_proj(const Matrix& a, const Interval& iv, double band) {
    const SpectralDecomp sd = herm_eig(a);
    const int d = a.dim();
    Matrix out(d);
    for (int k = 0; k < d; ++k) {
        if (!iv.contains(sd.eigenvalues[k], band)) continue;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                out.at(i, j) += sd.vectors.at(i, k) * std::conj(sd.vectors.at(j, k));
    }
    out.hermitize();
    return out;
}

namespace {

void require_projection(const Matrix& p, const char* who) {
    if (projection_defect(p) > tol::proj * std::max(1.0, p.max_abs())) {
        std::ostringstream os;
        os << who << ": input is not a projection, defect " << projection_defect(p);
        throw std::invalid_argument(os.str());
    }
}

}  // namespace

Matrix proj_meet(std::span<const Matrix> ps) {
    if (ps.empty()) throw std::invalid_argument("proj_meet: empty input");
    for (const auto& p : ps) require_projection(p, "proj_meet");
    const int d = ps[0].dim();
    Matrix avg(d);
    for (const auto& p : ps) avg += p;
    avg *= 1.0 / static_cast<double>(ps.size());
    // v in all ranges  <=>  avg v = v; snap eigenvalues within tol::meet of 1.
    return spectral_proj(avg, Interval{1.0 - tol::meet, 2.0, false, false}, 0.0);
}

Matrix proj_join(std::span<const Matrix> ps) {
    if (ps.empty()) throw std::invalid_argument("proj_join: empty input");
    const int d = ps[0].dim();
    std::vector<Matrix> compl_;
    compl_.reserve(ps.size());
    const Matrix one = Matrix::identity(d);
    for (const auto& p : ps) compl_.push_back(one - p);
    return one - proj_meet(compl_);
}

Matrix proj_meet(const Matrix& a, const Matrix& b) {
    const Matrix ps[2] = {a, b};
    return proj_meet(std::span<const Matrix>(ps, 2));
}

Matrix proj_join(const Matrix& a, const Matrix& b) {
    const Matrix ps[2] = {a, b};
    return proj_join(std::span<const Matrix>(ps, 2));
}

double projection_defect(const Matrix& p) {
    return std::max(max_abs_diff(p * p, p), p.herm_defect());
}

double proj_leq_defect(const Matrix& a, const Matrix& b) {
    return max_abs_diff(a, b * a * b);
}

bool proj_leq(const Matrix& a, const Matrix& b) {
    return proj_leq_defect(a, b) <= tol::order * std::max(1.0, a.max_abs());
}

std::vector<double> singular_values(const Matrix& a) {
    const SpectralDecomp sd = herm_eig(a.adjoint() * a);
    std::vector<double> sv(sd.eigenvalues.size());
    for (size_t i = 0; i < sv.size(); ++i) sv[i] = std::sqrt(std::max(0.0, sd.eigenvalues[i]));
    return sv;
}

Matrix abs_matrix(const Matrix& a) { return sqrt_psd(a.adjoint() * a); }

Matrix sqrt_psd(const Matrix& a) {
    return func_calc(a, [](double x) { return std::sqrt(std::max(0.0, x)); });
}

double op_norm(const Matrix& a) {
    const auto sv = singular_values(a);
    return sv.empty() ? 0.0 : sv.back();
}

double schatten_norm(const Matrix& a, double p) {
    if (p < 1.0) throw std::invalid_argument("schatten_norm: p < 1");
    const auto sv = singular_values(a);
    if (p >= Interval::kInf) return sv.empty() ? 0.0 : sv.back();
    double s = 0.0;
    for (double x : sv) s += std::pow(x, p);
    s /= static_cast<double>(sv.size());
    return std::pow(s, 1.0 / p);
}

double trace_norm(const Matrix& a) { return schatten_norm(a, 1.0); }

double min_eig_herm(const Matrix& a) { return herm_eig(a).eigenvalues.front(); }
double max_eig_herm(const Matrix& a) { return herm_eig(a).eigenvalues.back(); }

bool is_positive_semidef(const Matrix& a, double t) {
    return min_eig_herm(a) >= -t * std::max(1.0, a.max_abs());
}

}  // namespace ncz
