#include "ncz/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ncz {

Matrix Matrix::identity(int dim) {
    Matrix m(dim);
    for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix& Matrix::operator+=(const Matrix& o) {
    if (dim_ != o.dim_) throw std::invalid_argument("Matrix: dimension mismatch in +=");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    if (dim_ != o.dim_) throw std::invalid_argument("Matrix: dimension mismatch in -=");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

Matrix& Matrix::operator*=(cplx s) {
    for (auto& x : a_) x *= s;
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (auto& x : a_) x *= s;
    return *this;
}

Matrix Matrix::adjoint() const {
    Matrix m(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) m.at(j, i) = std::conj(at(i, j));
    return m;
}

Matrix Matrix::transpose() const {
    Matrix m(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) m.at(j, i) = at(i, j);
    return m;
}

Matrix Matrix::conj() const {
    Matrix m(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) m.at(i, j) = std::conj(at(i, j));
    return m;
}

cplx Matrix::trace() const {
    cplx t = 0.0;
    for (int i = 0; i < dim_; ++i) t += at(i, i);
    return t;
}

double Matrix::frobenius() const {
    double s = 0.0;
    for (const auto& x : a_) s += std::norm(x);
    return std::sqrt(s);
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (const auto& x : a_) m = std::max(m, std::abs(x));
    return m;
}

double Matrix::herm_defect() const {
    double m = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            m = std::max(m, std::abs(at(i, j) - std::conj(at(j, i))));
    return m;
}

void Matrix::hermitize() {
    for (int i = 0; i < dim_; ++i) {
        at(i, i) = cplx(at(i, i).real(), 0.0);
        for (int j = i + 1; j < dim_; ++j) {
            cplx v = 0.5 * (at(i, j) + std::conj(at(j, i)));
            at(i, j) = v;
            at(j, i) = std::conj(v);
        }
    }
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.dim_ != b.dim_) throw std::invalid_argument("Matrix: dimension mismatch in *");
    Matrix c(a.dim_);
    add_product(c, a, b);
    return c;
}

Matrix operator-(const Matrix& a) {
    Matrix m = a;
    return m *= -1.0;
}

void add_product(Matrix& c, const Matrix& a, const Matrix& b) {
    const int d = a.dim();
    for (int i = 0; i < d; ++i) {
        for (int k = 0; k < d; ++k) {
            const cplx aik = a.at(i, k);
            if (aik == cplx(0.0)) continue;
            for (int j = 0; j < d; ++j) c.at(i, j) += aik * b.at(k, j);
        }
    }
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a.at(i, j) - b.at(i, j)));
    return m;
}

}  // namespace ncz
