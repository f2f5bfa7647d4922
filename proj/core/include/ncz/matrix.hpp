#pragma once

// Dense complex d x d matrices. Everything at desk scale (d <= 16) is dense,
// value-semantic and double precision.

#include <complex>
#include <cstddef>
#include <vector>

namespace ncz {

using cplx = std::complex<double>;

class Matrix {
public:
    Matrix() = default;
    explicit Matrix(int dim) : dim_(dim), a_(static_cast<size_t>(dim) * dim) {}

    static Matrix zero(int dim) { return Matrix(dim); }
    static Matrix identity(int dim);

    int dim() const { return dim_; }
    bool empty() const { return dim_ == 0; }

    cplx& at(int i, int j) { return a_[static_cast<size_t>(i) * dim_ + j]; }
    const cplx& at(int i, int j) const { return a_[static_cast<size_t>(i) * dim_ + j]; }
    cplx& operator()(int i, int j) { return at(i, j); }
    const cplx& operator()(int i, int j) const { return at(i, j); }

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(cplx s);
    Matrix& operator*=(double s);

    Matrix adjoint() const;
    Matrix transpose() const;
    Matrix conj() const;

    // Unnormalized trace (sum of diagonal entries).
    cplx trace() const;
    // Normalized trace, tr(1) = 1.
    cplx ntrace() const { return trace() / static_cast<double>(dim_); }

    double frobenius() const;
    double max_abs() const;
    // max_ij |A_ij - conj(A_ji)|
    double herm_defect() const;

    void hermitize();  // A <- (A + A*)/2

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, cplx s) { return a *= s; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(cplx s, Matrix a) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }
    friend Matrix operator*(const Matrix& a, const Matrix& b);
    friend Matrix operator-(const Matrix& a);

private:
    int dim_ = 0;
    std::vector<cplx> a_;
};

// C += A * B without allocating.
void add_product(Matrix& c, const Matrix& a, const Matrix& b);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace ncz
