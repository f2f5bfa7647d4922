#pragma once

// Finite dyadic geometry on [0,1)^n (n = 1 or 2) and piecewise-constant
// matrix-valued functions at leaf resolution: conditional expectations,
// martingale differences, the Haar system, traces and norms.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ncz/ncalg.hpp"

namespace ncz {

struct Grid {
    int n = 1;      // spatial dimension, 1 or 2
    int depth = 4;  // finest generation K
    int pad = 0;    // generation of the designated support subcube

    Grid() = default;
    Grid(int n_, int depth_, int pad_ = 0);

    int leaf_count() const { return 1 << (n * depth); }
    int cubes_at(int gen) const { return 1 << (n * gen); }
    double leaf_measure() const { return 1.0 / static_cast<double>(leaf_count()); }
    double cube_measure(int gen) const { return 1.0 / static_cast<double>(cubes_at(gen)); }

    bool operator==(const Grid& o) const = default;
};

// Same mesh: equal n and depth. Pad is support metadata and does not affect
// compatibility of leafwise arithmetic.
inline bool same_mesh(const Grid& a, const Grid& b) { return a.n == b.n && a.depth == b.depth; }

struct CubeIndex {
    int gen = 0;
    std::array<int, 2> coord = {0, 0};

    bool operator==(const CubeIndex& o) const = default;
};

CubeIndex parent(const CubeIndex& q);
// s-th dyadic ancestor, clamped at generation 0.
CubeIndex ancestor(const CubeIndex& q, int s);
CubeIndex child(const Grid& g, const CubeIndex& q, int which);  // which in [0, 2^n)
bool cube_contains(const Grid& g, const CubeIndex& q, const CubeIndex& sub);

int cube_linear(const Grid& g, const CubeIndex& q);
CubeIndex cube_from_linear(const Grid& g, int gen, int linear);
// Generation-gen cube containing the given leaf.
CubeIndex leaf_cube(const Grid& g, int leaf, int gen);
int leaf_linear(const Grid& g, const CubeIndex& leaf_level_cube);

// Invoke fn(leaf_index) over all leaves inside the cube.
template <typename Fn>
void for_each_leaf(const Grid& g, const CubeIndex& q, Fn&& fn) {
    const int side = 1 << (g.depth - q.gen);
    if (g.n == 1) {
        const int base = q.coord[0] * side;
        for (int i = 0; i < side; ++i) fn(base + i);
    } else {
        for (int dx = 0; dx < side; ++dx)
            for (int dy = 0; dy < side; ++dy) {
                CubeIndex leaf{g.depth, {q.coord[0] * side + dx, q.coord[1] * side + dy}};
                fn(leaf_linear(g, leaf));
            }
    }
}

CubeIndex support_cube(const Grid& g);  // the generation-pad cube containing the origin

// Piecewise-constant d x d matrix-valued function: one value per leaf cube.
class MatFn {
public:
    MatFn() = default;
    MatFn(const Grid& g, int d);

    const Grid& grid() const { return grid_; }
    int dim() const { return d_; }
    int leaves() const { return static_cast<int>(v_.size()); }

    Matrix& value(int leaf) { return v_[leaf]; }
    const Matrix& value(int leaf) const { return v_[leaf]; }

    bool hermitian_flag() const { return hermitian_; }
    void set_hermitian_flag(bool h) { hermitian_ = h; }
    double herm_defect() const;

    MatFn& operator+=(const MatFn& o);
    MatFn& operator-=(const MatFn& o);
    MatFn& operator*=(double s);
    MatFn& operator*=(cplx s);
    friend MatFn operator+(MatFn a, const MatFn& b) { return a += b; }
    friend MatFn operator-(MatFn a, const MatFn& b) { return a -= b; }
    friend MatFn operator*(MatFn a, double s) { return a *= s; }
    friend MatFn operator*(double s, MatFn a) { return a *= s; }
    // Leafwise matrix product.
    friend MatFn operator*(const MatFn& a, const MatFn& b);

    MatFn adjoint() const;

    double max_abs() const;

private:
    Grid grid_;
    int d_ = 0;
    bool hermitian_ = false;
    std::vector<Matrix> v_;
};

MatFn constant_fn(const Grid& g, const Matrix& m);
MatFn identity_fn(const Grid& g, int d);
MatFn zero_fn(const Grid& g, int d);

// Left/right multiplication by a constant matrix.
MatFn left_mul(const Matrix& m, const MatFn& f);
MatFn right_mul(const MatFn& f, const Matrix& m);

double max_abs_diff(const MatFn& a, const MatFn& b);

// phi(f) = integral of the normalized matrix trace.
cplx phi_trace(const MatFn& f);
// Anti-linear bracket <f,g> = phi(f* g).
cplx l2_inner(const MatFn& f, const MatFn& g);

// Conditional expectation onto generation k (0 <= k <= K).
MatFn expect(const MatFn& f, int k);
// df_k = E_k f - E_{k-1} f (1 <= k <= K).
MatFn mart_diff(const MatFn& f, int k);

// Haar index: a cube plus a sign pattern. Pattern bit j set means
// epsilon_j = -1; the all-plus pattern (mask 0) is inadmissible.
struct HaarIndex {
    CubeIndex cube;
    int eps = 1;
};

// Pointwise value of h_Q^eps at a leaf (0 outside Q). The function is
// 1/sqrt(|Q|) times the product over axes of (+1 on the left half,
// epsilon_j on the right half).
double haar_value(const Grid& g, const HaarIndex& h, int leaf);
// Scalar-valued (d = 1) view of the Haar function.
MatFn haar_fn(const Grid& g, const HaarIndex& h);
// <f, h> = sum over leaves of |leaf| f(leaf) h(leaf). The Haar index must be
// resolved by the grid: gen(cube) <= K-1.
Matrix haar_coeff(const MatFn& f, const HaarIndex& h);
// All resolved Haar indices (gens 0..K-1, sign patterns in lexicographic
// order 1..2^n-1).
std::vector<HaarIndex> all_haar_indices(const Grid& g);

// (phi(|f|^p))^{1/p}; p = inf gives the max leaf operator norm. p < 1 is
// rejected.
double lp_norm(const MatFn& f, double p);
constexpr double kInfNorm = Interval::kInf;
// lambda * phi(chi_{(lambda,inf)}(|f|)).
double weak_l1_tail(const MatFn& f, double lambda);
// || (int f* f)^{1/2} ||_M and the row variant with f f*.
double linf_l2c_norm(const MatFn& f);
double linf_l2r_norm(const MatFn& f);

// Text serialization: header "n K d p hermitian", then one leaf per line in
// row-major cube order, each matrix entry as a re,im pair, row-major.
// Round-trips are bit-exact.
std::string write_matfn(const MatFn& f);
MatFn read_matfn(const std::string& text);

}  // namespace ncz
