#pragma once

// Randomized ensembles: Wishart-style positive functions with optional
// rank-one bursts, Hermitian symbols, adapted coefficient sequences, random
// projections and unitaries. Everything is deterministic given the seed.

#include <cstdint>

#include "ncz/dyadic.hpp"
#include "ncz/rng.hpp"

namespace ncz {

struct EnsembleSpec {
    int samples = 50;
    uint64_t seed = 1;
    int d = 2;
    int n = 1;
    int depth = 4;  // K
    int pad = 0;
    int spikes = 0;            // rank-one bursts on this many leaves
    double spike_scale = 8.0;  // burst amplitude

    Grid grid() const { return Grid(n, depth, pad); }
};

Matrix random_matrix(int d, Rng& rng);            // i.i.d. complex gaussian entries
Matrix random_hermitian(int d, Rng& rng);         // (G + G*)/2
Matrix random_psd(int d, Rng& rng);               // G* G / d
Matrix random_unitary(int d, Rng& rng);           // Gram-Schmidt of a gaussian matrix
Matrix random_projection(int d, int rank, Rng& rng);

// f(leaf) = G* G / d, zeroed outside the support subcube when pad > 0,
// optionally spiked with rank-one bursts on a few in-support leaves.
MatFn random_positive_fn(const EnsembleSpec& spec, Rng& rng);
// Hermitian-valued function with entries O(1) (symbols rho).
MatFn random_hermitian_fn(const Grid& g, int d, Rng& rng);
// General (non-Hermitian) function.
MatFn random_fn(const Grid& g, int d, Rng& rng);
// Adapted coefficient sequence xi_k, k = 0..K-1, each constant on
// generation-k cubes with unit operator norm per cube.
std::vector<MatFn> random_adapted_sequence(const Grid& g, int d, Rng& rng);

}  // namespace ncz
