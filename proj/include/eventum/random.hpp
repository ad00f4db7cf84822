#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "eventum/matrix.hpp"

namespace eventum {

/// splitmix64 step; used to decorrelate derived seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Deterministic per-stream seed: stream k of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (stream + 1));
    return splitmix64(s);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(derive_seed(seed, stream));
}

/// Matrix with i.i.d. standard complex Gaussian entries.
inline CMat ginibre(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    CMat g(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) g(i, j) = Complex(gauss(rng), gauss(rng)) / std::sqrt(2.0);
    return g;
}

/// Haar-distributed isometry (rows >= cols): QR of a Ginibre matrix with the
/// R-diagonal phase fixed.
inline CMat haar_isometry(Index rows, Index cols, Rng& rng) {
    CMat g = ginibre(rows, cols, rng);
    Eigen::HouseholderQR<CMat> qr(g);
    CMat q = qr.householderQ() * CMat::Identity(rows, cols);
    CMat r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (Index j = 0; j < cols; ++j) {
        const Complex d = r(j, j);
        q.col(j) *= (std::abs(d) > 0) ? d / std::abs(d) : Complex(1, 0);
    }
    return q;
}

inline CMat haar_unitary(Index dim, Rng& rng) { return haar_isometry(dim, dim, rng); }

/// Full-rank random density matrix G G* / tr.
inline CMat random_density(Index dim, Rng& rng) {
    CMat g = ginibre(dim, dim, rng);
    CMat rho = g * g.adjoint();
    return rho / rho.trace();
}

inline CMat random_hermitian(Index dim, Rng& rng) {
    CMat g = ginibre(dim, dim, rng);
    return (g + g.adjoint()) / 2.0;
}

/// Kraus operators A_1..A_m on dim_s with Sum A*A = I exact by construction:
/// the blocks of a Haar-random (m*dim_s x dim_s) isometry.
inline std::vector<CMat> random_kraus_ops(Index dim_s, Index num_outcomes, Rng& rng) {
    CMat v = haar_isometry(num_outcomes * dim_s, dim_s, rng);
    std::vector<CMat> ops;
    ops.reserve(static_cast<size_t>(num_outcomes));
    for (Index x = 0; x < num_outcomes; ++x)
        ops.push_back(v.block(x * dim_s, 0, dim_s, dim_s));
    return ops;
}

}  // namespace eventum
