#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "eventum/errors.hpp"

namespace eventum {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Largest matrix dimension any constructive operation may produce.
inline constexpr Index kDimCap = 4096;

/// Frobenius norm; the uniform "distance from zero" used by every
/// numerical identity check in the library.
inline double residual(const CMat& m) { return m.norm(); }

inline bool all_finite(const CMat& m) { return m.allFinite(); }

inline CMat commutator(const CMat& a, const CMat& b) { return a * b - b * a; }

inline bool is_hermitian(const CMat& m, double tol = 1e-10) {
    return m.rows() == m.cols() && residual(CMat(m - m.adjoint())) < tol;
}

inline bool is_unitary(const CMat& m, double tol = 1e-10) {
    if (m.rows() != m.cols()) return false;
    return residual(CMat(m.adjoint() * m - CMat::Identity(m.cols(), m.cols()))) < tol;
}

/// Kronecker product. Entry ((i,k),(j,l)) = a(i,j) * b(k,l), i.e. the row
/// block index runs over a's rows and the fast index over b's rows.
inline CMat tensor(const CMat& a, const CMat& b, Index dim_cap = kDimCap) {
    if (a.rows() * b.rows() > dim_cap || a.cols() * b.cols() > dim_cap) {
        throw SizeError("tensor: result dimension " + std::to_string(a.rows() * b.rows()) +
                        "x" + std::to_string(a.cols() * b.cols()) + " exceeds cap " +
                        std::to_string(dim_cap));
    }
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline CMat tensor(const CMat& a, const CMat& b, const CMat& c, Index dim_cap = kDimCap) {
    return tensor(tensor(a, b, dim_cap), c, dim_cap);
}

/// Ordered partition of 0..total_dim into labeled contiguous index ranges.
/// Each block is a sector: the subspace spanned by its basis indices.
class BasisPartition {
public:
    struct Block {
        std::string label;
        Index begin = 0;  // inclusive
        Index end = 0;    // exclusive
    };

    BasisPartition(Index total_dim, std::vector<Block> blocks)
        : total_dim_(total_dim), blocks_(std::move(blocks)) {
        if (total_dim_ <= 0) throw ShapeError("BasisPartition: total_dim must be positive");
        Index cursor = 0;
        for (const auto& b : blocks_) {
            if (b.begin != cursor || b.end <= b.begin)
                throw ShapeError("BasisPartition: blocks must be contiguous, disjoint and nonempty");
            cursor = b.end;
        }
        if (cursor != total_dim_)
            throw ShapeError("BasisPartition: blocks must cover exactly 0.." +
                             std::to_string(total_dim_));
    }

    /// num_blocks equal blocks of size block_dim, labeled "0", "1", ...
    static BasisPartition uniform(Index num_blocks, Index block_dim) {
        std::vector<Block> blocks;
        blocks.reserve(static_cast<size_t>(num_blocks));
        for (Index k = 0; k < num_blocks; ++k)
            blocks.push_back({std::to_string(k), k * block_dim, (k + 1) * block_dim});
        return BasisPartition(num_blocks * block_dim, std::move(blocks));
    }

    Index total_dim() const { return total_dim_; }
    const std::vector<Block>& blocks() const { return blocks_; }

private:
    Index total_dim_;
    std::vector<Block> blocks_;
};

/// Sum_x Pi_x m Pi_x: zeroes every matrix element connecting different
/// blocks of p. Idempotent, trace preserving, commutes with adjoint.
inline CMat pinch(const CMat& m, const BasisPartition& p) {
    if (m.rows() != m.cols() || m.rows() != p.total_dim())
        throw ShapeError("pinch: matrix must be square with dim " +
                         std::to_string(p.total_dim()));
    CMat out = CMat::Zero(m.rows(), m.cols());
    for (const auto& b : p.blocks()) {
        const Index n = b.end - b.begin;
        out.block(b.begin, b.begin, n, n) = m.block(b.begin, b.begin, n, n);
    }
    return out;
}

enum class Keep { First, Second };

/// Partial trace of an operator on a bipartite space of dims (dim_a, dim_b),
/// discarding the factor not kept.
inline CMat partial_trace(const CMat& m, Index dim_a, Index dim_b, Keep keep) {
    if (dim_a <= 0 || dim_b <= 0 || m.rows() != m.cols() || m.rows() != dim_a * dim_b)
        throw ShapeError("partial_trace: matrix dim must equal dim_a*dim_b");
    if (keep == Keep::First) {
        CMat out = CMat::Zero(dim_a, dim_a);
        for (Index i = 0; i < dim_a; ++i)
            for (Index j = 0; j < dim_a; ++j)
                for (Index k = 0; k < dim_b; ++k)
                    out(i, j) += m(i * dim_b + k, j * dim_b + k);
        return out;
    }
    CMat out = CMat::Zero(dim_b, dim_b);
    for (Index k = 0; k < dim_b; ++k)
        for (Index l = 0; l < dim_b; ++l)
            for (Index i = 0; i < dim_a; ++i)
                out(k, l) += m(i * dim_b + k, i * dim_b + l);
    return out;
}

/// Extends an isometry v (orthonormal columns, rows >= cols) to a square
/// unitary whose first v.cols() columns are v, stored entries unchanged.
///
/// The completion is deterministic: standard basis vectors are
/// orthonormalized against the accumulated columns in index order and the
/// first rows-cols survivors are kept.
inline CMat complete_isometry(const CMat& v, double tol = 1e-10) {
    const Index n = v.rows();
    const Index k = v.cols();
    if (n < k) throw ShapeError("complete_isometry: rows must be >= cols");
    const double dev = residual(CMat(v.adjoint() * v - CMat::Identity(k, k)));
    if (dev > tol)
        throw IsometryError("complete_isometry: v*v deviates from I by " + std::to_string(dev));

    CMat u(n, n);
    u.leftCols(k) = v;
    Index filled = k;
    for (Index cand = 0; cand < n && filled < n; ++cand) {
        CVec r = CVec::Zero(n);
        r(cand) = 1.0;
        // two rounds of modified Gram-Schmidt for orthogonality at 1e-14 scale
        for (int round = 0; round < 2; ++round)
            for (Index c = 0; c < filled; ++c) r -= u.col(c).dot(r) * u.col(c);
        const double nrm = r.norm();
        if (nrm > 1e-7) {
            u.col(filled++) = r / nrm;
        }
    }
    if (filled != n)
        throw IsometryError("complete_isometry: completion failed to span the space");
    return u;
}

}  // namespace eventum
