#pragma once

#include <Eigen/SVD>
#include <string>
#include <vector>

#include "eventum/matrix.hpp"

namespace eventum {

/// Orthonormalized spanning set of a unital *-closed operator space on
/// C^dim, orthonormal under the trace inner product <A,B> = tr(A*B).
class AlgebraBasis {
public:
    AlgebraBasis(Index dim, std::vector<CMat> basis, double tol = 1e-10)
        : dim_(dim), basis_(std::move(basis)) {
        for (const auto& b : basis_)
            if (b.rows() != dim_ || b.cols() != dim_)
                throw ShapeError("AlgebraBasis: element is not dim x dim");
        for (size_t i = 0; i < basis_.size(); ++i)
            for (size_t j = i; j < basis_.size(); ++j) {
                const Complex ip = (basis_[i].adjoint() * basis_[j]).trace();
                const double want = (i == j) ? 1.0 : 0.0;
                if (std::abs(ip - want) > tol)
                    throw InvariantError("AlgebraBasis: basis not trace-orthonormal");
            }
        if (project_residual(CMat::Identity(dim_, dim_)) > tol * std::sqrt(double(dim_)))
            throw InvariantError("AlgebraBasis: identity not in span (algebra must be unital)");
        for (const auto& b : basis_)
            if (project_residual(b.adjoint()) > tol)
                throw InvariantError("AlgebraBasis: span is not *-closed");
    }

    Index dim() const { return dim_; }
    Index size() const { return static_cast<Index>(basis_.size()); }
    const std::vector<CMat>& basis() const { return basis_; }
    const CMat& operator[](size_t k) const { return basis_[k]; }

    /// Orthogonal projection of m onto the span.
    CMat project(const CMat& m) const {
        if (m.rows() != dim_ || m.cols() != dim_)
            throw ShapeError("AlgebraBasis::project: dimension mismatch");
        CMat out = CMat::Zero(dim_, dim_);
        for (const auto& b : basis_) out += (b.adjoint() * m).trace() * b;
        return out;
    }

    /// Frobenius distance from m to the span; 0 means member.
    double project_residual(const CMat& m) const { return residual(CMat(m - project(m))); }

private:
    Index dim_;
    std::vector<CMat> basis_;
};

namespace detail {

/// Column-major vectorization.
inline CVec vec(const CMat& m) { return CVec(Eigen::Map<const CVec>(m.data(), m.size())); }

inline CMat unvec(const CVec& v, Index dim) {
    return CMat(Eigen::Map<const CMat>(v.data(), dim, dim));
}

/// vec(X G - G X) = (G^T kron I - I kron G) vec(X).
inline CMat commutator_map(const CMat& g) {
    const Index d = g.rows();
    const CMat id = CMat::Identity(d, d);
    // local kron without the global dim cap: d^2 x d^2 solver workspace
    auto kron = [](const CMat& a, const CMat& b) {
        CMat out(a.rows() * b.rows(), a.cols() * b.cols());
        for (Index i = 0; i < a.rows(); ++i)
            for (Index j = 0; j < a.cols(); ++j)
                out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        return out;
    };
    return kron(g.transpose(), id) - kron(id, g);
}

/// Orthonormal basis of the nullspace of m (singular values below cutoff).
inline std::vector<CVec> nullspace(const CMat& m, double cutoff) {
    Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeFullV);
    std::vector<CVec> out;
    const auto& sv = svd.singularValues();
    const Index cols = m.cols();
    for (Index k = 0; k < cols; ++k) {
        const double s = (k < sv.size()) ? sv(k) : 0.0;
        if (s < cutoff) out.push_back(svd.matrixV().col(k));
    }
    return out;
}

}  // namespace detail

/// Orthonormal basis of {X : [X,G] = 0 and [X,G*] = 0 for all generators G},
/// computed as the joint nullspace of the stacked commutator maps.
/// An empty generator set yields the full matrix space.
inline AlgebraBasis commutant(const std::vector<CMat>& generators, Index dim,
                              double cutoff = 1e-10) {
    for (const auto& g : generators)
        if (g.rows() != dim || g.cols() != dim)
            throw ShapeError("commutant: generator is not dim x dim");

    // adjoints included so the commutant is a *-algebra; unit-normalized so
    // the singular-value cutoff is scale free
    std::vector<CMat> gens;
    for (const auto& g : generators) {
        if (residual(g) < cutoff) continue;
        gens.push_back(g / residual(g));
        CMat ga = g.adjoint();
        gens.push_back(ga / residual(ga));
    }

    const Index d2 = dim * dim;
    if (gens.empty()) {
        std::vector<CMat> full;
        for (Index j = 0; j < dim; ++j)
            for (Index i = 0; i < dim; ++i) {
                CMat e = CMat::Zero(dim, dim);
                e(i, j) = 1.0;
                full.push_back(e);
            }
        return AlgebraBasis(dim, std::move(full));
    }

    CMat stacked(static_cast<Index>(gens.size()) * d2, d2);
    for (size_t k = 0; k < gens.size(); ++k)
        stacked.middleRows(static_cast<Index>(k) * d2, d2) = detail::commutator_map(gens[k]);

    std::vector<CMat> basis;
    for (const auto& v : detail::nullspace(stacked, cutoff)) basis.push_back(detail::unvec(v, dim));
    return AlgebraBasis(dim, std::move(basis));
}

/// Commutant applied twice: the unital *-algebra generated by the set.
inline AlgebraBasis bicommutant(const std::vector<CMat>& generators, Index dim,
                                double cutoff = 1e-10) {
    AlgebraBasis first = commutant(generators, dim, cutoff);
    return commutant(first.basis(), dim, cutoff);
}

/// Frobenius distance from m to span(a).
inline double membership(const CMat& m, const AlgebraBasis& a) { return a.project_residual(m); }

/// True iff all pairwise commutators of basis elements vanish.
inline bool is_commutative(const AlgebraBasis& a, double tol = 1e-10) {
    for (Index i = 0; i < a.size(); ++i)
        for (Index j = i + 1; j < a.size(); ++j)
            if (residual(commutator(a[i], a[j])) >= tol) return false;
    return true;
}

/// Basis of the center a ∩ a': joint nullspace of the deficiency maps
/// (I - P_a) and (I - P_a') acting on vectorized operators.
inline AlgebraBasis center(const AlgebraBasis& a, double cutoff = 1e-10) {
    const Index d = a.dim();
    const Index d2 = d * d;
    AlgebraBasis aprime = commutant(a.basis(), d, cutoff);

    auto span_projector = [d2](const AlgebraBasis& alg) {
        CMat b(d2, alg.size());
        for (Index k = 0; k < alg.size(); ++k) b.col(k) = detail::vec(alg[static_cast<size_t>(k)]);
        return CMat(b * b.adjoint());
    };
    const CMat id = CMat::Identity(d2, d2);
    CMat stacked(2 * d2, d2);
    stacked.topRows(d2) = id - span_projector(a);
    stacked.bottomRows(d2) = id - span_projector(aprime);

    std::vector<CMat> basis;
    for (const auto& v : detail::nullspace(stacked, cutoff)) basis.push_back(detail::unvec(v, d));
    return AlgebraBasis(d, std::move(basis));
}

/// Orthonormal basis of span{A kron B}; dimension dim(a)*dim(b). Tensor
/// products of trace-orthonormal bases are trace-orthonormal, so the
/// element-wise products are returned directly.
inline AlgebraBasis tensor_algebra(const AlgebraBasis& a, const AlgebraBasis& b,
                                   Index dim_cap = kDimCap) {
    if (a.dim() * b.dim() > dim_cap)
        throw SizeError("tensor_algebra: ambient dimension exceeds cap");
    std::vector<CMat> basis;
    basis.reserve(static_cast<size_t>(a.size() * b.size()));
    for (Index i = 0; i < a.size(); ++i)
        for (Index j = 0; j < b.size(); ++j)
            basis.push_back(tensor(a[static_cast<size_t>(i)], b[static_cast<size_t>(j)], dim_cap));
    return AlgebraBasis(a.dim() * b.dim(), std::move(basis));
}

/// The diagonal algebra on C^dim: span of the basis projectors |x><x|.
inline AlgebraBasis diagonal_algebra(Index dim) {
    std::vector<CMat> basis;
    for (Index x = 0; x < dim; ++x) {
        CMat e = CMat::Zero(dim, dim);
        e(x, x) = 1.0;
        basis.push_back(e);
    }
    return AlgebraBasis(dim, std::move(basis));
}

/// All of B(C^dim): the matrix units.
inline AlgebraBasis full_algebra(Index dim) { return commutant({}, dim); }

/// Complex multiples of the identity on C^dim.
inline AlgebraBasis scalar_algebra(Index dim) {
    std::vector<CMat> basis;
    basis.push_back(CMat::Identity(dim, dim) / std::sqrt(double(dim)));
    return AlgebraBasis(dim, std::move(basis));
}

/// Projectors |x><x| for x = 0..dim-1; the standard generator set for the
/// diagonal algebra.
inline std::vector<CMat> diagonal_projectors(Index dim) {
    std::vector<CMat> gens;
    for (Index x = 0; x < dim; ++x) {
        CMat e = CMat::Zero(dim, dim);
        e(x, x) = 1.0;
        gens.push_back(e);
    }
    return gens;
}

}  // namespace eventum
