#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "eventum/model.hpp"

namespace eventum {

/// Operator-sum representation {A_x} with Sum A*_x A_x = I. Outcomes are
/// labeled 1..m; the value 0 is reserved for "no event" and carries no
/// operator.
class KrausFamily {
public:
    KrausFamily(Index dim_s, std::vector<CMat> ops, double tol = 1e-10)
        : dim_s_(dim_s), ops_(std::move(ops)) {
        if (dim_s_ <= 0) throw KrausError("KrausFamily: dim_s must be positive");
        if (ops_.empty()) throw KrausError("KrausFamily: no operators");
        CMat sum = CMat::Zero(dim_s_, dim_s_);
        for (const auto& a : ops_) {
            if (a.rows() != dim_s_ || a.cols() != dim_s_)
                throw ShapeError("KrausFamily: operator is not dim_s x dim_s");
            if (!all_finite(a)) throw KrausError("KrausFamily: non-finite operator");
            sum += a.adjoint() * a;
        }
        completeness_residual_ = residual(CMat(sum - CMat::Identity(dim_s_, dim_s_)));
        if (completeness_residual_ >= tol)
            throw KrausError("KrausFamily: completeness residual " +
                             std::to_string(completeness_residual_));
    }

    Index dim_s() const { return dim_s_; }
    int num_outcomes() const { return static_cast<int>(ops_.size()); }
    /// A_x for outcome x in 1..m.
    const CMat& op(int outcome) const { return ops_.at(static_cast<size_t>(outcome - 1)); }
    const std::vector<CMat>& ops() const { return ops_; }
    double completeness_residual() const { return completeness_residual_; }

    double outcome_probability(int outcome, const CMat& rho) const {
        const CMat& a = op(outcome);
        return (a.adjoint() * a * rho).trace().real();
    }

    CMat post_state(int outcome, const CMat& rho) const {
        const CMat& a = op(outcome);
        CMat moved = a * rho * a.adjoint();
        return moved / moved.trace().real();
    }

private:
    Index dim_s_;
    std::vector<CMat> ops_;
    double completeness_residual_ = 0.0;
};

/// Ring environment of n_cells registers of dimension cell_dim = m+1.
/// Cell 0 receives the outcome copy; the last n_classical ring positions
/// are the classical half, deepest first. The usable-step budget before the
/// ring wraps a record into the quantum half equals n_classical.
struct ChainLayout {
    int cell_dim = 0;
    int n_cells = 0;
    int n_classical = 0;

    ChainLayout(int cell_dim_, int n_cells_, int n_classical_)
        : cell_dim(cell_dim_), n_cells(n_cells_), n_classical(n_classical_) {
        if (cell_dim < 2) throw ParameterError("ChainLayout: cell_dim must be >= 2");
        if (n_classical < 1 || n_cells - n_classical < 1)
            throw ParameterError("ChainLayout: classical and quantum halves must both be nonempty");
    }

    int n_quantum() const { return n_cells - n_classical; }
    int usable_steps() const { return n_classical; }

    Index num_labels() const {
        Index n = 1;
        for (int c = 0; c < n_classical; ++c) n *= cell_dim;
        return n;
    }

    Index quantum_cells_dim() const {
        Index n = 1;
        for (int c = 0; c < n_quantum(); ++c) n *= cell_dim;
        return n;
    }
};

/// Unitary on S kron A extending |psi,0>_SA -> sum_x |A_x psi,x>_SA.
/// The extension is the deterministic isometry completion; completion
/// columns are routed to the remaining apparatus-input slots in index order.
inline CMat build_dilation(const KrausFamily& k) {
    const Index ds = k.dim_s();
    const Index da = static_cast<Index>(k.num_outcomes()) + 1;
    const Index n = ds * da;
    if (n > kDimCap) throw SizeError("build_dilation: dimension exceeds cap");

    CMat v = CMat::Zero(n, ds);
    for (Index s = 0; s < ds; ++s)
        for (int x = 1; x <= k.num_outcomes(); ++x)
            for (Index sp = 0; sp < ds; ++sp) v(sp * da + x, s) += k.op(x)(sp, s);
    CMat w = complete_isometry(v);

    CMat u = CMat::Zero(n, n);
    Index next_completion = ds;
    for (Index col = 0; col < n; ++col) {
        if (col % da == 0)
            u.col(col) = w.col(col / da);  // |s,0> inputs carry the dilation
        else
            u.col(col) = w.col(next_completion++);
    }
    return u;
}

/// Permutation |x,z>_{A,cell0} -> |x, z+x mod cell_dim>: the outcome copy.
/// Modular addition extends the partial |x,0> -> |x,x> prescription to a
/// full unitary.
inline CMat build_copy(int num_outcomes, const ChainLayout& layout) {
    const int base = layout.cell_dim;
    if (num_outcomes + 1 != base)
        throw ParameterError("build_copy: cell_dim must equal num_outcomes + 1");
    const Index n = static_cast<Index>(base) * base;
    CMat u = CMat::Zero(n, n);
    for (int x = 0; x < base; ++x)
        for (int z = 0; z < base; ++z)
            u(static_cast<Index>(x) * base + (z + x) % base, static_cast<Index>(x) * base + z) =
                1.0;
    return u;
}

/// Cyclic left shift on the ring.
inline CMat build_shift(const ChainLayout& layout) {
    return ring_shift_unitary(layout.cell_dim, layout.n_cells);
}

/// The assembled system-apparatus-environment world.
struct EmbeddedWorld {
    EventumModel model;  // window view, classical-first ordering
    CMat unitary;        // same ordering as the view
    ChainLayout layout;
    Index dim_s = 0;
    bool gated = false;

    Index dim_l() const { return model.dim_l(); }

    Label vacuum_label() const {
        return word_label(Word(static_cast<size_t>(layout.n_classical), 0));
    }

    /// rho_S kron |0><0|_A kron |0...0><0...0| on the quantum cells.
    CQState initial_state(const CMat& rho_s) const {
        if (rho_s.rows() != dim_s || rho_s.cols() != dim_s)
            throw ShapeError("initial_state: system state has wrong dimension");
        CMat env = CMat::Zero(layout.cell_dim * layout.quantum_cells_dim(),
                              layout.cell_dim * layout.quantum_cells_dim());
        env(0, 0) = 1.0;  // apparatus and quantum cells all in |0>
        return CQState({{vacuum_label(), 1.0, tensor(rho_s, env)}});
    }

    /// Newest recorded outcome of a classical label (last word entry).
    int newest_outcome(const Label& label) const {
        auto pos = label.rfind('.');
        return std::stoi(pos == std::string::npos ? label : label.substr(pos + 1));
    }

    /// System reduction of a view-space density matrix.
    CMat system_state(const CMat& sigma) const {
        return partial_trace(sigma, dim_s, dim_l() / dim_s, Keep::First);
    }
};

/// Composes dilation, outcome copy and left shift into the one-step unitary
/// U and returns it together with its window view. When gated, dilation and
/// copy are controlled on the classical half being all-zero (no measurement
/// on record), so iterating U only deepens the record.
inline EmbeddedWorld assemble(const KrausFamily& k, const ChainLayout& layout,
                              bool gated = false) {
    const int m = k.num_outcomes();
    if (layout.cell_dim != m + 1)
        throw ParameterError("assemble: layout cell_dim must equal num_outcomes + 1");
    const Index da = layout.cell_dim;
    Index full_dim = k.dim_s() * da;
    for (int c = 0; c < layout.n_cells; ++c) {
        full_dim *= layout.cell_dim;
        if (full_dim > kDimCap) throw SizeError("assemble: dimension exceeds cap");
    }

    // natural factor order: S, A, cell_0.., cell_{N-1}
    const Index cells_dim = full_dim / (k.dim_s() * da);
    const Index tail = cells_dim / da;  // cells 1..N-1

    CMat dil = tensor(build_dilation(k), CMat::Identity(cells_dim, cells_dim));
    CMat copy = tensor(CMat::Identity(k.dim_s(), k.dim_s()),
                       tensor(build_copy(m, layout), CMat::Identity(tail, tail)));
    CMat shift = tensor(CMat::Identity(k.dim_s() * da, k.dim_s() * da), build_shift(layout));

    CMat interaction = copy * dil;
    if (gated) {
        // projector onto "all classical cells read 0"
        CMat cell_proj = CMat::Identity(1, 1);
        for (int c = 0; c < layout.n_cells; ++c) {
            if (c >= layout.n_quantum()) {
                CMat p0 = CMat::Zero(layout.cell_dim, layout.cell_dim);
                p0(0, 0) = 1.0;
                cell_proj = tensor(cell_proj, p0);
            } else {
                cell_proj = tensor(cell_proj, CMat::Identity(layout.cell_dim, layout.cell_dim));
            }
        }
        CMat pi = tensor(CMat::Identity(k.dim_s() * da, k.dim_s() * da), cell_proj);
        interaction = pi * interaction * pi + (CMat::Identity(full_dim, full_dim) - pi);
    }
    CMat u_natural = shift * interaction;

    // classical cells (ring positions N-k..N-1, deepest first) to the front
    std::vector<Index> dims{k.dim_s(), da};
    for (int c = 0; c < layout.n_cells; ++c) dims.push_back(layout.cell_dim);
    std::vector<size_t> new_from_old;
    for (int c = layout.n_quantum(); c < layout.n_cells; ++c)
        new_from_old.push_back(static_cast<size_t>(2 + c));
    new_from_old.push_back(0);
    new_from_old.push_back(1);
    for (int c = 0; c < layout.n_quantum(); ++c) new_from_old.push_back(static_cast<size_t>(2 + c));
    CMat perm = factor_permutation(dims, new_from_old);
    CMat u_cf = perm * u_natural * perm.adjoint();

    const Index dim_l = k.dim_s() * da * layout.quantum_cells_dim();
    EventumModel view = chain_view_from_unitary(u_cf, layout.cell_dim, layout.n_classical, dim_l,
                                                std::nullopt);
    return EmbeddedWorld{std::move(view), std::move(u_cf), layout, k.dim_s(), gated};
}

struct OutcomeStats {
    int outcome = 0;
    double exact_probability = 0.0;
    double empirical_frequency = 0.0;
    double max_trace_distance = 0.0;  // sampled final system states vs A rho A*/p
};

struct ChannelCheckReport {
    std::vector<OutcomeStats> outcomes;
    double max_frequency_deviation = 0.0;
    double max_trace_distance = 0.0;
    int n_traj = 0;
    std::uint64_t seed = 0;
};

inline double trace_distance(const CMat& a, const CMat& b) {
    Eigen::SelfAdjointEigenSolver<CMat> es(CMat(a - b), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

/// Monte-Carlo check that one step of the assembled world realizes the CP
/// map: empirical outcome frequencies against trace(rho A*A) and sampled
/// post-measurement system states against A rho A*/p.
inline ChannelCheckReport channel_check(const KrausFamily& k, const CMat& rho,
                                        const ChainLayout& layout, int n_traj,
                                        std::uint64_t seed, bool gated = false) {
    if (n_traj <= 0) throw ParameterError("channel_check: n_traj must be positive");
    EmbeddedWorld world = assemble(k, layout, gated);
    CQState init = world.initial_state(rho);

    ChannelCheckReport rep;
    rep.n_traj = n_traj;
    rep.seed = seed;
    std::map<int, Index> counts;
    std::map<int, double> worst_dist;
    for (int i = 0; i < n_traj; ++i) {
        Trajectory t =
            sample_trajectory(world.model, init, 1, derive_seed(seed, static_cast<std::uint64_t>(i)));
        const int outcome = world.newest_outcome(t.labels.back());
        ++counts[outcome];
        CMat sys = world.system_state(t.final_dm);
        double dist = trace_distance(sys, k.post_state(outcome, rho));
        worst_dist[outcome] = std::max(worst_dist[outcome], dist);
    }
    for (int x = 1; x <= k.num_outcomes(); ++x) {
        OutcomeStats st;
        st.outcome = x;
        st.exact_probability = k.outcome_probability(x, rho);
        st.empirical_frequency = static_cast<double>(counts[x]) / n_traj;
        st.max_trace_distance = worst_dist.count(x) ? worst_dist[x] : 0.0;
        rep.outcomes.push_back(st);
        rep.max_frequency_deviation = std::max(
            rep.max_frequency_deviation, std::abs(st.empirical_frequency - st.exact_probability));
        rep.max_trace_distance = std::max(rep.max_trace_distance, st.max_trace_distance);
    }
    return rep;
}

}  // namespace eventum
