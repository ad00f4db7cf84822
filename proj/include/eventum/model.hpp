#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eventum/chain.hpp"
#include "eventum/matrix.hpp"
#include "eventum/random.hpp"

namespace eventum {

using Label = std::string;

/// Strict enforces the full blockwise unitarity conditions (completeness,
/// co-isometry, sibling orthogonality); at finite block dimension this
/// limits the model to an injective transition map. Kraus enforces
/// completeness only, which is what a finite window of a branching world
/// can satisfy.
enum class BlockMode { Strict, Kraus };

inline const char* to_string(BlockMode m) { return m == BlockMode::Strict ? "strict" : "kraus"; }

/// Marks a model as a homogeneous cell chain (ring of identical registers
/// with the designated classical half); required by alternative_world.
struct ShiftStructure {
    int cell_dim = 0;
    int n_cells = 0;
    int n_classical = 0;
};

/// Enforce rejects a model that violates its mode's block conditions;
/// Report constructs it anyway so a diagnostic pass can print residuals.
enum class Validation { Enforce, Report };

/// A compatible classical-quantum world materialized on a finite window:
/// classical labels, the backward transition map f (partial at the window
/// floor), and one block operator U_{x,f(x)} per transition.
class EventumModel {
public:
    EventumModel(std::vector<Label> labels, Index dim_l, BlockMode mode,
                 std::map<Label, Label> f, std::map<Label, CMat> blocks,
                 std::optional<ShiftStructure> shift = std::nullopt, double tol = 1e-10,
                 Validation validation = Validation::Enforce)
        : labels_(std::move(labels)),
          dim_l_(dim_l),
          mode_(mode),
          f_(std::move(f)),
          blocks_(std::move(blocks)),
          shift_(shift) {
        if (labels_.empty()) throw InvariantError("EventumModel: label set is empty");
        if (dim_l_ <= 0) throw InvariantError("EventumModel: dim_l must be positive");
        for (Index i = 0; i < static_cast<Index>(labels_.size()); ++i) {
            if (!index_.emplace(labels_[static_cast<size_t>(i)], i).second)
                throw InvariantError("EventumModel: duplicate label '" +
                                     labels_[static_cast<size_t>(i)] + "'");
        }
        for (const auto& [x, y] : f_) {
            if (!index_.count(x) || !index_.count(y))
                throw LabelError("EventumModel: f references unknown label");
            if (!blocks_.count(x))
                throw InvariantError("EventumModel: transition '" + x + "' has no block");
        }
        for (const auto& [x, b] : blocks_) {
            if (!f_.count(x))
                throw InvariantError("EventumModel: block '" + x + "' has no f entry");
            if (b.rows() != dim_l_ || b.cols() != dim_l_)
                throw ShapeError("EventumModel: block '" + x + "' is not dim_l x dim_l");
            if (!all_finite(b)) throw InvariantError("EventumModel: block '" + x + "' not finite");
        }
        // predecessor sets in declared label order
        for (const auto& x : labels_) {
            auto it = f_.find(x);
            if (it != f_.end()) preimages_[it->second].push_back(x);
        }
        const bool enforce = validation == Validation::Enforce;
        if (mode_ == BlockMode::Strict && enforce) {
            for (const auto& [y, xs] : preimages_)
                if (xs.size() > 1)
                    throw FiniteBranchingError(
                        "EventumModel: strict mode with non-injective f ('" + y + "' has " +
                        std::to_string(xs.size()) +
                        " predecessors); branching requires an infinite label set");
        }
        for (const auto& [x, b] : blocks_) effects_.emplace(x, CMat(b.adjoint() * b));
        const CMat id = CMat::Identity(dim_l_, dim_l_);
        for (const auto& [y, xs] : preimages_) {
            CMat sum = CMat::Zero(dim_l_, dim_l_);
            for (const auto& x : xs) sum += effects_.at(x);
            completeness_residual_ = std::max(completeness_residual_, residual(CMat(sum - id)));
        }
        if (enforce && completeness_residual_ >= tol)
            throw InvariantError("EventumModel: completeness residual " +
                                 std::to_string(completeness_residual_) + " exceeds tolerance");
        if (mode_ == BlockMode::Strict && enforce) {
            for (const auto& [x, b] : blocks_) {
                const double r = residual(CMat(b * b.adjoint() - id));
                if (r >= tol)
                    throw InvariantError("EventumModel: strict co-isometry residual " +
                                         std::to_string(r) + " at '" + x + "'");
            }
        }
    }

    const std::vector<Label>& labels() const { return labels_; }
    Index dim_l() const { return dim_l_; }
    BlockMode mode() const { return mode_; }
    const std::map<Label, Label>& f() const { return f_; }
    const std::map<Label, CMat>& blocks() const { return blocks_; }
    const std::optional<ShiftStructure>& shift() const { return shift_; }
    double completeness_residual() const { return completeness_residual_; }

    bool has_label(const Label& x) const { return index_.count(x) > 0; }

    Index label_index(const Label& x) const {
        auto it = index_.find(x);
        if (it == index_.end()) throw LabelError("unknown label '" + x + "'");
        return it->second;
    }

    /// f(x); HorizonError at the window floor.
    const Label& step_back(const Label& x) const {
        if (!has_label(x)) throw LabelError("unknown label '" + x + "'");
        auto it = f_.find(x);
        if (it == f_.end())
            throw HorizonError("label '" + x + "' has no past inside the materialized window");
        return it->second;
    }

    const CMat& block(const Label& x) const {
        auto it = blocks_.find(x);
        if (it == blocks_.end())
            throw LabelError("no transition block for label '" + x + "'");
        return it->second;
    }

    /// Cached U*_{x,f(x)} U_{x,f(x)}; tr(effect(x) sigma) is the jump
    /// probability into x.
    const CMat& effect(const Label& x) const {
        auto it = effects_.find(x);
        if (it == effects_.end())
            throw LabelError("no transition block for label '" + x + "'");
        return it->second;
    }

    /// f^{-1}(y) in declared label order; empty when the window is exhausted.
    const std::vector<Label>& predecessors(const Label& y) const {
        if (!has_label(y)) throw LabelError("unknown label '" + y + "'");
        static const std::vector<Label> kEmpty;
        auto it = preimages_.find(y);
        return it == preimages_.end() ? kEmpty : it->second;
    }

private:
    std::vector<Label> labels_;
    Index dim_l_;
    BlockMode mode_;
    std::map<Label, Label> f_;
    std::map<Label, CMat> blocks_;
    std::optional<ShiftStructure> shift_;
    std::unordered_map<Label, Index> index_;
    std::unordered_map<Label, CMat> effects_;
    std::map<Label, std::vector<Label>> preimages_;
    double completeness_residual_ = 0.0;
};

/// One classical branch of a finitely supported classical-quantum state.
struct Branch {
    Label label;
    double weight = 0.0;
    CMat dm;
};

/// Finitely supported classical-quantum state: sum_x p_x |x><x| kron sigma_x.
class CQState {
public:
    explicit CQState(std::vector<Branch> branches, double tol = 1e-10)
        : branches_(std::move(branches)) {
        if (branches_.empty()) throw InvariantError("CQState: no branches");
        double total = 0.0;
        const Index d = branches_.front().dm.rows();
        std::unordered_map<Label, int> seen;
        for (const auto& b : branches_) {
            if (b.weight < -tol) throw InvariantError("CQState: negative branch weight");
            total += b.weight;
            if (b.dm.rows() != d || b.dm.cols() != d)
                throw ShapeError("CQState: branch density matrices differ in dimension");
            if (!all_finite(b.dm)) throw InvariantError("CQState: non-finite density matrix");
            if (residual(CMat(b.dm - b.dm.adjoint())) >= tol)
                throw InvariantError("CQState: branch '" + b.label + "' not Hermitian");
            if (std::abs(b.dm.trace().real() - 1.0) >= tol || std::abs(b.dm.trace().imag()) >= tol)
                throw InvariantError("CQState: branch '" + b.label + "' not trace one");
            Eigen::SelfAdjointEigenSolver<CMat> es(b.dm, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() <= -tol)
                throw InvariantError("CQState: branch '" + b.label + "' not positive");
            if (++seen[b.label] > 1)
                throw InvariantError("CQState: duplicate branch label '" + b.label + "'");
        }
        if (std::abs(total - 1.0) >= tol)
            throw InvariantError("CQState: weights sum to " + std::to_string(total));
    }

    const std::vector<Branch>& branches() const { return branches_; }
    Index dim() const { return branches_.front().dm.rows(); }

    const Branch* find(const Label& x) const {
        for (const auto& b : branches_)
            if (b.label == x) return &b;
        return nullptr;
    }

private:
    std::vector<Branch> branches_;
};

/// One sampled classical trajectory. labels[0] is the sampled initial label;
/// jump_probs[t] is the probability of the jump taken at step t+1.
struct Trajectory {
    std::uint64_t seed = 0;
    std::vector<Label> labels;
    std::vector<double> jump_probs;
    CMat final_dm;
};

struct CompatibilityReport {
    bool compatible = false;
    bool f_defined = false;
    std::map<Label, Label> f_map;
    double residual_row_uniqueness = std::numeric_limits<double>::quiet_NaN();
    double residual_completeness = std::numeric_limits<double>::quiet_NaN();
    double residual_coisometry = std::numeric_limits<double>::quiet_NaN();
    double residual_orthogonality = std::numeric_limits<double>::quiet_NaN();
    /// U C U* against C and U* A U against A, largest generator residual.
    double residual_beable_inclusion = std::numeric_limits<double>::quiet_NaN();
    double residual_predictable_inclusion = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> violations;
};

/// All num_labels^2 blocks U_{xy} = (<x| kron I) U (|y> kron I), indexed
/// [x][y] (row = output label, column = input label).
inline std::vector<std::vector<CMat>> extract_blocks(const CMat& u, Index num_labels,
                                                     Index dim_l, double tol = 1e-10) {
    if (num_labels <= 0 || dim_l <= 0 || u.rows() != u.cols() || u.rows() != num_labels * dim_l)
        throw ShapeError("extract_blocks: matrix dim must equal num_labels*dim_l");
    if (!is_unitary(u, tol)) throw UnitarityError("extract_blocks: input is not unitary");
    std::vector<std::vector<CMat>> blocks(static_cast<size_t>(num_labels));
    for (Index x = 0; x < num_labels; ++x) {
        blocks[static_cast<size_t>(x)].reserve(static_cast<size_t>(num_labels));
        for (Index y = 0; y < num_labels; ++y)
            blocks[static_cast<size_t>(x)].push_back(
                u.block(x * dim_l, y * dim_l, dim_l, dim_l));
    }
    return blocks;
}

struct InferredF {
    bool ok = false;
    std::vector<Index> f;  // f[x] = y
    std::vector<std::string> violations;
};

/// Reads the nonzero pattern of a block decomposition. Compatible dynamics
/// have exactly one nonzero block per row and at least one per column.
inline InferredF infer_f(const std::vector<std::vector<CMat>>& blocks, double tol = 1e-9) {
    InferredF out;
    const Index n = static_cast<Index>(blocks.size());
    out.f.assign(static_cast<size_t>(n), -1);
    std::vector<int> preimage_count(static_cast<size_t>(n), 0);
    for (Index x = 0; x < n; ++x) {
        std::vector<Index> nonzero;
        for (Index y = 0; y < n; ++y)
            if (residual(blocks[static_cast<size_t>(x)][static_cast<size_t>(y)]) > tol)
                nonzero.push_back(y);
        if (nonzero.size() != 1) {
            out.violations.push_back("row " + std::to_string(x) + " has " +
                                     std::to_string(nonzero.size()) + " nonzero blocks");
        } else {
            out.f[static_cast<size_t>(x)] = nonzero.front();
            ++preimage_count[static_cast<size_t>(nonzero.front())];
        }
    }
    for (Index y = 0; y < n; ++y)
        if (preimage_count[static_cast<size_t>(y)] == 0)
            out.violations.push_back("column " + std::to_string(y) +
                                     " has no nonzero block (f not onto)");
    out.ok = out.violations.empty();
    return out;
}

namespace detail {

/// Distance of m from the beable algebra diag kron C1 (block-diagonal with
/// scalar blocks).
inline double beable_distance(const CMat& m, Index num_labels, Index dim_l) {
    double sq = 0.0;
    const double inv = 1.0 / static_cast<double>(dim_l);
    for (Index x = 0; x < num_labels; ++x)
        for (Index y = 0; y < num_labels; ++y) {
            CMat blk = m.block(x * dim_l, y * dim_l, dim_l, dim_l);
            if (x == y) blk -= (blk.trace() * inv) * CMat::Identity(dim_l, dim_l);
            sq += blk.squaredNorm();
        }
    return std::sqrt(sq);
}

/// Distance of m from the predictable algebra diag kron B(L): the pinch
/// deficit.
inline double predictable_distance(const CMat& m, Index num_labels, Index dim_l) {
    double sq = 0.0;
    for (Index x = 0; x < num_labels; ++x)
        for (Index y = 0; y < num_labels; ++y)
            if (x != y) sq += m.block(x * dim_l, y * dim_l, dim_l, dim_l).squaredNorm();
    return std::sqrt(sq);
}

}  // namespace detail

/// Full blockwise compatibility diagnosis of a unitary against the sector
/// decomposition into num_labels blocks of size dim_l: block pattern, the
/// three unitarity conditions, and the two algebra inclusions.
inline CompatibilityReport check_compatibility(const CMat& u, Index num_labels, Index dim_l,
                                               double tol = 1e-9) {
    auto blocks = extract_blocks(u, num_labels, dim_l);
    auto inferred = infer_f(blocks, tol);

    CompatibilityReport rep;
    rep.violations = inferred.violations;
    rep.f_defined = inferred.ok;

    // second-largest block norm per row; zero for a clean one-hot pattern
    double row_uniq = 0.0;
    for (Index x = 0; x < num_labels; ++x) {
        std::vector<double> norms;
        for (Index y = 0; y < num_labels; ++y)
            norms.push_back(residual(blocks[static_cast<size_t>(x)][static_cast<size_t>(y)]));
        std::sort(norms.begin(), norms.end(), std::greater<double>());
        if (norms.size() > 1) row_uniq = std::max(row_uniq, norms[1]);
    }
    rep.residual_row_uniqueness = row_uniq;

    if (!inferred.ok) return rep;

    for (Index x = 0; x < num_labels; ++x)
        rep.f_map[std::to_string(x)] = std::to_string(inferred.f[static_cast<size_t>(x)]);

    const CMat id = CMat::Identity(dim_l, dim_l);
    double comp = 0.0, coiso = 0.0, ortho = 0.0;
    for (Index y = 0; y < num_labels; ++y) {
        CMat sum = CMat::Zero(dim_l, dim_l);
        std::vector<Index> siblings;
        for (Index x = 0; x < num_labels; ++x)
            if (inferred.f[static_cast<size_t>(x)] == y) siblings.push_back(x);
        for (Index x : siblings) {
            const CMat& b = blocks[static_cast<size_t>(x)][static_cast<size_t>(y)];
            sum += b.adjoint() * b;
            coiso = std::max(coiso, residual(CMat(b * b.adjoint() - id)));
        }
        for (size_t i = 0; i < siblings.size(); ++i)
            for (size_t j = i + 1; j < siblings.size(); ++j) {
                const CMat& bi = blocks[static_cast<size_t>(siblings[i])][static_cast<size_t>(y)];
                const CMat& bj = blocks[static_cast<size_t>(siblings[j])][static_cast<size_t>(y)];
                ortho = std::max(ortho, residual(CMat(bi * bj.adjoint())));
            }
        comp = std::max(comp, residual(CMat(sum - id)));
    }
    rep.residual_completeness = comp;
    rep.residual_coisometry = coiso;
    rep.residual_orthogonality = ortho;

    // direct algebra inclusions: U C U* in C on the beable generators, and
    // U* A U in A on an algebra-generating set of the predictables
    double beable = 0.0, predictable = 0.0;
    const Index dim = num_labels * dim_l;
    for (Index x = 0; x < num_labels; ++x) {
        CMat proj = CMat::Zero(dim, dim);
        proj.block(x * dim_l, x * dim_l, dim_l, dim_l) = id;
        beable = std::max(beable,
                          detail::beable_distance(CMat(u * proj * u.adjoint()), num_labels, dim_l));
        predictable = std::max(
            predictable,
            detail::predictable_distance(CMat(u.adjoint() * proj * u), num_labels, dim_l));
    }
    for (Index p = 0; p < dim_l; ++p)
        for (Index q = 0; q < dim_l; ++q) {
            CMat gen = CMat::Zero(dim, dim);
            for (Index x = 0; x < num_labels; ++x) gen(x * dim_l + p, x * dim_l + q) = 1.0;
            predictable = std::max(
                predictable,
                detail::predictable_distance(CMat(u.adjoint() * gen * u), num_labels, dim_l));
        }
    rep.residual_beable_inclusion = beable;
    rep.residual_predictable_inclusion = predictable;

    rep.compatible = comp < tol && coiso < tol && ortho < tol && row_uniq < tol &&
                     beable < tol && predictable < tol;
    if (!rep.compatible && rep.violations.empty())
        rep.violations.push_back("blockwise unitarity or inclusion residual above tolerance");
    return rep;
}

/// Mode-aware verification of a materialized model: completeness always,
/// the strict conditions when the model claims them. All residuals are
/// reported either way.
inline CompatibilityReport verify_model(const EventumModel& m, double tol = 1e-9) {
    CompatibilityReport rep;
    rep.f_defined = true;
    rep.f_map = m.f();
    rep.residual_row_uniqueness = 0.0;

    const CMat id = CMat::Identity(m.dim_l(), m.dim_l());
    double comp = 0.0, coiso = 0.0, ortho = 0.0;
    for (const auto& x : m.labels()) {
        const auto& preds = m.predecessors(x);
        if (preds.empty()) continue;
        CMat sum = CMat::Zero(m.dim_l(), m.dim_l());
        for (const auto& p : preds) {
            const CMat& b = m.block(p);
            sum += b.adjoint() * b;
            coiso = std::max(coiso, residual(CMat(b * b.adjoint() - id)));
        }
        for (size_t i = 0; i < preds.size(); ++i)
            for (size_t j = i + 1; j < preds.size(); ++j)
                ortho = std::max(ortho,
                                 residual(CMat(m.block(preds[i]) * m.block(preds[j]).adjoint())));
        comp = std::max(comp, residual(CMat(sum - id)));
    }
    rep.residual_completeness = comp;
    rep.residual_coisometry = coiso;
    rep.residual_orthogonality = ortho;

    rep.compatible = comp < tol;
    if (m.mode() == BlockMode::Strict) {
        rep.compatible = rep.compatible && coiso < tol && ortho < tol;
        for (const auto& y : m.labels())
            if (m.predecessors(y).size() > 1) {
                rep.compatible = false;
                rep.violations.push_back("strict mode but '" + y + "' has " +
                                         std::to_string(m.predecessors(y).size()) +
                                         " predecessors (finite branching)");
            }
    }
    if (!rep.compatible && rep.violations.empty())
        rep.violations.push_back("block conditions for " + std::string(to_string(m.mode())) +
                                 " mode exceed tolerance");
    return rep;
}

/// Assembles the full unitary from a strict model whose f is a bijection on
/// the window: block (x, f(x)) holds U_{x,f(x)}, all other blocks vanish.
inline CMat reconstruct_u(const EventumModel& m) {
    if (m.mode() != BlockMode::Strict)
        throw ModeError("reconstruct_u: reconstruction requires a strict-mode model");
    const Index n = static_cast<Index>(m.labels().size());
    const Index d = m.dim_l();
    if (n * d > kDimCap) throw SizeError("reconstruct_u: dimension exceeds cap");
    CMat u = CMat::Zero(n * d, n * d);
    for (const auto& x : m.labels()) {
        if (!m.f().count(x))
            throw InvariantError(
                "reconstruct_u: label '" + x +
                "' has no transition; f must be a bijection on the materialized window");
        const Index row = m.label_index(x);
        const Index col = m.label_index(m.f().at(x));
        u.block(row * d, col * d, d, d) = m.block(x);
    }
    if (!is_unitary(u, 1e-10))
        throw InvariantError("reconstruct_u: assembled matrix is not unitary");
    return u;
}

/// Forwards Heisenberg step of a local observable attached to label x:
/// (x, b) -> (f(x), U* b U).
inline std::pair<Label, CMat> heisenberg_step(const EventumModel& m, const Label& x,
                                              const CMat& b) {
    if (b.rows() != m.dim_l() || b.cols() != m.dim_l())
        throw ShapeError("heisenberg_step: observable must be dim_l x dim_l");
    const Label& y = m.step_back(x);
    const CMat& u = m.block(x);
    return {y, CMat(u.adjoint() * b * u)};
}

struct StepOptions {
    /// Branches with jump probability below this are dropped.
    double prune_threshold = 1e-14;
};

/// Forwards Schroedinger step: every branch (y, p, sigma) splits over the
/// predecessors x of y with probability q_x = tr(sigma U*U), the conditional
/// states are renormalized, and branches that land on the same label merge
/// into a weighted mixture.
inline CQState schrodinger_step(const EventumModel& m, const CQState& s,
                                const StepOptions& opts = {}) {
    if (s.dim() != m.dim_l()) throw ShapeError("schrodinger_step: state dimension mismatch");
    std::map<Index, std::pair<double, CMat>> merged;  // label index -> (weight, weight*dm)
    for (const auto& br : s.branches()) {
        const auto& preds = m.predecessors(br.label);
        if (preds.empty())
            throw HorizonError("schrodinger_step: label '" + br.label +
                               "' has no materialized predecessors (window exhausted)");
        if (br.weight <= 0) continue;
        for (const auto& x : preds) {
            const double q = (m.effect(x) * br.dm).trace().real();
            if (q < opts.prune_threshold) continue;
            const CMat& u = m.block(x);
            CMat moved = u * br.dm * u.adjoint();
            auto& slot = merged.try_emplace(m.label_index(x), 0.0, CMat::Zero(m.dim_l(), m.dim_l()))
                             .first->second;
            slot.first += br.weight * q;
            slot.second += br.weight * moved;  // = weight * q * (moved/q)
        }
    }
    std::vector<Branch> out;
    out.reserve(merged.size());
    for (const auto& [idx, acc] : merged)
        out.push_back({m.labels()[static_cast<size_t>(idx)], acc.first, acc.second / acc.first});
    return CQState(std::move(out));
}

/// Monte-Carlo unraveling of the Schroedinger evolution: samples the initial
/// label from the state's weights, then one predecessor per step with its
/// jump probability. Deterministic for a fixed seed.
inline Trajectory sample_trajectory(const EventumModel& m, const CQState& init, int steps,
                                    std::uint64_t seed) {
    if (steps < 0) throw ParameterError("sample_trajectory: steps must be >= 0");
    if (init.dim() != m.dim_l()) throw ShapeError("sample_trajectory: state dimension mismatch");
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Trajectory traj;
    traj.seed = seed;

    double u = unif(rng);
    const Branch* picked = &init.branches().back();
    for (const auto& b : init.branches()) {
        if (u < b.weight) {
            picked = &b;
            break;
        }
        u -= b.weight;
    }
    Label current = picked->label;
    CMat sigma = picked->dm;
    traj.labels.push_back(current);

    for (int t = 0; t < steps; ++t) {
        const auto& preds = m.predecessors(current);
        if (preds.empty())
            throw HorizonError("sample_trajectory: window exhausted after step " +
                               std::to_string(t) + " at label '" + current + "'");
        std::vector<double> q(preds.size());
        double total = 0.0;
        for (size_t i = 0; i < preds.size(); ++i) {
            q[i] = std::max(0.0, (m.effect(preds[i]) * sigma).trace().real());
            total += q[i];
        }
        double draw = unif(rng) * total;
        size_t chosen = preds.size() - 1;
        for (size_t i = 0; i < preds.size(); ++i) {
            if (draw < q[i]) {
                chosen = i;
                break;
            }
            draw -= q[i];
        }
        current = preds[chosen];
        const CMat& blk = m.block(current);
        sigma = (blk * sigma * blk.adjoint()) / q[chosen];
        traj.labels.push_back(current);
        traj.jump_probs.push_back(q[chosen]);
    }
    traj.final_dm = sigma;
    return traj;
}

/// [x, f(x), ..., f^k(x)]: the deterministic classical history.
inline std::vector<Label> backward_history(const EventumModel& m, const Label& x, int k) {
    if (k < 0) throw ParameterError("backward_history: k must be >= 0");
    std::vector<Label> hist{x};
    if (!m.has_label(x)) throw LabelError("backward_history: unknown label '" + x + "'");
    Label cur = x;
    for (int i = 0; i < k; ++i) {
        cur = m.step_back(cur);
        hist.push_back(cur);
    }
    return hist;
}

/// Pairing <state, delta_x kron b> = p_x tr(sigma_x b).
inline double state_observable_pairing(const CQState& s, const Label& x, const CMat& b) {
    const Branch* br = s.find(x);
    if (!br) return 0.0;
    return br->weight * (br->dm * b).trace().real();
}

/// |<schrodinger_step(s), delta_x kron b> - <s, heisenberg-evolved delta_x kron b>|;
/// vanishes identically when the two pictures agree.
inline double duality_residual(const EventumModel& m, const CQState& s, const CMat& b,
                               const Label& x) {
    const double lhs = state_observable_pairing(schrodinger_step(m, s), x, b);
    auto [y, evolved] = heisenberg_step(m, x, b);
    const double rhs = state_observable_pairing(s, y, evolved);
    return std::abs(lhs - rhs);
}

/// Window view of a ring-of-cells world in classical-first factor ordering:
/// labels are all classical-cell words (deepest first), f drops the newest
/// entry and prepends 0 at the deep end, blocks are read off the unitary.
/// Words with a nonzero deepest entry have exhausted the usable-step budget
/// and keep no predecessors.
inline EventumModel chain_view_from_unitary(const CMat& u_classical_first, int cell_dim,
                                            int n_classical, Index dim_l,
                                            const std::optional<ShiftStructure>& shift,
                                            double tol = 1e-10) {
    Index num_labels = 1;
    for (int c = 0; c < n_classical; ++c) num_labels *= cell_dim;
    auto blocks = extract_blocks(u_classical_first, num_labels, dim_l, tol);

    std::vector<Label> labels;
    std::map<Label, Label> f;
    std::map<Label, CMat> block_map;
    labels.reserve(static_cast<size_t>(num_labels));
    for (Index ix = 0; ix < num_labels; ++ix) {
        Word w = index_to_word(ix, cell_dim, n_classical);
        labels.push_back(word_label(w));
        Word past(w.size());
        past[0] = 0;
        for (size_t i = 1; i < w.size(); ++i) past[i] = w[i - 1];
        const Index iy = word_to_index(past, cell_dim);
        f[labels.back()] = word_label(past);
        block_map[labels.back()] = blocks[static_cast<size_t>(ix)][static_cast<size_t>(iy)];
    }
    return EventumModel(std::move(labels), dim_l, BlockMode::Kraus, std::move(f),
                        std::move(block_map), shift, tol);
}

/// Changes the preferred basis of every cell of a shift-structured world by
/// the cell unitary w, rotating the quantum half correspondingly, and
/// returns the world as seen in the rotated frame. For a plain shift the
/// transported blocks coincide with the originals: the shift remains a
/// shift in any homogeneous product basis.
inline EventumModel alternative_world(const EventumModel& m, const CMat& w) {
    if (!m.shift())
        throw StructureError("alternative_world: model is not a homogeneous cell chain");
    const ShiftStructure& st = *m.shift();
    if (w.rows() != st.cell_dim || w.cols() != st.cell_dim)
        throw ShapeError("alternative_world: cell rotation has wrong dimension");
    if (!is_unitary(w)) throw UnitarityError("alternative_world: cell rotation not unitary");

    CMat u = ring_shift_unitary(st.cell_dim, st.n_cells);
    // classical cells are the last n_classical ring positions, deepest first
    std::vector<Index> dims(static_cast<size_t>(st.n_cells), st.cell_dim);
    std::vector<size_t> new_from_old;
    for (int c = st.n_cells - st.n_classical; c < st.n_cells; ++c)
        new_from_old.push_back(static_cast<size_t>(c));
    for (int c = 0; c < st.n_cells - st.n_classical; ++c)
        new_from_old.push_back(static_cast<size_t>(c));
    CMat perm = factor_permutation(dims, new_from_old);
    CMat u_cf = perm * u * perm.adjoint();

    CMat frame = CMat::Identity(1, 1);
    for (int c = 0; c < st.n_cells; ++c) frame = tensor(frame, w);
    CMat rotated = frame.adjoint() * u_cf * frame;

    Index dim_l = 1;
    for (int c = 0; c < st.n_cells - st.n_classical; ++c) dim_l *= st.cell_dim;
    return chain_view_from_unitary(rotated, st.cell_dim, st.n_classical, dim_l, st);
}

}  // namespace eventum
