#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "eventum/model.hpp"

namespace eventum {

/// Two-level atom watched by a detector that clicks with per-step
/// probability gamma while the atom is excited. alpha, beta are the initial
/// amplitudes on |0> and |1>; horizon bounds the materialized history.
struct GeigerParams {
    Complex alpha{1.0, 0.0};
    Complex beta{0.0, 0.0};
    double gamma = 0.5;
    int horizon = 20;

    GeigerParams(Complex a, Complex b, double g, int t) : alpha(a), beta(b), gamma(g), horizon(t) {
        const double norm = std::norm(alpha) + std::norm(beta);
        if (std::abs(norm - 1.0) >= 1e-12)
            throw ParameterError("GeigerParams: |alpha|^2 + |beta|^2 must be 1");
        if (!(gamma > 0.0 && gamma <= 1.0))
            throw ParameterError("GeigerParams: gamma must lie in (0, 1]");
        if (horizon <= 0) throw ParameterError("GeigerParams: horizon must be positive");
    }
};

/// Detector history strings over {n, c}: at most one click, only quiet
/// steps after it. Labels are ordered by length, then lexicographically.
inline std::vector<Label> geiger_labels(int horizon) {
    std::vector<Label> labels{""};
    std::vector<Label> frontier{""};
    for (int t = 0; t < horizon; ++t) {
        std::vector<Label> next;
        for (const auto& y : frontier) {
            next.push_back(y + "n");
            if (y.find('c') == std::string::npos) next.push_back(y + "c");
        }
        labels.insert(labels.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return labels;
}

/// No-click block: |0><0| + sqrt(1-gamma)|1><1|.
inline CMat geiger_no_click_block(double gamma) {
    CMat v = CMat::Zero(2, 2);
    v(0, 0) = 1.0;
    v(1, 1) = std::sqrt(1.0 - gamma);
    return v;
}

/// Click block: sqrt(gamma)|0><1| (the excitation is emitted, the atom
/// drops to |0>).
inline CMat geiger_click_block(double gamma) {
    CMat v = CMat::Zero(2, 2);
    v(0, 1) = std::sqrt(gamma);
    return v;
}

/// The Geiger world as a kraus-mode window plus its initial state. History
/// grows one symbol per step; f drops the last symbol. After a click the
/// only successor is a quiet no-op with the atom frozen.
inline std::pair<EventumModel, CQState> geiger_model(const GeigerParams& p) {
    std::vector<Label> labels = geiger_labels(p.horizon);
    std::map<Label, Label> f;
    std::map<Label, CMat> blocks;
    for (const auto& x : labels) {
        if (x.empty()) continue;
        const Label past = x.substr(0, x.size() - 1);
        f[x] = past;
        if (x.back() == 'c')
            blocks[x] = geiger_click_block(p.gamma);
        else if (past.find('c') != std::string::npos)
            blocks[x] = CMat::Identity(2, 2);  // post-click: nothing happens
        else
            blocks[x] = geiger_no_click_block(p.gamma);
    }
    EventumModel model(std::move(labels), 2, BlockMode::Kraus, std::move(f), std::move(blocks));

    CMat dm(2, 2);
    dm(0, 0) = std::norm(p.alpha);
    dm(0, 1) = p.alpha * std::conj(p.beta);
    dm(1, 0) = p.beta * std::conj(p.alpha);
    dm(1, 1) = std::norm(p.beta);
    return {std::move(model), CQState({{"", 1.0, dm}})};
}

struct GeigerStep {
    double p_click_at_n = 0.0;       // |beta|^2 gamma (1-gamma)^{n-1}
    double p_no_click_through_n = 0.0;
    CMat no_click_state;             // conditional atom state after n quiet steps
};

/// Closed form of the Geiger recursion after n steps: geometric click law
/// and the conditional no-click state drifting toward |0>.
inline GeigerStep geiger_closed_form(const GeigerParams& p, int n) {
    if (n < 0 || n > p.horizon)
        throw ParameterError("geiger_closed_form: n must lie in 0..horizon");
    GeigerStep out;
    const double b2 = std::norm(p.beta);
    out.p_click_at_n = (n == 0) ? 0.0 : b2 * p.gamma * std::pow(1.0 - p.gamma, n - 1);
    const Complex a = p.alpha;
    const Complex b = p.beta * std::pow(1.0 - p.gamma, n / 2.0);
    const double norm = std::norm(a) + std::norm(b);
    out.p_no_click_through_n = norm;
    out.no_click_state = CMat::Zero(2, 2);
    out.no_click_state(0, 0) = std::norm(a) / norm;
    out.no_click_state(0, 1) = a * std::conj(b) / norm;
    out.no_click_state(1, 0) = b * std::conj(a) / norm;
    out.no_click_state(1, 1) = std::norm(b) / norm;
    return out;
}

/// P(click at some step <= n) = |beta|^2 (1 - (1-gamma)^n).
inline double geiger_cumulative_click(const GeigerParams& p, int n) {
    return std::norm(p.beta) * (1.0 - std::pow(1.0 - p.gamma, n));
}

/// Deterministic world: forward permutation of the labels with one unitary
/// block per landing label. f is the inverse permutation.
inline EventumModel autonomous_model(const std::vector<Label>& labels,
                                     const std::map<Label, Label>& perm,
                                     const std::map<Label, CMat>& blocks) {
    std::map<Label, Label> f;
    for (const auto& y : labels) {
        auto it = perm.find(y);
        if (it == perm.end())
            throw ParameterError("autonomous_model: permutation undefined at '" + y + "'");
        if (!f.emplace(it->second, y).second)
            throw FiniteBranchingError(
                "autonomous_model: forward map is not a bijection on the labels");
    }
    Index dim_l = blocks.empty() ? 0 : blocks.begin()->second.rows();
    return EventumModel(labels, dim_l, BlockMode::Strict, std::move(f), blocks);
}

/// Plain ring of two-level cells with the designated classical half; the
/// substrate for alternative-world experiments.
inline EventumModel qubit_chain_shift(int n_cells) {
    if (n_cells < 2) throw ParameterError("qubit_chain_shift: need at least two cells");
    const int n_classical = n_cells / 2;
    ShiftStructure st{2, n_cells, n_classical};

    CMat u = ring_shift_unitary(2, n_cells);
    std::vector<Index> dims(static_cast<size_t>(n_cells), 2);
    std::vector<size_t> new_from_old;
    for (int c = n_cells - n_classical; c < n_cells; ++c)
        new_from_old.push_back(static_cast<size_t>(c));
    for (int c = 0; c < n_cells - n_classical; ++c) new_from_old.push_back(static_cast<size_t>(c));
    CMat perm = factor_permutation(dims, new_from_old);

    Index dim_l = 1;
    for (int c = 0; c < n_cells - n_classical; ++c) dim_l *= 2;
    return chain_view_from_unitary(CMat(perm * u * perm.adjoint()), 2, n_classical, dim_l, st);
}

}  // namespace eventum
