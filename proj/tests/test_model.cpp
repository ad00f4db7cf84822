#include <catch2/catch_amalgamated.hpp>

#include "eventum/model.hpp"

using namespace eventum;
using Catch::Approx;

namespace {

CMat hadamard() {
    CMat h(2, 2);
    h << 1, 1, 1, -1;
    return h / std::sqrt(2.0);
}

CMat pauli_x() {
    CMat x(2, 2);
    x << 0, 1, 1, 0;
    return x;
}

CMat pauli_z() {
    CMat z(2, 2);
    z << 1, 0, 0, -1;
    return z;
}

CMat ket_proj(int k) {
    CMat p = CMat::Zero(2, 2);
    p(k, k) = 1.0;
    return p;
}

CMat plus_state() {
    CMat p(2, 2);
    p << 0.5, 0.5, 0.5, 0.5;
    return p;
}

/// Three-label cycle 0 -> 1 -> 2 -> 0 as a permutation matrix P|y> = |P(y)>.
CMat cycle3() {
    CMat p = CMat::Zero(3, 3);
    p(1, 0) = p(2, 1) = p(0, 2) = 1.0;
    return p;
}

CMat swap_gate() {
    CMat s = CMat::Zero(4, 4);
    s(0, 0) = s(3, 3) = 1.0;
    s(1, 2) = s(2, 1) = 1.0;
    return s;
}

/// Projective qubit measurement as a window: branch labels x0/x1 feed back
/// into y.
EventumModel projective_model() {
    return EventumModel({"y", "x0", "x1"}, 2, BlockMode::Kraus,
                        {{"x0", "y"}, {"x1", "y"}},
                        {{"x0", ket_proj(0)}, {"x1", ket_proj(1)}});
}

/// Random branching kraus-mode model: every label maps somewhere and every
/// predecessor family is a stacked Haar isometry, so completeness is exact.
EventumModel random_kraus_model(Rng& rng, int num_labels, Index dim_l) {
    std::vector<Label> labels;
    for (int i = 0; i < num_labels; ++i) labels.push_back("L" + std::to_string(i));
    std::uniform_int_distribution<int> pick(0, num_labels - 1);
    std::map<Label, std::vector<Label>> preds;
    std::map<Label, Label> f;
    for (const auto& x : labels) {
        Label y = labels[static_cast<size_t>(pick(rng))];
        f[x] = y;
        preds[y].push_back(x);
    }
    std::map<Label, CMat> blocks;
    for (const auto& [y, xs] : preds) {
        CMat v = haar_isometry(static_cast<Index>(xs.size()) * dim_l, dim_l, rng);
        for (size_t i = 0; i < xs.size(); ++i)
            blocks[xs[i]] = v.block(static_cast<Index>(i) * dim_l, 0, dim_l, dim_l);
    }
    return EventumModel(std::move(labels), dim_l, BlockMode::Kraus, std::move(f),
                        std::move(blocks));
}

/// Random branching model materialized as layers 0..depth; every label in
/// layers below the top keeps at least one predecessor, so states supported
/// on layer 0 can be stepped `depth` times before the window runs out.
EventumModel random_layered_model(Rng& rng, int depth, int width, Index dim_l) {
    std::vector<Label> labels;
    std::map<Label, Label> f;
    std::map<Label, std::vector<Label>> preds;
    auto name = [](int t, int i) { return "t" + std::to_string(t) + "n" + std::to_string(i); };
    for (int i = 0; i < width; ++i) labels.push_back(name(0, i));
    // layers grow by one label: matching children keep every parent
    // steppable, the extra child with a random parent provides branching
    for (int t = 1; t <= depth; ++t) {
        const int prev_size = width + t - 1;
        std::uniform_int_distribution<int> pick(0, prev_size - 1);
        for (int i = 0; i < prev_size + 1; ++i) {
            Label x = name(t, i);
            Label y = name(t - 1, i < prev_size ? i : pick(rng));
            labels.push_back(x);
            f[x] = y;
            preds[y].push_back(x);
        }
    }
    std::map<Label, CMat> blocks;
    for (const auto& [y, xs] : preds) {
        CMat v = haar_isometry(static_cast<Index>(xs.size()) * dim_l, dim_l, rng);
        for (size_t i = 0; i < xs.size(); ++i)
            blocks[xs[i]] = v.block(static_cast<Index>(i) * dim_l, 0, dim_l, dim_l);
    }
    return EventumModel(std::move(labels), dim_l, BlockMode::Kraus, std::move(f),
                        std::move(blocks));
}

/// Uniform CQState over the labels that have materialized predecessors.
CQState random_state_on_steppable_labels(const EventumModel& m, Rng& rng) {
    std::vector<Branch> branches;
    for (const auto& y : m.labels())
        if (!m.predecessors(y).empty()) branches.push_back({y, 0.0, random_density(m.dim_l(), rng)});
    for (auto& b : branches) b.weight = 1.0 / static_cast<double>(branches.size());
    return CQState(std::move(branches));
}

}  // namespace

TEST_CASE("extract_blocks: permutation tensor identity reads off P") {
    CMat u = tensor(cycle3(), CMat::Identity(2, 2));
    auto blocks = extract_blocks(u, 3, 2);
    CMat id = CMat::Identity(2, 2);
    for (Index x = 0; x < 3; ++x)
        for (Index y = 0; y < 3; ++y) {
            const CMat& b = blocks[x][y];
            if (cycle3()(x, y) != Complex(0, 0))
                REQUIRE(residual(CMat(b - id)) == 0.0);
            else
                REQUIRE(residual(b) == 0.0);
        }
}

TEST_CASE("extract_blocks: SWAP blocks are |y><x|") {
    auto blocks = extract_blocks(swap_gate(), 2, 2);
    for (Index x = 0; x < 2; ++x)
        for (Index y = 0; y < 2; ++y) {
            CMat want = CMat::Zero(2, 2);
            want(y, x) = 1.0;
            REQUIRE(residual(CMat(blocks[x][y] - want)) == 0.0);
        }
}

TEST_CASE("extract_blocks: identity splits into delta blocks") {
    auto blocks = extract_blocks(CMat::Identity(6, 6), 3, 2);
    for (Index x = 0; x < 3; ++x)
        for (Index y = 0; y < 3; ++y)
            REQUIRE(residual(blocks[x][y]) == (x == y ? Approx(std::sqrt(2.0)) : Approx(0.0)));
}

TEST_CASE("extract_blocks rejects non-unitary input and bad shapes") {
    REQUIRE_THROWS_AS(extract_blocks(CMat::Ones(4, 4), 2, 2), UnitarityError);
    REQUIRE_THROWS_AS(extract_blocks(CMat::Identity(4, 4), 3, 2), ShapeError);
}

TEST_CASE("infer_f: cycle permutation gives the inverse cycle") {
    auto blocks = extract_blocks(tensor(cycle3(), CMat::Identity(2, 2)), 3, 2);
    auto inf = infer_f(blocks);
    REQUIRE(inf.ok);
    // P maps y to x, so f(x) = y is the inverse cycle
    REQUIRE(inf.f[1] == 0);
    REQUIRE(inf.f[2] == 1);
    REQUIRE(inf.f[0] == 2);
}

TEST_CASE("infer_f: SWAP rows carry two nonzero blocks") {
    auto inf = infer_f(extract_blocks(swap_gate(), 2, 2));
    REQUIRE_FALSE(inf.ok);
    REQUIRE(inf.violations.size() >= 2);
    REQUIRE(inf.violations[0].find("2 nonzero blocks") != std::string::npos);
}

TEST_CASE("infer_f: controlled unitary has identity f") {
    CMat u = CMat::Zero(4, 4);
    u.block(0, 0, 2, 2) = CMat::Identity(2, 2);
    u.block(2, 2, 2, 2) = hadamard();
    auto inf = infer_f(extract_blocks(u, 2, 2));
    REQUIRE(inf.ok);
    REQUIRE(inf.f[0] == 0);
    REQUIRE(inf.f[1] == 1);
}

TEST_CASE("check_compatibility: autonomous permutation world is compatible") {
    Rng rng = make_rng(31);
    CMat u = tensor(cycle3(), haar_unitary(2, rng));
    auto rep = check_compatibility(u, 3, 2);
    REQUIRE(rep.compatible);
    REQUIRE(rep.residual_completeness < 1e-12);
    REQUIRE(rep.residual_coisometry < 1e-12);
    REQUIRE(rep.residual_orthogonality < 1e-12);
    REQUIRE(rep.residual_row_uniqueness < 1e-12);
    REQUIRE(rep.residual_beable_inclusion < 1e-12);
    REQUIRE(rep.residual_predictable_inclusion < 1e-12);
}

TEST_CASE("check_compatibility: SWAP is rejected with row evidence") {
    auto rep = check_compatibility(swap_gate(), 2, 2);
    REQUIRE_FALSE(rep.compatible);
    REQUIRE_FALSE(rep.f_defined);
    REQUIRE_FALSE(rep.violations.empty());
}

TEST_CASE("check_compatibility: Haar-random unitaries are rejected") {
    Rng rng = make_rng(32);
    auto rep = check_compatibility(haar_unitary(6, rng), 3, 2);
    REQUIRE_FALSE(rep.compatible);
    REQUIRE_FALSE(rep.violations.empty());
}

TEST_CASE("reconstruct_u: identity f with blocks {I, H}") {
    EventumModel m({"a", "b"}, 2, BlockMode::Strict, {{"a", "a"}, {"b", "b"}},
                   {{"a", CMat::Identity(2, 2)}, {"b", hadamard()}});
    CMat u = reconstruct_u(m);
    CMat want = CMat::Zero(4, 4);
    want.block(0, 0, 2, 2) = CMat::Identity(2, 2);
    want.block(2, 2, 2, 2) = hadamard();
    REQUIRE(residual(CMat(u - want)) == 0.0);
    REQUIRE(check_compatibility(u, 2, 2).compatible);
}

TEST_CASE("blocks round-trip exactly through reconstruct and extract") {
    Rng rng = make_rng(33);
    std::vector<Label> labels{"p", "q", "r"};
    std::map<Label, Label> f{{"p", "q"}, {"q", "r"}, {"r", "p"}};
    std::map<Label, CMat> blocks{{"p", haar_unitary(3, rng)},
                                 {"q", haar_unitary(3, rng)},
                                 {"r", haar_unitary(3, rng)}};
    EventumModel m(labels, 3, BlockMode::Strict, f, blocks);
    auto extracted = extract_blocks(reconstruct_u(m), 3, 3);
    for (const auto& x : labels) {
        const Index row = m.label_index(x);
        const Index col = m.label_index(f.at(x));
        REQUIRE(residual(CMat(extracted[row][col] - blocks.at(x))) == 0.0);
    }
}

TEST_CASE("reconstruct_u refuses kraus mode and partial windows") {
    REQUIRE_THROWS_AS(reconstruct_u(projective_model()), ModeError);
    // strict chain with a window floor cannot be reassembled into a square unitary
    EventumModel chain({"t0", "t1"}, 2, BlockMode::Strict, {{"t1", "t0"}},
                       {{"t1", hadamard()}});
    REQUIRE_THROWS_AS(reconstruct_u(chain), InvariantError);
}

TEST_CASE("strict mode with non-injective f on a materialized window is excluded") {
    std::map<Label, Label> f{{"a", "c"}, {"b", "c"}, {"c", "c"}};
    std::map<Label, CMat> blocks{{"a", CMat::Identity(2, 2)},
                                 {"b", CMat::Identity(2, 2)},
                                 {"c", CMat::Identity(2, 2)}};
    REQUIRE_THROWS_AS(EventumModel({"a", "b", "c"}, 2, BlockMode::Strict, f, blocks),
                      FiniteBranchingError);
}

TEST_CASE("model constructor checks completeness") {
    // single transition with a non-isometric block
    std::map<Label, Label> f{{"b", "a"}};
    std::map<Label, CMat> blocks{{"b", CMat(0.5 * CMat::Identity(2, 2))}};
    REQUIRE_THROWS_AS(EventumModel({"a", "b"}, 2, BlockMode::Kraus, f, blocks), InvariantError);
}

TEST_CASE("heisenberg_step conjugates by the transition block") {
    EventumModel m({"a", "b"}, 2, BlockMode::Strict, {{"a", "b"}, {"b", "a"}},
                   {{"a", hadamard()}, {"b", hadamard()}});
    auto [y, evolved] = heisenberg_step(m, "a", pauli_z());
    REQUIRE(y == "b");
    REQUIRE(residual(CMat(evolved - pauli_x())) < 1e-12);

    auto [y2, evolved2] = heisenberg_step(m, "a", CMat::Identity(2, 2));
    const CMat& u = m.block("a");
    REQUIRE(residual(CMat(evolved2 - u.adjoint() * u)) < 1e-14);

    REQUIRE_THROWS_AS(heisenberg_step(m, "nope", pauli_z()), LabelError);
    REQUIRE_THROWS_AS(heisenberg_step(m, "a", CMat::Identity(3, 3)), ShapeError);
}

TEST_CASE("schrodinger_step: single successor with identity block is a no-op") {
    EventumModel m({"a"}, 2, BlockMode::Strict, {{"a", "a"}}, {{"a", CMat::Identity(2, 2)}});
    CQState s({{"a", 1.0, plus_state()}});
    CQState out = schrodinger_step(m, s);
    REQUIRE(out.branches().size() == 1);
    REQUIRE(out.branches()[0].weight == Approx(1.0));
    REQUIRE(residual(CMat(out.branches()[0].dm - plus_state())) < 1e-14);
}

TEST_CASE("schrodinger_step: projective branching of |+><+|") {
    CQState s({{"y", 1.0, plus_state()}});
    CQState out = schrodinger_step(projective_model(), s);
    REQUIRE(out.branches().size() == 2);
    const Branch* b0 = out.find("x0");
    const Branch* b1 = out.find("x1");
    REQUIRE(b0 != nullptr);
    REQUIRE(b1 != nullptr);
    REQUIRE(b0->weight == Approx(0.5));
    REQUIRE(b1->weight == Approx(0.5));
    REQUIRE(residual(CMat(b0->dm - ket_proj(0))) < 1e-14);
    REQUIRE(residual(CMat(b1->dm - ket_proj(1))) < 1e-14);
}

TEST_CASE("schrodinger_step preserves state invariants on random models") {
    Rng rng = make_rng(34);
    for (int rep = 0; rep < 10; ++rep) {
        EventumModel m = random_kraus_model(rng, 4, 2);
        CQState s = random_state_on_steppable_labels(m, rng);
        CQState out = schrodinger_step(m, s);  // CQState ctor revalidates
        double total = 0.0;
        for (const auto& b : out.branches()) total += b.weight;
        REQUIRE(total == Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("schrodinger_step raises horizon on exhausted windows") {
    EventumModel chain({"t0", "t1"}, 2, BlockMode::Strict, {{"t1", "t0"}},
                       {{"t1", hadamard()}});
    CQState on_top({{"t1", 1.0, plus_state()}});
    REQUIRE_THROWS_AS(schrodinger_step(chain, on_top), HorizonError);
}

TEST_CASE("sample_trajectory: deterministic models ignore the seed") {
    EventumModel m({"a", "b", "c"}, 2, BlockMode::Strict,
                   {{"a", "b"}, {"b", "c"}, {"c", "a"}},
                   {{"a", CMat::Identity(2, 2)}, {"b", hadamard()}, {"c", hadamard()}});
    CQState init({{"a", 1.0, ket_proj(0)}});
    auto t1 = sample_trajectory(m, init, 5, 1);
    auto t2 = sample_trajectory(m, init, 5, 999);
    REQUIRE(t1.labels == t2.labels);
    // forward jumps land in predecessor sets
    for (size_t t = 0; t + 1 < t1.labels.size(); ++t)
        REQUIRE(m.f().at(t1.labels[t + 1]) == t1.labels[t]);
}

TEST_CASE("sample_trajectory: projective branch frequencies follow the weights") {
    EventumModel m = projective_model();
    CQState init({{"y", 1.0, plus_state()}});
    const int n = 10000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        auto t = sample_trajectory(m, init, 1, 4242 + static_cast<std::uint64_t>(i));
        REQUIRE(t.labels.size() == 2);
        if (t.labels[1] == "x0") ++hits;
        REQUIRE(t.jump_probs[0] == Approx(0.5));
    }
    const double freq = static_cast<double>(hits) / n;
    REQUIRE(std::abs(freq - 0.5) < 4.0 * std::sqrt(0.25 / n));
}

TEST_CASE("sample_trajectory: zero steps returns only the sampled label") {
    CQState init({{"y", 1.0, plus_state()}});
    auto t = sample_trajectory(projective_model(), init, 0, 7);
    REQUIRE(t.labels == std::vector<Label>{"y"});
    REQUIRE(t.jump_probs.empty());
    REQUIRE(residual(CMat(t.final_dm - plus_state())) == 0.0);
}

TEST_CASE("backward_history walks drop-last history strings") {
    std::vector<Label> labels{"0", "0.2", "0.2.1"};
    std::map<Label, Label> f{{"0.2", "0"}, {"0.2.1", "0.2"}};
    std::map<Label, CMat> blocks{{"0.2", CMat::Identity(2, 2)}, {"0.2.1", hadamard()}};
    EventumModel m(labels, 2, BlockMode::Kraus, f, blocks);
    REQUIRE(backward_history(m, "0.2.1", 2) == std::vector<Label>{"0.2.1", "0.2", "0"});
    REQUIRE_THROWS_AS(backward_history(m, "0.2.1", 3), HorizonError);
    REQUIRE_THROWS_AS(backward_history(m, "missing", 1), LabelError);
}

TEST_CASE("backward_history closes a 3-cycle") {
    EventumModel m({"a", "b", "c"}, 2, BlockMode::Strict,
                   {{"a", "b"}, {"b", "c"}, {"c", "a"}},
                   {{"a", CMat::Identity(2, 2)}, {"b", CMat::Identity(2, 2)},
                    {"c", CMat::Identity(2, 2)}});
    auto hist = backward_history(m, "a", 3);
    REQUIRE(hist == std::vector<Label>{"a", "b", "c", "a"});
}

TEST_CASE("sampled trajectories replay through backward_history") {
    Rng rng = make_rng(35);
    EventumModel m = random_layered_model(rng, 6, 3, 2);
    std::vector<Branch> start;
    for (int i = 0; i < 3; ++i)
        start.push_back({"t0n" + std::to_string(i), 1.0 / 3.0, random_density(2, rng)});
    CQState init(start);
    auto t = sample_trajectory(m, init, 6, 77);
    auto hist = backward_history(m, t.labels.back(), 6);
    std::vector<Label> reversed(t.labels.rbegin(), t.labels.rend());
    REQUIRE(hist == reversed);
}

TEST_CASE("duality: Schroedinger and Heisenberg pictures pair identically") {
    Rng rng = make_rng(36);
    for (int rep = 0; rep < 10; ++rep) {
        EventumModel m = random_kraus_model(rng, 4, 2);
        CQState s = random_state_on_steppable_labels(m, rng);
        CMat b = random_hermitian(2, rng);
        for (const auto& x : m.labels())
            REQUIRE(duality_residual(m, s, b, x) < 1e-10);
    }
}

TEST_CASE("duality: autonomous worlds reduce to trace-pairing invariance") {
    Rng rng = make_rng(38);
    EventumModel m({"a", "b"}, 3, BlockMode::Strict, {{"a", "b"}, {"b", "a"}},
                   {{"a", haar_unitary(3, rng)}, {"b", haar_unitary(3, rng)}});
    CQState s({{"a", 0.4, random_density(3, rng)}, {"b", 0.6, random_density(3, rng)}});
    CMat obs = random_hermitian(3, rng);
    REQUIRE(duality_residual(m, s, obs, "a") < 1e-12);
    REQUIRE(duality_residual(m, s, obs, "b") < 1e-12);
}

TEST_CASE("duality: pairing with the identity observable sums to one") {
    Rng rng = make_rng(37);
    EventumModel m = random_kraus_model(rng, 3, 2);
    CQState s = random_state_on_steppable_labels(m, rng);
    CQState stepped = schrodinger_step(m, s);
    const CMat id = CMat::Identity(2, 2);
    double lhs = 0.0, rhs = 0.0;
    for (const auto& x : m.labels()) {
        lhs += state_observable_pairing(stepped, x, id);
        auto [y, evolved] = heisenberg_step(m, x, id);
        rhs += state_observable_pairing(s, y, evolved);
    }
    REQUIRE(lhs == Approx(1.0).epsilon(1e-10));
    REQUIRE(rhs == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("CQState validates weights, positivity and labels") {
    CMat good = ket_proj(0);
    REQUIRE_THROWS_AS(CQState({{"a", -0.2, good}, {"b", 1.2, good}}), InvariantError);
    REQUIRE_THROWS_AS(CQState({{"a", 0.5, good}, {"a", 0.5, good}}), InvariantError);
    REQUIRE_THROWS_AS(CQState({{"a", 1.0, CMat(2.0 * good)}}), InvariantError);
    CMat neg(2, 2);
    neg << 1.5, 0, 0, -0.5;
    REQUIRE_THROWS_AS(CQState({{"a", 1.0, neg}}), InvariantError);
    CMat nonherm(2, 2);
    nonherm << 0.5, 0.5, -0.5, 0.5;
    REQUIRE_THROWS_AS(CQState({{"a", 1.0, nonherm}}), InvariantError);
}

TEST_CASE("alternative_world requires shift structure") {
    REQUIRE_THROWS_AS(alternative_world(projective_model(), CMat::Identity(2, 2)),
                      StructureError);
}
