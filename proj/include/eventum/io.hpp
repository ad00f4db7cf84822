#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eventum/embedding.hpp"
#include "eventum/model.hpp"

namespace eventum::io {

using nlohmann::json;

inline constexpr const char* kModelFormat = "eventum-model/1";
inline constexpr const char* kStateFormat = "eventum-state/1";
inline constexpr const char* kKrausFormat = "eventum-kraus/1";
inline constexpr const char* kGeneratorsFormat = "eventum-generators/1";
inline constexpr const char* kUnitaryFormat = "eventum-unitary/1";
inline constexpr const char* kRunFormat = "eventum-run/1";

/// Matrices serialize as nested arrays of [re, im] pairs, row by row.
inline json matrix_to_json(const CMat& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j)
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CMat matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ParseError("matrix: expected a nonempty array of rows");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j.at(0).size());
    CMat m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = j.at(static_cast<size_t>(i));
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw ParseError("matrix: ragged rows");
        for (Index k = 0; k < cols; ++k) {
            const json& entry = row.at(static_cast<size_t>(k));
            if (!entry.is_array() || entry.size() != 2)
                throw ParseError("matrix: entries must be [re, im] pairs");
            m(i, k) = Complex(entry.at(0).get<double>(), entry.at(1).get<double>());
        }
    }
    return m;
}

inline void expect_format(const json& j, const char* format) {
    if (!j.is_object() || !j.contains("format") || j.at("format") != format)
        throw ParseError(std::string("expected a \"") + format + "\" document");
}

/// A model file: the model plus free-form provenance that round-trips.
struct ModelFile {
    EventumModel model;
    json provenance;  // null when absent
};

inline json model_to_json(const EventumModel& m, const json& provenance = json()) {
    json j;
    j["format"] = kModelFormat;
    j["mode"] = to_string(m.mode());
    j["dim_l"] = m.dim_l();
    j["labels"] = m.labels();
    json f = json::object();
    for (const auto& [x, y] : m.f()) f[x] = y;
    j["f"] = std::move(f);
    json blocks = json::object();
    for (const auto& [x, b] : m.blocks()) blocks[x] = matrix_to_json(b);
    j["blocks"] = std::move(blocks);
    if (m.shift()) {
        j["shift"] = {{"cell_dim", m.shift()->cell_dim},
                      {"n_cells", m.shift()->n_cells},
                      {"n_classical", m.shift()->n_classical}};
    }
    if (!provenance.is_null()) j["provenance"] = provenance;
    return j;
}

inline ModelFile model_from_json(const json& j, Validation validation = Validation::Enforce) {
    expect_format(j, kModelFormat);
    try {
        const std::string mode_str = j.at("mode").get<std::string>();
        BlockMode mode;
        if (mode_str == "strict")
            mode = BlockMode::Strict;
        else if (mode_str == "kraus")
            mode = BlockMode::Kraus;
        else
            throw ParseError("model: mode must be \"strict\" or \"kraus\"");
        std::vector<Label> labels = j.at("labels").get<std::vector<Label>>();
        std::map<Label, Label> f;
        for (const auto& [x, y] : j.at("f").items()) f[x] = y.get<Label>();
        std::map<Label, CMat> blocks;
        for (const auto& [x, b] : j.at("blocks").items()) blocks[x] = matrix_from_json(b);
        std::optional<ShiftStructure> shift;
        if (j.contains("shift"))
            shift = ShiftStructure{j.at("shift").at("cell_dim").get<int>(),
                                   j.at("shift").at("n_cells").get<int>(),
                                   j.at("shift").at("n_classical").get<int>()};
        EventumModel model(std::move(labels), j.at("dim_l").get<Index>(), mode, std::move(f),
                           std::move(blocks), shift, 1e-10, validation);
        return ModelFile{std::move(model), j.value("provenance", json())};
    } catch (const json::exception& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
}

inline json state_to_json(const CQState& s) {
    json j;
    j["format"] = kStateFormat;
    j["dim_l"] = s.dim();
    json branches = json::array();
    for (const auto& b : s.branches())
        branches.push_back(
            {{"label", b.label}, {"weight", b.weight}, {"dm", matrix_to_json(b.dm)}});
    j["branches"] = std::move(branches);
    return j;
}

inline CQState state_from_json(const json& j) {
    expect_format(j, kStateFormat);
    try {
        std::vector<Branch> branches;
        for (const auto& b : j.at("branches"))
            branches.push_back({b.at("label").get<Label>(), b.at("weight").get<double>(),
                                matrix_from_json(b.at("dm"))});
        return CQState(std::move(branches));
    } catch (const json::exception& e) {
        throw ParseError(std::string("state: ") + e.what());
    }
}

inline json kraus_to_json(const KrausFamily& k) {
    json j;
    j["format"] = kKrausFormat;
    j["dim_s"] = k.dim_s();
    json ops = json::array();
    for (const auto& a : k.ops()) ops.push_back(matrix_to_json(a));
    j["ops"] = std::move(ops);
    return j;
}

inline KrausFamily kraus_from_json(const json& j) {
    expect_format(j, kKrausFormat);
    try {
        std::vector<CMat> ops;
        for (const auto& a : j.at("ops")) ops.push_back(matrix_from_json(a));
        return KrausFamily(j.at("dim_s").get<Index>(), std::move(ops));
    } catch (const json::exception& e) {
        throw ParseError(std::string("kraus: ") + e.what());
    }
}

inline json generators_to_json(const std::vector<CMat>& gens, Index dim) {
    json j;
    j["format"] = kGeneratorsFormat;
    j["dim"] = dim;
    json arr = json::array();
    for (const auto& g : gens) arr.push_back(matrix_to_json(g));
    j["generators"] = std::move(arr);
    return j;
}

inline std::pair<std::vector<CMat>, Index> generators_from_json(const json& j) {
    expect_format(j, kGeneratorsFormat);
    try {
        std::vector<CMat> gens;
        for (const auto& g : j.at("generators")) gens.push_back(matrix_from_json(g));
        return {std::move(gens), j.at("dim").get<Index>()};
    } catch (const json::exception& e) {
        throw ParseError(std::string("generators: ") + e.what());
    }
}

struct UnitaryFile {
    CMat matrix;
    Index num_labels = 0;
    Index dim_l = 0;
};

inline json unitary_to_json(const CMat& u, Index num_labels, Index dim_l) {
    json j;
    j["format"] = kUnitaryFormat;
    j["num_labels"] = num_labels;
    j["dim_l"] = dim_l;
    j["matrix"] = matrix_to_json(u);
    return j;
}

inline UnitaryFile unitary_from_json(const json& j) {
    expect_format(j, kUnitaryFormat);
    try {
        return UnitaryFile{matrix_from_json(j.at("matrix")), j.at("num_labels").get<Index>(),
                           j.at("dim_l").get<Index>()};
    } catch (const json::exception& e) {
        throw ParseError(std::string("unitary: ") + e.what());
    }
}

/// Reproducible record of a batch of sampled trajectories plus summary
/// statistics with exact final-label probabilities and 3-standard-error
/// confidence radii.
struct RunRecord {
    std::uint64_t seed = 0;
    int steps = 0;
    int n_traj = 0;
    std::string model_ref;
    std::vector<Trajectory> trajectories;
    std::map<Label, Index> final_counts;
    std::map<Label, double> exact_final;  // from the exact branch evolution
};

inline RunRecord run_simulation(const EventumModel& model, const CQState& init, int steps,
                                int n_traj, std::uint64_t seed, std::string model_ref = "") {
    if (n_traj <= 0) throw ParameterError("run_simulation: ntraj must be positive");
    RunRecord rec;
    rec.seed = seed;
    rec.steps = steps;
    rec.n_traj = n_traj;
    rec.model_ref = std::move(model_ref);
    rec.trajectories.reserve(static_cast<size_t>(n_traj));
    for (int i = 0; i < n_traj; ++i) {
        rec.trajectories.push_back(
            sample_trajectory(model, init, steps, derive_seed(seed, static_cast<std::uint64_t>(i))));
        ++rec.final_counts[rec.trajectories.back().labels.back()];
    }
    CQState exact = init;
    for (int t = 0; t < steps; ++t) exact = schrodinger_step(model, exact);
    for (const auto& b : exact.branches()) rec.exact_final[b.label] = b.weight;
    return rec;
}

inline json run_record_to_json(const RunRecord& rec) {
    json j;
    j["format"] = kRunFormat;
    j["seed"] = rec.seed;
    j["steps"] = rec.steps;
    j["ntraj"] = rec.n_traj;
    j["model"] = rec.model_ref;
    json trajs = json::array();
    for (size_t i = 0; i < rec.trajectories.size(); ++i) {
        const Trajectory& t = rec.trajectories[i];
        trajs.push_back({{"index", i},
                         {"seed", t.seed},
                         {"labels", t.labels},
                         {"jump_probs", t.jump_probs}});
    }
    j["trajectories"] = std::move(trajs);
    json summary = json::object();
    for (const auto& [label, count] : rec.final_counts) {
        const double freq = static_cast<double>(count) / rec.n_traj;
        json entry{{"count", count}, {"frequency", freq}};
        auto it = rec.exact_final.find(label);
        if (it != rec.exact_final.end()) {
            const double p = it->second;
            entry["exact_probability"] = p;
            entry["radius_3se"] = 3.0 * std::sqrt(p * (1.0 - p) / rec.n_traj);
        }
        summary[label] = std::move(entry);
    }
    j["summary"] = {{"final", std::move(summary)}};
    return j;
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("parse error in '" + path + "': " + e.what());
    }
}

inline std::string dump(const json& j) { return j.dump(1) + "\n"; }

inline void save_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << dump(j);
}

}  // namespace eventum::io
