// eventum: verify, simulate and embed finite classical-quantum worlds.
//
// Exit codes: 0 success / compatible verdict, 1 negative verdict,
// 2 malformed input or parameter error.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eventum/eventum.hpp"

using namespace eventum;
using nlohmann::json;

namespace {

void print_residual(const char* name, double value) {
    std::cout << "  " << name << ": ";
    if (std::isnan(value))
        std::cout << "n/a\n";
    else
        std::cout << value << "\n";
}

void print_report(const CompatibilityReport& rep) {
    if (rep.f_defined) {
        std::cout << "f map (" << rep.f_map.size() << " transitions):\n";
        size_t shown = 0;
        for (const auto& [x, y] : rep.f_map) {
            if (++shown > 32) {
                std::cout << "  ... (" << rep.f_map.size() - 32 << " more)\n";
                break;
            }
            std::cout << "  \"" << x << "\" -> \"" << y << "\"\n";
        }
    } else {
        std::cout << "f map: not well defined\n";
    }
    std::cout << "residuals:\n";
    print_residual("row_uniqueness", rep.residual_row_uniqueness);
    print_residual("completeness", rep.residual_completeness);
    print_residual("coisometry", rep.residual_coisometry);
    print_residual("orthogonality", rep.residual_orthogonality);
    print_residual("beable_inclusion", rep.residual_beable_inclusion);
    print_residual("predictable_inclusion", rep.residual_predictable_inclusion);
    for (const auto& v : rep.violations) std::cout << "finding: " << v << "\n";
    std::cout << "verdict: " << (rep.compatible ? "compatible" : "NOT compatible") << "\n";
}

int cmd_verify(const std::string& path, double tol) {
    json j = io::load_json(path);
    const std::string format = j.value("format", "");
    CompatibilityReport rep;
    if (format == io::kModelFormat) {
        io::ModelFile mf = io::model_from_json(j, Validation::Report);
        std::cout << "model: " << mf.model.labels().size() << " labels, dim_l "
                  << mf.model.dim_l() << ", " << to_string(mf.model.mode()) << " mode\n";
        rep = verify_model(mf.model, tol);
    } else if (format == io::kUnitaryFormat) {
        io::UnitaryFile uf = io::unitary_from_json(j);
        std::cout << "unitary: " << uf.num_labels << " labels, dim_l " << uf.dim_l << "\n";
        rep = check_compatibility(uf.matrix, uf.num_labels, uf.dim_l, tol);
    } else {
        throw ParseError("verify expects a model or unitary document, got '" + format + "'");
    }
    print_report(rep);
    return rep.compatible ? 0 : 1;
}

int cmd_simulate(const std::string& model_path, const std::string& state_path, int steps,
                 int n_traj, std::uint64_t seed, const std::string& out_path) {
    io::ModelFile mf = io::model_from_json(io::load_json(model_path));
    CQState init = io::state_from_json(io::load_json(state_path));
    io::RunRecord rec = io::run_simulation(mf.model, init, steps, n_traj, seed, model_path);
    io::save_json(out_path, io::run_record_to_json(rec));
    std::cout << "simulated " << n_traj << " trajectories of " << steps << " steps (seed " << seed
              << ")\n";
    for (const auto& [label, count] : rec.final_counts) {
        std::cout << "  final \"" << label << "\": " << count << "/" << n_traj;
        auto it = rec.exact_final.find(label);
        if (it != rec.exact_final.end()) std::cout << "  (exact " << it->second << ")";
        std::cout << "\n";
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_embed(const std::string& kraus_path, int cells, int classical, bool gated,
              const std::string& out_path, const std::string& unitary_out) {
    KrausFamily k = io::kraus_from_json(io::load_json(kraus_path));
    ChainLayout layout(k.num_outcomes() + 1, cells, classical);
    EmbeddedWorld world = assemble(k, layout, gated);
    json provenance{{"constructor", "embed"},
                    {"kraus", kraus_path},
                    {"cells", cells},
                    {"classical_cells", classical},
                    {"gated", gated}};
    io::save_json(out_path, io::model_to_json(world.model, provenance));
    std::cout << "embedded " << k.num_outcomes() << "-outcome channel on dim_s " << k.dim_s()
              << "\n";
    std::cout << "usable step budget: " << layout.usable_steps() << "\n";
    std::cout << "wrote " << out_path << "\n";
    if (!unitary_out.empty()) {
        io::save_json(unitary_out,
                      io::unitary_to_json(world.unitary,
                                          static_cast<Index>(world.model.labels().size()),
                                          world.dim_l()));
        std::cout << "wrote " << unitary_out << "\n";
    }
    return 0;
}

int cmd_commutant(const std::string& path) {
    auto [gens, dim] = io::generators_from_json(io::load_json(path));
    for (size_t i = 0; i < gens.size(); ++i)
        if (gens[i].rows() != dim || gens[i].cols() != dim)
            throw ShapeError("generator " + std::to_string(i) + " is not " + std::to_string(dim) +
                             "x" + std::to_string(dim));
    AlgebraBasis c = commutant(gens, dim);
    std::cout << "commutant dimension: " << c.size() << "\n";
    std::cout << "commutative: " << (is_commutative(c) ? "yes" : "no") << "\n";
    std::cout << "center dimension: " << center(c).size() << "\n";
    return 0;
}

int cmd_geiger(double alpha2, double gamma, int horizon, const std::string& out_path,
               const std::string& model_out, const std::string& state_out) {
    if (alpha2 < 0.0 || alpha2 > 1.0)
        throw ParameterError("geiger: --alpha2 must lie in [0, 1]");
    GeigerParams p(std::sqrt(alpha2), std::sqrt(1.0 - alpha2), gamma, horizon);
    json steps = json::array();
    for (int n = 0; n <= horizon; ++n) {
        GeigerStep st = geiger_closed_form(p, n);
        steps.push_back({{"n", n},
                         {"p_click_at_n", st.p_click_at_n},
                         {"p_no_click_through_n", st.p_no_click_through_n},
                         {"cumulative_click", geiger_cumulative_click(p, n)},
                         {"no_click_state", io::matrix_to_json(st.no_click_state)}});
    }
    json j{{"format", "eventum-geiger/1"},
           {"alpha2", alpha2},
           {"gamma", gamma},
           {"horizon", horizon},
           {"steps", std::move(steps)}};
    if (out_path.empty()) {
        std::cout << io::dump(j);
    } else {
        io::save_json(out_path, j);
        std::cout << "wrote " << out_path << "\n";
    }
    auto [model, init] = geiger_model(p);
    json provenance{{"constructor", "geiger"},
                    {"alpha2", alpha2},
                    {"gamma", gamma},
                    {"horizon", horizon}};
    if (!model_out.empty()) {
        io::save_json(model_out, io::model_to_json(model, provenance));
        std::cout << "wrote " << model_out << "\n";
    }
    if (!state_out.empty()) {
        io::save_json(state_out, io::state_to_json(init));
        std::cout << "wrote " << state_out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eventum: finite classical-quantum worlds, their verification and sampling"};
    app.require_subcommand(1);

    std::string path, state_path, out_path, unitary_out, model_out, state_out;
    double tol = 1e-9;
    int steps = 1, n_traj = 1, cells = 3, classical = 2, horizon = 20;
    std::uint64_t seed = 0;
    bool gated = false;
    double alpha2 = 0.5, gamma = 0.2;

    auto* verify = app.add_subcommand("verify", "check a model or unitary file for compatibility");
    verify->add_option("file", path, "model or unitary document")->required();
    verify->add_option("--tolerance", tol, "residual tolerance (default 1e-9)");

    auto* simulate = app.add_subcommand("simulate", "sample seeded stochastic trajectories");
    simulate->add_option("model", path, "model document")->required();
    simulate->add_option("--state", state_path, "initial state document")->required();
    simulate->add_option("--steps", steps, "steps per trajectory")->required();
    simulate->add_option("--ntraj", n_traj, "number of trajectories")->required();
    simulate->add_option("--seed", seed, "base seed (default 0)");
    simulate->add_option("--out", out_path, "run record output path")->required();

    auto* embed = app.add_subcommand("embed", "embed a Kraus family into a chain world");
    embed->add_option("kraus", path, "kraus document")->required();
    embed->add_option("--cells", cells, "environment ring size (default 3)");
    embed->add_option("--classical-cells", classical, "classical half size (default 2)");
    embed->add_flag("--gated", gated, "control the interaction on an empty record");
    embed->add_option("--out", out_path, "model output path")->required();
    embed->add_option("--unitary-out", unitary_out, "also write the composite unitary");

    auto* commutant_cmd = app.add_subcommand("commutant", "commutant of a generator set");
    commutant_cmd->add_option("file", path, "generators document")->required();

    auto* geiger = app.add_subcommand("geiger", "per-step click law of the detector model");
    geiger->add_option("--alpha2", alpha2, "|alpha|^2 of the initial atom state (default 0.5)");
    geiger->add_option("--gamma", gamma, "per-step click probability (default 0.2)");
    geiger->add_option("--horizon", horizon, "history window length (default 20)");
    geiger->add_option("--out", out_path, "records output path (default stdout)");
    geiger->add_option("--emit-model", model_out, "also write the model document");
    geiger->add_option("--emit-state", state_out, "also write the initial state document");

    try {
        app.parse(argc, argv);
        if (verify->parsed()) return cmd_verify(path, tol);
        if (simulate->parsed()) return cmd_simulate(path, state_path, steps, n_traj, seed, out_path);
        if (embed->parsed()) return cmd_embed(path, cells, classical, gated, out_path, unitary_out);
        if (commutant_cmd->parsed()) return cmd_commutant(path);
        if (geiger->parsed())
            return cmd_geiger(alpha2, gamma, horizon, out_path, model_out, state_out);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
