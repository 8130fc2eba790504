// Command-line front end for the normal-market solver: validate populations,
// compute equilibria, export curve/graph geometry, replay equilibria through
// the finite mechanism, and verify candidates.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "nmkt/json_io.hpp"
#include "nmkt/markets.hpp"
#include "nmkt/mechanism.hpp"
#include "nmkt/solver.hpp"

namespace {

constexpr const char* kVersion = "nmkt 0.1.0";

using nmkt::Rat;

nmkt::PopulationSpec load_spec(const std::string& source) {
    if (source.rfind("fixture:", 0) == 0) return nmkt::fixture(source.substr(8)).spec;
    std::ifstream in(source);
    if (!in) throw nmkt::ParseError("$", "cannot open spec file " + source);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return nmkt::parse_population_spec(text);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const std::string& spec_source, uint64_t seed) {
    nlohmann::json m;
    m["command"] = command;
    m["spec"] = spec_source;
    m["seed"] = seed;
    m["output_directory"] = dir.string();
    m["tool_version"] = kVersion;
    m["timestamp"] = static_cast<long long>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    write_file(dir / "manifest.json", m.dump(2) + "\n");
}

uint64_t effective_seed(uint64_t cli_seed) {
    if (const char* env = std::getenv("NM_SEED")) return std::strtoull(env, nullptr, 10);
    return cli_seed;
}

std::string human_summary(const nmkt::EquilibriumSet& eq) {
    using Kind = nmkt::EquilibriumSet::Kind;
    std::ostringstream out;
    const auto cls = nmkt::classify(eq);
    switch (eq.kind) {
        case Kind::Empty: out << "no equilibrium"; break;
        case Kind::UniquePositiveProfit: out << "unique equilibrium"; break;
        case Kind::ZeroProfitFamily:
            out << (cls.unique ? "unique zero-profit equilibrium" : "zero-profit equilibria");
            break;
    }
    if (!eq.representatives.empty()) {
        const auto& c = eq.representatives.front();
        if (!c.supply.atoms.empty()) {
            out << "; supply price " << nmkt::rat_str(c.supply.atoms.front().first) << " ("
                << nmkt::rat_decimal(c.supply.atoms.front().first) << ")";
            out << "; traded volume " << nmkt::rat_str(c.supply.atoms.front().second) << " ("
                << nmkt::rat_decimal(c.supply.atoms.front().second) << ")";
        }
        out << "; demand price" << (c.demand.atoms.size() > 1 ? "s" : "");
        for (const auto& [r, mass] : c.demand.atoms) out << " " << nmkt::rat_str(r);
        out << "; rationing: " << (c.rationing ? "yes" : "no");
    }
    return out.str();
}

std::string candidate_violation_or_empty(const nmkt::VerifyResult& v) {
    return v.pass ? "" : v.violated_clause;
}

nmkt::EquilibriumCandidate parse_candidate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw nmkt::ParseError("$", "cannot open candidate file " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    nmkt::EquilibriumCandidate cand;
    if (j.contains("supply") && !j.at("supply").at("price").is_null()) {
        cand.supply.atoms.push_back(
            {nmkt::parse_rat(j.at("supply").at("price").get<std::string>()),
             nmkt::parse_rat(j.at("supply").at("mass").get<std::string>())});
    }
    if (j.contains("q")) cand.q = nmkt::parse_rat(j.at("q").get<std::string>());
    if (j.contains("demand"))
        for (const auto& atom : j.at("demand").at("atoms"))
            cand.demand.atoms.push_back({nmkt::parse_rat(atom[0].get<std::string>()),
                                         nmkt::parse_rat(atom[1].get<std::string>())});
    cand.demand.normalize();
    return cand;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"normal market equilibria: solver, graphs, and mechanism simulator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string spec_source, out_dir = ".", candidate_path;
    int n_agents = 10000, n_mediators = 100, reps = 50;
    uint64_t seed = 0;
    std::string mu_bar_text = "0";

    auto* validate = app.add_subcommand("validate", "check the market regularity conditions");
    validate->add_option("spec", spec_source)->required();

    auto* solve = app.add_subcommand("solve", "compute the competitive equilibria");
    solve->add_option("spec", spec_source)->required();
    solve->add_option("--out", out_dir, "output directory");

    auto* graph = app.add_subcommand("graph", "export curves and graph geometry");
    graph->add_option("spec", spec_source)->required();
    graph->add_option("--out", out_dir, "output directory");

    auto* simulate = app.add_subcommand("simulate", "replay the equilibrium in the mechanism");
    simulate->add_option("spec", spec_source)->required();
    simulate->add_option("--n", n_agents, "suppliers and demanders per side");
    simulate->add_option("--mediators", n_mediators);
    simulate->add_option("--reps", reps);
    simulate->add_option("--seed", seed);
    simulate->add_option("--mu-bar", mu_bar_text, "capacity threshold");
    simulate->add_option("--out", out_dir);

    auto* verify = app.add_subcommand("verify", "verify an equilibrium candidate");
    verify->add_option("spec", spec_source)->required();
    verify->add_option("candidate", candidate_path)->required();

    auto* fixtures = app.add_subcommand("fixtures", "list built-in examples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (validate->parsed()) {
            const auto spec = load_spec(spec_source);
            const auto report = nmkt::validate_well_behaved(spec);
            for (const auto& v : report.verdicts) {
                std::cout << "condition " << v.id << " (" << v.name << "): "
                          << (v.pass ? "pass" : "FAIL");
                if (!v.detail.empty()) std::cout << "  [" << v.detail << "]";
                std::cout << "\n";
            }
            return report.all_pass() ? 0 : 1;
        }
        if (solve->parsed()) {
            const auto spec = load_spec(spec_source);
            const auto eq = nmkt::find_equilibria(spec);
            std::filesystem::create_directories(out_dir);
            write_file(std::filesystem::path(out_dir) / "equilibria.json",
                       nmkt::equilibria_json(eq) + "\n");
            write_manifest(out_dir, "solve", spec_source, 0);
            std::cout << human_summary(eq) << "\n";
            return 0;
        }
        if (graph->parsed()) {
            const auto spec = load_spec(spec_source);
            const auto g = nmkt::build_geometry(spec);
            std::filesystem::create_directories(out_dir);
            const std::filesystem::path dir(out_dir);
            write_file(dir / "real_supply.csv", nmkt::correspondence_csv(g.supply_side.corr));
            write_file(dir / "real_demand.csv", nmkt::correspondence_csv(g.demand_side.corr));
            write_file(dir / "demand_revenue.csv", nmkt::unit_curve_csv(g.demand_side.revenue));
            write_file(dir / "supply_cost_upper.csv",
                       nmkt::unit_curve_csv(g.supply_side.cost_upper));
            write_file(dir / "supply_cost_lower.csv",
                       nmkt::unit_curve_csv(g.supply_side.cost_lower));
            write_file(dir / "demand_graph.json", nmkt::point_set_json(g.demand.graph) + "\n");
            write_file(dir / "supply_graph.json", nmkt::point_set_json(g.supply.graph) + "\n");
            write_file(dir / "border_v0.json", nmkt::point_set_json(g.demand.border0) + "\n");
            write_file(dir / "border_v1.json", nmkt::point_set_json(g.demand.border1) + "\n");
            write_file(dir / "border_v2.json", nmkt::point_set_json(g.demand.border2) + "\n");
            write_file(dir / "border_v3.json", nmkt::point_set_json(g.demand.border3) + "\n");
            write_file(dir / "demand_graph.csv", nmkt::point_set_csv(g.demand.graph));
            write_file(dir / "supply_graph.csv", nmkt::point_set_csv(g.supply.graph));
            write_manifest(dir, "graph", spec_source, 0);
            std::cout << "graph exports written to " << out_dir << "\n";
            return 0;
        }
        if (simulate->parsed()) {
            const auto spec = load_spec(spec_source);
            const auto eq = nmkt::find_equilibria(spec);
            if (eq.representatives.empty()) {
                std::cerr << "no equilibrium to replay\n";
                return 1;
            }
            const uint64_t s = effective_seed(seed);
            const auto report = nmkt::equilibrium_replay(
                spec, eq.representatives.front(), n_agents, n_mediators, n_agents, reps, s,
                nmkt::parse_rat(mu_bar_text));
            std::filesystem::create_directories(out_dir);
            nlohmann::json j;
            j["replications"] = report.replications;
            j["mean_traded_per_capita"] = nmkt::rat_str(report.mean_traded);
            j["stddev_traded"] = report.stddev_traded;
            j["supply_price_degenerate"] = report.supply_price_degenerate;
            j["eq_supply_price"] = nmkt::rat_str(report.eq_supply_price);
            j["any_truncated"] = report.any_truncated;
            for (const auto& [price, vol] : report.demand_price_volume)
                j["demand_price_volume"][nmkt::rat_str(price)] = nmkt::rat_str(vol);
            for (const auto& t : report.traded_per_capita)
                j["traded_per_capita"].push_back(nmkt::rat_str(t));
            write_file(std::filesystem::path(out_dir) / "convergence.json", j.dump(2) + "\n");
            // one traced run for inspection
            auto inst = nmkt::sample_finite_market(spec, std::min(n_agents, 200), n_mediators,
                                                   std::min(n_agents, 200), s);
            std::vector<nmkt::MediatorStrategy> strategies(n_mediators);
            for (auto& st : strategies) {
                st = nmkt::passive_mediator();
                st.no_bid = false;
                st.counter_supply_price = report.eq_supply_price;
                st.counter_demand_price =
                    eq.representatives.front().demand.atoms.front().first;
            }
            nmkt::MechanismConfig config;
            config.seed = s;
            config.want_trace = true;
            config.mu_bar = nmkt::parse_rat(mu_bar_text);
            auto run = nmkt::run_market(inst, strategies, config);
            write_file(std::filesystem::path(out_dir) / "trace.ndjson", run.trace);
            write_manifest(out_dir, "simulate", spec_source, s);
            std::cout << "mean traded volume per capita: " << nmkt::rat_decimal(report.mean_traded)
                      << " (sd " << report.stddev_traded << ") across " << reps
                      << " replications\n";
            return 0;
        }
        if (verify->parsed()) {
            const auto spec = load_spec(spec_source);
            const auto cand = parse_candidate(candidate_path);
            const auto verdict = nmkt::verify_equilibrium(spec, cand);
            if (verdict.pass) {
                std::cout << "pass\n";
                for (const auto& note : verdict.notes) std::cout << "note: " << note << "\n";
                return 0;
            }
            std::cout << "FAIL: " << candidate_violation_or_empty(verdict) << "\n";
            for (const auto& note : verdict.notes) std::cout << "note: " << note << "\n";
            return 1;
        }
        if (fixtures->parsed()) {
            for (const auto& line : nmkt::fixture_catalog()) std::cout << line << "\n";
            return 0;
        }
    } catch (const nmkt::ParseError& e) {
        std::cerr << "spec error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
