#include "nmkt/json_io.hpp"

#include <nlohmann/json.hpp>

#include "nmkt/markets.hpp"

namespace nmkt {

namespace {

using nlohmann::json;

Rat rat_field(const json& j, const std::string& path) {
    try {
        if (j.is_number_integer()) return Rat(j.get<long long>());
        if (j.is_string()) return parse_rat(j.get<std::string>());
    } catch (const std::exception& e) {
        throw ParseError(path, e.what());
    }
    throw ParseError(path, "expected a rational as \"p/q\", decimal string, or integer");
}

WeightSpec weight_field(const json& j, const std::string& path) {
    if (!j.is_object()) throw ParseError(path, "expected a weight object");
    const std::string type = j.value("type", "atom");
    if (type == "atom") {
        if (!j.contains("mass")) throw ParseError(path + ".mass", "missing");
        return WeightSpec::atom(rat_field(j.at("mass"), path + ".mass"));
    }
    if (type == "uniform") {
        for (const char* k : {"lo", "hi", "density"})
            if (!j.contains(k)) throw ParseError(path + "." + k, "missing");
        return WeightSpec::segment(rat_field(j.at("lo"), path + ".lo"),
                                   rat_field(j.at("hi"), path + ".hi"),
                                   rat_field(j.at("density"), path + ".density"),
                                   j.value("lo_closed", false), j.value("hi_closed", true));
    }
    throw ParseError(path + ".type", "unknown weight type '" + type + "'");
}

json weight_json(const WeightSpec& w) {
    json j;
    if (w.type == WeightSpec::Type::Atom) {
        j["type"] = "atom";
        j["mass"] = rat_str(w.mass);
    } else {
        j["type"] = "uniform";
        j["lo"] = rat_str(w.lo);
        j["hi"] = rat_str(w.hi);
        j["density"] = rat_str(w.density);
        j["lo_closed"] = w.lo_closed;
        j["hi_closed"] = w.hi_closed;
    }
    return j;
}

}  // namespace

PopulationSpec parse_population_spec(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ParseError("$", e.what());
    }
    if (!root.is_object()) throw ParseError("$", "expected an object");

    PopulationSpec spec;
    const std::string kind = root.value("kind", "");
    if (kind == "trading")
        spec.kind = trading_kind();
    else if (kind == "credit")
        spec.kind = credit_kind();
    else
        throw ParseError("$.kind", "expected \"trading\" or \"credit\"");

    if (root.contains("projects")) {
        const auto& arr = root.at("projects");
        if (!arr.is_array()) throw ParseError("$.projects", "expected an array");
        for (size_t i = 0; i < arr.size(); ++i) {
            const std::string path = "$.projects[" + std::to_string(i) + "]";
            ProjectDistribution proj;
            if (!arr[i].contains("atoms")) throw ParseError(path + ".atoms", "missing");
            for (size_t k = 0; k < arr[i].at("atoms").size(); ++k) {
                const auto& atom = arr[i].at("atoms")[k];
                const std::string apath = path + ".atoms[" + std::to_string(k) + "]";
                if (!atom.is_array() || atom.size() != 2)
                    throw ParseError(apath, "expected [payoff, probability]");
                proj.atoms.push_back(
                    {rat_field(atom[0], apath + "[0]"), rat_field(atom[1], apath + "[1]")});
            }
            spec.projects.push_back(std::move(proj));
        }
    }

    if (root.contains("suppliers")) {
        const auto& arr = root.at("suppliers");
        if (!arr.is_array()) throw ParseError("$.suppliers", "expected an array");
        for (size_t i = 0; i < arr.size(); ++i) {
            const std::string path = "$.suppliers[" + std::to_string(i) + "]";
            const auto& s = arr[i];
            SupplierClass cls;
            cls.weight = weight_field(s.value("weight", json::object()), path + ".weight");
            cls.h0 = s.contains("h0") ? rat_field(s.at("h0"), path + ".h0") : Rat(0);
            if (!s.contains("h1")) throw ParseError(path + ".h1", "missing");
            cls.h1 = rat_field(s.at("h1"), path + ".h1");
            cls.v = s.contains("v") ? rat_field(s.at("v"), path + ".v") : cls.h1;
            spec.suppliers.push_back(std::move(cls));
        }
    }

    if (root.contains("demanders")) {
        const auto& arr = root.at("demanders");
        if (!arr.is_array()) throw ParseError("$.demanders", "expected an array");
        for (size_t i = 0; i < arr.size(); ++i) {
            const std::string path = "$.demanders[" + std::to_string(i) + "]";
            const auto& d = arr[i];
            DemanderClass cls;
            cls.weight = weight_field(d.value("weight", json::object()), path + ".weight");
            if (!d.contains("eta1")) throw ParseError(path + ".eta1", "missing");
            cls.eta1 = rat_field(d.at("eta1"), path + ".eta1");
            if (kind == "credit") {
                if (!d.contains("eta0") || !d.at("eta0").is_object())
                    throw ParseError(path + ".eta0",
                                     "credit demanders need {wealth_fraction, project}");
                const auto& e = d.at("eta0");
                CreditDemander cd;
                cd.wealth_fraction =
                    rat_field(e.at("wealth_fraction"), path + ".eta0.wealth_fraction");
                if (!e.contains("project")) throw ParseError(path + ".eta0.project", "missing");
                cd.project = e.at("project").get<int>();
                cls.eta0 = cd;
            } else {
                if (!d.contains("eta0")) throw ParseError(path + ".eta0", "missing");
                cls.eta0 = rat_field(d.at("eta0"), path + ".eta0");
            }
            spec.demanders.push_back(std::move(cls));
        }
    }

    if (root.contains("truncation")) {
        TruncationNote note;
        note.truncated_at = root.at("truncation").value("truncated_at", 0);
        note.tail = root.at("truncation").value("tail", "");
        spec.truncation = note;
    }

    try {
        spec.validate_structure();
    } catch (const std::exception& e) {
        throw ParseError("$", e.what());
    }
    return spec;
}

std::string population_spec_json(const PopulationSpec& spec) {
    json root;
    root["kind"] = spec.kind.name;
    root["suppliers"] = json::array();
    for (const auto& s : spec.suppliers) {
        json j;
        j["weight"] = weight_json(s.weight);
        j["h0"] = rat_str(s.h0);
        j["h1"] = rat_str(s.h1);
        j["v"] = rat_str(s.v);
        root["suppliers"].push_back(std::move(j));
    }
    root["demanders"] = json::array();
    for (const auto& d : spec.demanders) {
        json j;
        j["weight"] = weight_json(d.weight);
        if (std::holds_alternative<Rat>(d.eta0)) {
            j["eta0"] = rat_str(std::get<Rat>(d.eta0));
        } else {
            const auto& cd = std::get<CreditDemander>(d.eta0);
            j["eta0"] = {{"wealth_fraction", rat_str(cd.wealth_fraction)},
                         {"project", cd.project}};
        }
        j["eta1"] = rat_str(d.eta1);
        root["demanders"].push_back(std::move(j));
    }
    if (!spec.projects.empty()) {
        root["projects"] = json::array();
        for (const auto& p : spec.projects) {
            json atoms = json::array();
            for (const auto& [x, prob] : p.atoms)
                atoms.push_back(json::array({rat_str(x), rat_str(prob)}));
            root["projects"].push_back({{"atoms", std::move(atoms)}});
        }
    }
    if (spec.truncation) {
        root["truncation"] = {{"truncated_at", spec.truncation->truncated_at},
                              {"tail", spec.truncation->tail}};
    }
    return root.dump(2);
}

}  // namespace nmkt
