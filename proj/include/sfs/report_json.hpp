#pragma once

/*
 * JSON forms of the pipeline artifacts: detected points, the solver report,
 * and reconstruction metrics.  Every double is rounded to 6 significant
 * digits before it enters a document and nlohmann::json keeps object keys
 * sorted, so identical runs serialize byte-identically.  The solver's
 * wall-clock time never enters a document for the same reason.
 *
 * The report parser is strict: a report drives reconstruction, so a field
 * with the wrong shape means the file is not one of ours (or has been
 * edited) and the safe move is to refuse it.
 */

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfs/singular_points.hpp"
#include "sfs/solver.hpp"

namespace sfs {

inline nlohmann::json points_to_json(const std::vector<SingularPoint>& pts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const SingularPoint& p : pts) {
        arr.push_back({{"id", p.id},
                       {"row", p.pixel.row},
                       {"col", p.pixel.col},
                       {"brightness", round_sig6(p.brightness)},
                       {"kind", to_string(p.kind)}});
    }
    return arr;
}

namespace detail {

inline nlohmann::json signs_to_json(const Configuration& cfg) {
    nlohmann::json arr = nlohmann::json::array();
    for (int s : cfg.sign) arr.push_back(s);
    return arr;
}

inline Configuration signs_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) throw bad_input_error(std::string("report: ") + what + " must be an array");
    Configuration cfg;
    for (const auto& v : j) {
        if (!v.is_number_integer() || (v.get<int>() != 1 && v.get<int>() != -1))
            throw bad_input_error(std::string("report: ") + what + " entries must be +1 or -1");
        cfg.sign.push_back(v.get<int>());
    }
    return cfg;
}

inline std::vector<int> ints_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) throw bad_input_error(std::string("report: ") + what + " must be an array");
    std::vector<int> out;
    for (const auto& v : j) {
        if (!v.is_number_integer())
            throw bad_input_error(std::string("report: ") + what + " entries must be integers");
        out.push_back(v.get<int>());
    }
    return out;
}

}  // namespace detail

inline nlohmann::json report_to_json(const SolverReport& rep) {
    nlohmann::json classes = nlohmann::json::array();
    for (const AmbiguityClass& cls : rep.classes) {
        classes.push_back({{"unit", to_string(cls.unit)},
                           {"edges", cls.edges},
                           {"vertices", cls.vertices},
                           {"candidates", nlohmann::json::array({
                                              detail::signs_to_json(cls.candidates[0]),
                                              detail::signs_to_json(cls.candidates[1]),
                                          })}});
    }
    nlohmann::json part_objective = nlohmann::json::array();
    for (double v : rep.part_objective) part_objective.push_back(round_sig6(v));
    return {{"chosen", detail::signs_to_json(rep.chosen)},
            {"classes", classes},
            {"part_objective", part_objective},
            {"nodes_explored", rep.nodes_explored}};
}

inline SolverReport report_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw bad_input_error("report: top level must be a JSON object");
    for (const char* key : {"chosen", "classes", "part_objective", "nodes_explored"})
        if (!doc.contains(key))
            throw bad_input_error(std::string("report: missing field \"") + key + "\"");

    SolverReport rep;
    rep.chosen = detail::signs_from_json(doc["chosen"], "chosen");

    if (!doc["classes"].is_array()) throw bad_input_error("report: classes must be an array");
    for (const auto& jc : doc["classes"]) {
        if (!jc.is_object() || !jc.contains("unit") || !jc.contains("edges") ||
            !jc.contains("vertices") || !jc.contains("candidates"))
            throw bad_input_error("report: malformed ambiguity class");
        AmbiguityClass cls;
        const std::string unit = jc["unit"].is_string() ? jc["unit"].get<std::string>() : "";
        if (unit == "free_edge")
            cls.unit = UnitKind::free_edge;
        else if (unit == "free_part")
            cls.unit = UnitKind::free_part;
        else if (unit == "global")
            cls.unit = UnitKind::global;
        else
            throw bad_input_error("report: unknown unit kind '" + unit + "'");
        cls.edges = detail::ints_from_json(jc["edges"], "class edges");
        cls.vertices = detail::ints_from_json(jc["vertices"], "class vertices");
        if (!jc["candidates"].is_array() || jc["candidates"].size() != 2)
            throw bad_input_error("report: a class must list exactly 2 candidates");
        for (int k = 0; k < 2; ++k) {
            cls.candidates[k] = detail::signs_from_json(jc["candidates"][k], "candidate");
            if (cls.candidates[k].sign.size() != rep.chosen.sign.size())
                throw bad_input_error("report: candidate sign count does not match chosen");
        }
        rep.classes.push_back(std::move(cls));
    }

    if (!doc["part_objective"].is_array())
        throw bad_input_error("report: part_objective must be an array");
    for (const auto& v : doc["part_objective"]) {
        if (!v.is_number()) throw bad_input_error("report: part_objective entries must be numbers");
        rep.part_objective.push_back(v.get<double>());
    }

    if (!doc["nodes_explored"].is_number_integer())
        throw bad_input_error("report: nodes_explored must be an integer");
    rep.nodes_explored = doc["nodes_explored"].get<std::int64_t>();
    return rep;
}

// One dump style for every artifact: 2-space indent and a trailing newline,
// so goldens diff cleanly line by line.
inline void write_json_file(const std::string& path, const nlohmann::json& doc) {
    std::ofstream out(path);
    if (!out) throw bad_input_error("cannot open '" + path + "' for writing");
    out << doc.dump(2) << "\n";
    if (!out) throw bad_input_error("short write to '" + path + "'");
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw bad_input_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw bad_input_error("'" + path + "' is not valid JSON: " + e.what());
    }
}

}  // namespace sfs
