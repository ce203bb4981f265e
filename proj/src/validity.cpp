#include "connsim/validity.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "connsim/errors.hpp"
#include "connsim/importance.hpp"

namespace connsim {

using nlohmann::json;

std::string to_string(const Transition& t) {
    return std::string(to_string(t.from)) + "->" + std::string(to_string(t.to));
}

std::vector<Transition> default_forbidden_transitions() {
    return {{Stage::RR, Stage::CIS}, {Stage::PP, Stage::CIS}, {Stage::SP, Stage::CIS}};
}

CheckerConfig CheckerConfig::for_initial_graph(const Connectome& g0, double fraction) {
    if (!(fraction >= 0.0)) throw ContractViolation("threshold fraction must be non-negative");
    CheckerConfig cfg;
    cfg.threshold = ceil_count(fraction * static_cast<double>(g0.edge_count()));
    return cfg;
}

std::size_t removed_edge_count(const Connectome& prev, const Connectome& cur) {
    if (prev.node_count() != cur.node_count()) {
        throw ContractViolation("checker graphs differ in node count");
    }
    std::size_t n = 0;
    for (const Edge& e : prev.active_edges()) n += !cur.is_active(e.x, e.y);
    return n;
}

ValidityVerdict check(const Connectome& prev_g, const Connectome& cur_g,
                      const StageProbabilities& prev_r, const StageProbabilities& cur_r,
                      const CheckerConfig& cfg) {
    ValidityVerdict v;
    v.removed_edge_count = removed_edge_count(prev_g, cur_g);
    v.severe = v.removed_edge_count > cfg.threshold;
    if (!v.severe) return v;
    const Transition step{prev_r.argmax(), cur_r.argmax()};
    if (std::find(cfg.forbidden.begin(), cfg.forbidden.end(), step) != cfg.forbidden.end()) {
        v.tag = VerdictTag::Fail;
        v.violated_rule = step;
    }
    return v;
}

namespace {

Stage stage_field(const json& j, const std::string& where) {
    if (!j.is_string()) throw ValidationError(where + ": stage must be a string");
    const auto s = parse_stage(j.get<std::string>());
    if (!s) throw ValidationError(where + ": unknown stage '" + j.get<std::string>() + "'");
    return *s;
}

}  // namespace

CheckerConfig parse_rules(const std::string& json_text, const CheckerConfig& base) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("rule file: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("rule file: top level must be an object");
    CheckerConfig cfg = base;
    if (auto it = doc.find("threshold"); it != doc.end()) {
        if (!it->is_number_unsigned()) {
            throw ValidationError("rule file: threshold must be a non-negative integer");
        }
        cfg.threshold = it->get<std::size_t>();
    }
    if (auto it = doc.find("forbidden"); it != doc.end()) {
        if (!it->is_array()) throw ValidationError("rule file: forbidden must be a list");
        cfg.forbidden.clear();
        for (std::size_t i = 0; i < it->size(); ++i) {
            const json& pair = (*it)[i];
            const std::string where = "rule file: forbidden[" + std::to_string(i) + "]";
            if (!pair.is_array() || pair.size() != 2) {
                throw ValidationError(where + " must be a [from, to] pair");
            }
            cfg.forbidden.push_back({stage_field(pair[0], where), stage_field(pair[1], where)});
        }
    }
    return cfg;
}

CheckerConfig load_rules(const std::string& path, const CheckerConfig& base) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open rule file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_rules(ss.str(), base);
}

std::string rules_to_json(const CheckerConfig& cfg) {
    json j;
    j["threshold"] = cfg.threshold;
    j["forbidden"] = json::array();
    for (const auto& t : cfg.forbidden) {
        j["forbidden"].push_back({to_string(t.from), to_string(t.to)});
    }
    return j.dump(2);
}

}  // namespace connsim
