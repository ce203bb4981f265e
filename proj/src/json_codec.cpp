#include "json_codec.hpp"

#include <string>

#include "connsim/errors.hpp"

namespace connsim {

namespace {

Stage stage_of(const json& j) {
    const auto s = parse_stage(j.get<std::string>());
    if (!s) throw ValidationError("unknown stage '" + j.get<std::string>() + "'");
    return *s;
}

template <typename T, typename F>
T enum_of(const json& j, F parse, const char* what) {
    const auto text = j.get<std::string>();
    const auto v = parse(text);
    if (!v) throw ValidationError(std::string("unknown ") + what + " '" + text + "'");
    return *v;
}

std::string_view exit_name(ExitCondition::Kind k) {
    switch (k) {
        case ExitCondition::Kind::MaxIterations: return "max-iterations";
        case ExitCondition::Kind::TransitionDetected: return "transition";
        case ExitCondition::Kind::ProbabilityDeltaBelow: return "probability-delta";
    }
    return "?";
}

}  // namespace

void to_json(json& j, const EdgeSelection& s) {
    j = json::array();
    for (const EdgeKey& k : s) j.push_back({k.x, k.y});
}

void from_json(const json& j, EdgeSelection& s) {
    std::vector<EdgeKey> keys;
    for (const json& pair : j) {
        if (!pair.is_array() || pair.size() != 2) {
            throw ValidationError("edge must be an [x, y] pair");
        }
        keys.push_back(EdgeKey::of(pair[0].get<NodeId>(), pair[1].get<NodeId>()));
    }
    s = EdgeSelection(std::move(keys));
}

void to_json(json& j, const StageProbabilities& p) {
    j = json::object();
    for (Stage s : kStages) j[std::string(to_string(s))] = p[s];
}

void from_json(const json& j, StageProbabilities& p) {
    for (Stage s : kStages) p[s] = j.at(std::string(to_string(s))).get<double>();
}

void to_json(json& j, const Transition& t) { j = {to_string(t.from), to_string(t.to)}; }

void from_json(const json& j, Transition& t) {
    if (!j.is_array() || j.size() != 2) throw ValidationError("transition must be a [from, to] pair");
    t = {stage_of(j[0]), stage_of(j[1])};
}

void to_json(json& j, const ValidityVerdict& v) {
    j = {{"tag", v.ok() ? "OK" : "FAIL"},
         {"removed_edge_count", v.removed_edge_count},
         {"severe", v.severe},
         {"violated_rule", nullptr}};
    if (v.violated_rule) j["violated_rule"] = *v.violated_rule;
}

void from_json(const json& j, ValidityVerdict& v) {
    const auto tag = j.at("tag").get<std::string>();
    if (tag != "OK" && tag != "FAIL") throw ValidationError("unknown verdict '" + tag + "'");
    v.tag = tag == "OK" ? VerdictTag::Ok : VerdictTag::Fail;
    v.removed_edge_count = j.at("removed_edge_count").get<std::size_t>();
    v.severe = j.at("severe").get<bool>();
    v.violated_rule.reset();
    if (auto it = j.find("violated_rule"); it != j.end() && !it->is_null()) {
        v.violated_rule = it->get<Transition>();
    }
}

void to_json(json& j, const PolicySpec& p) {
    j = {{"kind", to_string(p.kind)},
         {"k", p.k},
         {"importance", to_string(p.importance)},
         {"relative_change", p.relative_change},
         {"direction", p.direction == Direction::Decrease ? "decrease" : "increase"},
         {"update", to_string(p.update)},
         {"counts", p.counts},
         {"excluded", p.excluded}};
}

void from_json(const json& j, PolicySpec& p) {
    p = PolicySpec{};
    if (j.is_string()) {
        p.kind = enum_of<PolicyKind>(j, parse_policy, "policy");
        return;
    }
    p.kind = enum_of<PolicyKind>(j.at("kind"), parse_policy, "policy");
    if (j.contains("k")) p.k = j["k"].get<std::size_t>();
    if (j.contains("importance")) {
        p.importance = enum_of<ImportanceMode>(j["importance"], parse_importance_mode, "importance mode");
    }
    if (j.contains("relative_change")) p.relative_change = j["relative_change"].get<double>();
    if (j.contains("direction")) {
        const auto d = j["direction"].get<std::string>();
        if (d != "decrease" && d != "increase") throw ValidationError("unknown direction '" + d + "'");
        p.direction = d == "decrease" ? Direction::Decrease : Direction::Increase;
    }
    if (j.contains("update")) p.update = enum_of<UpdateMode>(j["update"], parse_update_mode, "update mode");
    if (j.contains("counts")) p.counts = j["counts"].get<std::vector<std::size_t>>();
    if (j.contains("excluded")) p.excluded = j["excluded"].get<std::vector<EdgeSelection>>();
}

void to_json(json& j, const ExitCondition& e) {
    j = {{"kind", exit_name(e.kind)}};
    if (e.kind == ExitCondition::Kind::MaxIterations) j["n"] = e.iterations;
    if (e.kind == ExitCondition::Kind::ProbabilityDeltaBelow) j["epsilon"] = e.epsilon;
}

void from_json(const json& j, ExitCondition& e) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "max-iterations") {
        e = ExitCondition::max_iterations(j.at("n").get<std::size_t>());
    } else if (kind == "transition") {
        e = ExitCondition::transition_detected();
    } else if (kind == "probability-delta") {
        e = ExitCondition::probability_delta_below(j.at("epsilon").get<double>());
    } else {
        throw ValidationError("unknown exit condition '" + kind + "'");
    }
}

void to_json(json& j, const RunConfig& c) {
    j = {{"policy", c.policy},
         {"p", c.percent},
         {"seed", c.seed},
         {"exit", c.exit},
         {"iteration_cap", c.iteration_cap},
         {"checker_threshold", nullptr},
         {"forbidden", c.forbidden},
         {"importance_fraction", c.importance_fraction},
         {"ranking", c.ranking == ImportanceRanking::Signed ? "signed" : "absolute"},
         {"initial_label", nullptr}};
    if (c.checker_threshold) j["checker_threshold"] = *c.checker_threshold;
    if (c.initial_label) j["initial_label"] = to_string(*c.initial_label);
}

void from_json(const json& j, RunConfig& c) {
    c = RunConfig{};
    if (!j.is_object()) throw ValidationError("run config must be an object");
    if (j.contains("policy")) c.policy = j["policy"].get<PolicySpec>();
    if (j.contains("p")) c.percent = j["p"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("exit")) c.exit = j["exit"].get<std::vector<ExitCondition>>();
    if (j.contains("iteration_cap")) c.iteration_cap = j["iteration_cap"].get<std::size_t>();
    if (j.contains("checker_threshold") && !j["checker_threshold"].is_null()) {
        c.checker_threshold = j["checker_threshold"].get<std::size_t>();
    }
    if (j.contains("forbidden")) c.forbidden = j["forbidden"].get<std::vector<Transition>>();
    if (j.contains("importance_fraction")) c.importance_fraction = j["importance_fraction"].get<double>();
    if (j.contains("ranking")) {
        const auto r = j["ranking"].get<std::string>();
        if (r != "signed" && r != "absolute") throw ValidationError("unknown ranking '" + r + "'");
        c.ranking = r == "signed" ? ImportanceRanking::Signed : ImportanceRanking::Absolute;
    }
    if (j.contains("initial_label") && !j["initial_label"].is_null()) {
        c.initial_label = stage_of(j["initial_label"]);
    }
}

json matrix_json(const Connectome& g) {
    const std::size_t q = g.node_count();
    const auto m = g.int_matrix();
    json rows = json::array();
    for (std::size_t i = 0; i < q; ++i) {
        rows.push_back(std::vector<int>(m.begin() + static_cast<std::ptrdiff_t>(i * q),
                                        m.begin() + static_cast<std::ptrdiff_t>((i + 1) * q)));
    }
    return rows;
}

Connectome matrix_from_json(const json& j) {
    return Connectome::from_rows(j.get<std::vector<std::vector<int>>>());
}

std::string run_config_to_json(const RunConfig& cfg) { return json(cfg).dump(2); }

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("run config: ") + e.what());
    }
    RunConfig cfg;
    try {
        cfg = j.get<RunConfig>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("run config: ") + e.what());
    } catch (const ContractViolation& e) {
        throw ValidationError(std::string("run config: ") + e.what());
    }
    try {
        validate(cfg);
    } catch (const ContractViolation& e) {
        throw ValidationError(std::string("run config: ") + e.what());
    }
    return cfg;
}

}  // namespace connsim
