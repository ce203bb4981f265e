#pragma once

#include <json.hpp>

#include "connsim/engine.hpp"
#include "connsim/errors.hpp"

namespace connsim {

using nlohmann::json;

void to_json(json& j, const EdgeSelection& s);
void from_json(const json& j, EdgeSelection& s);
void to_json(json& j, const StageProbabilities& p);
void from_json(const json& j, StageProbabilities& p);
void to_json(json& j, const Transition& t);
void from_json(const json& j, Transition& t);
void to_json(json& j, const ValidityVerdict& v);
void from_json(const json& j, ValidityVerdict& v);
void to_json(json& j, const PolicySpec& p);
void from_json(const json& j, PolicySpec& p);
void to_json(json& j, const ExitCondition& e);
void from_json(const json& j, ExitCondition& e);
void to_json(json& j, const RunConfig& c);
void from_json(const json& j, RunConfig& c);

json matrix_json(const Connectome& g);
Connectome matrix_from_json(const json& j);

/// Wraps json type errors as ValidationError with the offending context.
template <typename T>
T decode(const json& j, const char* what) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string(what) + ": " + e.what());
    }
}

}  // namespace connsim
