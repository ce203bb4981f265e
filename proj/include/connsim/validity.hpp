#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "connsim/graph.hpp"
#include "connsim/stage.hpp"

namespace connsim {

struct Transition {
    Stage from = Stage::RR;
    Stage to = Stage::CIS;
    friend bool operator==(const Transition&, const Transition&) = default;
};

std::string to_string(const Transition& t);

/// RR->CIS, PP->CIS, SP->CIS.
std::vector<Transition> default_forbidden_transitions();

struct CheckerConfig {
    /// A step is severe when strictly more than this many edges went from
    /// active to inactive.
    std::size_t threshold = 0;
    std::vector<Transition> forbidden = default_forbidden_transitions();

    /// Threshold ceil(fraction * |E(g0)|) with the default rules.
    static CheckerConfig for_initial_graph(const Connectome& g0, double fraction = 0.10);

    friend bool operator==(const CheckerConfig&, const CheckerConfig&) = default;
};

enum class VerdictTag { Ok, Fail };

struct ValidityVerdict {
    VerdictTag tag = VerdictTag::Ok;
    std::size_t removed_edge_count = 0;
    bool severe = false;
    std::optional<Transition> violated_rule;

    bool ok() const noexcept { return tag == VerdictTag::Ok; }
    friend bool operator==(const ValidityVerdict&, const ValidityVerdict&) = default;
};

/// Canonical pairs active in `prev` and inactive in `cur`.
std::size_t removed_edge_count(const Connectome& prev, const Connectome& cur);

/// FAIL iff the step is severe and (argmax prev, argmax cur) is a forbidden
/// transition. Probabilities matter only through their argmax.
ValidityVerdict check(const Connectome& prev_g, const Connectome& cur_g,
                      const StageProbabilities& prev_r, const StageProbabilities& cur_r,
                      const CheckerConfig& cfg);

/// Rule file: {"threshold": 120, "forbidden": [["RR", "CIS"], ...]}. A missing
/// threshold keeps `base.threshold`; a missing list keeps `base.forbidden`.
CheckerConfig parse_rules(const std::string& json_text, const CheckerConfig& base = {});
CheckerConfig load_rules(const std::string& path, const CheckerConfig& base = {});
std::string rules_to_json(const CheckerConfig& cfg);

}  // namespace connsim
