#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "connsim/engine.hpp"
#include "connsim/graph.hpp"
#include "connsim/importance.hpp"
#include "connsim/stage.hpp"

namespace connsim {

/// x in [0, 1] (or any real) to floor(100 x + 0.5).
int scale_to_percent(double x);

/// Optional facts accompanying a graph, all integers as they appear in the
/// fact text.
struct FactExtras {
    /// Graph of the previous step; emitted as edge_1/3. When present, pairs
    /// active there but not in the main graph are emitted as edge(x,y,0).
    std::optional<Connectome> previous;
    std::map<EdgeKey, int> importance;   // imp/3
    std::map<EdgeKey, int> degradation;  // dc/3
    std::optional<std::array<int, 4>> result;    // result/2, indexed by Stage
    std::optional<std::array<int, 4>> result_1;  // result_1/2
    std::optional<std::size_t> threshold;        // th/1

    friend bool operator==(const FactExtras&, const FactExtras&) = default;
};

/// Importance of each active edge of `g`, scaled.
std::map<EdgeKey, int> importance_facts(const ImportanceMap& imp, const Connectome& g);
std::map<EdgeKey, int> degradation_facts(const DegradationMap& dc);
std::array<int, 4> result_facts(const StageProbabilities& p);

/// One fact per line in the order node, edge, edge_1, imp, dc, result,
/// result_1, th; within a predicate by arguments.
std::string emit_facts(const Connectome& g, const FactExtras& extras = {});

struct ParsedFacts {
    Connectome graph;
    FactExtras extras;
};

/// Inverse of emit_facts. Accepts `%` comments, blank lines and edges in
/// either orientation. Throws ParseError carrying the line number.
ParsedFacts parse_facts(const std::string& text);

/// Delimiter (whitespace or comma) is detected per file. A '.' anywhere
/// switches to real values in [0, 1], scaled with scale_to_percent.
Connectome load_matrix(std::istream& in);
Connectome load_matrix(const std::string& path);
/// Integers, space separated, one row per line.
void save_matrix(const Connectome& g, std::ostream& out);
void save_matrix(const Connectome& g, const std::string& path);

inline constexpr int kHistorySchemaVersion = 1;

/// JSON document, see docs/formats.md.
std::string export_history(const EvolutionHistory& h);
EvolutionHistory import_history(const std::string& json_text);

}  // namespace connsim
