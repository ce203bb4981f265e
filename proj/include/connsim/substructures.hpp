#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "connsim/graph.hpp"
#include "connsim/importance.hpp"

namespace connsim {

enum class CriterionKind { MaxClique, IndependentSet, MaxDegreeNode, KHub, MinVertexCover };

enum class FilterMode { None, OnlyImportant, OnlyUnimportant };

/// Restricts the admissible edge set by importance. OnlyImportant admits
/// imp >= threshold, OnlyUnimportant admits imp <= threshold; an edge exactly
/// at the threshold is admitted by both.
struct ImportanceFilter {
    FilterMode mode = FilterMode::None;
    double threshold = 0.0;
    ImportanceRanking ranking = ImportanceRanking::Signed;

    bool admits(double importance) const;
};

struct StructuralCriterion {
    CriterionKind kind = CriterionKind::MaxClique;
    std::size_t k = 1;  // KHub only
    ImportanceFilter filter;
};

struct StructureSolution {
    std::vector<NodeId> nodes;  // sorted ascending
    EdgeSelection selection;
    std::size_t optimum_size = 0;
};

struct SolverLimits {
    std::size_t max_nodes = 512;
};

/// Graph with the edges rejected by `filter` zeroed out. Returns `g` when the
/// filter is None; otherwise `imp` is required.
Connectome admissible_subgraph(const Connectome& g, const ImportanceFilter& filter,
                               const ImportanceMap* imp);

/// Maximum clique over admissible edges; the lexicographically smallest among
/// all maximum cliques. Selection: admissible edges inside the clique.
StructureSolution solve_max_clique(const Connectome& g, const ImportanceFilter& filter = {},
                                   const ImportanceMap* imp = nullptr, SolverLimits limits = {});

/// Maximum independent set (lexicographically smallest). Selection: active
/// edges with exactly one endpoint in the set.
StructureSolution solve_independent_set(const Connectome& g, SolverLimits limits = {});

StructureSolution solve_max_degree_node(const Connectome& g);

/// The k highest-degree nodes, ties by smallest index. Selection: active edges
/// touching at least one of them.
StructureSolution solve_k_hub(const Connectome& g, std::size_t k);

/// Minimum vertex cover (lexicographically smallest sorted node list).
/// Selection: active edges with both endpoints in the cover.
StructureSolution solve_min_vertex_cover(const Connectome& g, SolverLimits limits = {});

/// Dispatches on the criterion; a non-None filter solves on the admissible
/// subgraph.
StructureSolution solve(const Connectome& g, const StructuralCriterion& criterion,
                        const ImportanceMap* imp = nullptr, SolverLimits limits = {});

/// Re-derives the edge selection a criterion assigns to a node set.
EdgeSelection selection_for(const Connectome& g, CriterionKind kind,
                            const std::vector<NodeId>& nodes);

}  // namespace connsim
