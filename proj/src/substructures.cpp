#include "connsim/substructures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "connsim/errors.hpp"
#include "node_set.hpp"

namespace connsim {

namespace {

using detail::NodeSet;

/// Branch and bound maximum clique search with greedy colouring bounds.
class CliqueSearch {
public:
    explicit CliqueSearch(std::vector<NodeSet> adj) : adj_(std::move(adj)) {}

    std::size_t clique_number(const NodeSet& candidates) {
        best_ = 0;
        goal_ = std::numeric_limits<std::size_t>::max();
        done_ = false;
        if (candidates.any()) {
            expand(candidates, 0);
        }
        return best_;
    }

    /// True when `candidates` contains a clique with at least `need` nodes.
    bool has_clique(const NodeSet& candidates, std::size_t need) {
        if (need == 0) {
            return true;
        }
        if (candidates.count() < need) {
            return false;
        }
        best_ = need - 1;
        goal_ = need;
        done_ = false;
        expand(candidates, 0);
        return done_;
    }

    const NodeSet& neighbours(std::size_t v) const { return adj_[v]; }

private:
    void colour_sort(const NodeSet& p, std::vector<std::size_t>& order,
                     std::vector<std::size_t>& bound) const {
        NodeSet uncoloured = p;
        std::size_t colour = 0;
        while (uncoloured.any()) {
            ++colour;
            NodeSet q = uncoloured;
            while (q.any()) {
                const std::size_t v = q.first();
                q.reset(v);
                uncoloured.reset(v);
                q.subtract(adj_[v]);
                order.push_back(v);
                bound.push_back(colour);
            }
        }
    }

    void expand(const NodeSet& p, std::size_t size) {
        std::vector<std::size_t> order;
        std::vector<std::size_t> bound;
        colour_sort(p, order, bound);
        NodeSet current = p;
        for (std::size_t i = order.size(); i-- > 0;) {
            if (size + bound[i] <= best_) {
                return;
            }
            const std::size_t v = order[i];
            const NodeSet next = current & adj_[v];
            if (!next.any()) {
                if (size + 1 > best_) {
                    best_ = size + 1;
                    if (best_ >= goal_) {
                        done_ = true;
                        return;
                    }
                }
            } else {
                expand(next, size + 1);
                if (done_) {
                    return;
                }
            }
            current.reset(v);
        }
    }

    std::vector<NodeSet> adj_;
    std::size_t best_ = 0;
    std::size_t goal_ = 0;
    bool done_ = false;
};

void check_capacity(const Connectome& g, const SolverLimits& limits) {
    if (g.node_count() > limits.max_nodes) {
        throw CapacityError("exact solver limited to " + std::to_string(limits.max_nodes) +
                            " nodes, graph has " + std::to_string(g.node_count()));
    }
}

std::vector<NodeSet> adjacency(const Connectome& g, bool complement) {
    const std::size_t q = g.node_count();
    std::vector<NodeSet> adj(q, NodeSet(q));
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            if (i != j && g.is_active(static_cast<NodeId>(i), static_cast<NodeId>(j)) != complement) {
                adj[i].set(j);
            }
        }
    }
    return adj;
}

/// Lexicographically smallest maximum clique: walk nodes in ascending order
/// and keep each one whenever a maximum clique extending the prefix exists.
std::vector<NodeId> lex_smallest_max_clique(CliqueSearch& search, std::size_t q) {
    const NodeSet all = NodeSet::full(q);
    const std::size_t omega = search.clique_number(all);
    std::vector<NodeId> chosen;
    NodeSet candidates = all;
    for (std::size_t v = 0; v < q && chosen.size() < omega; ++v) {
        if (!candidates.test(v)) {
            continue;
        }
        const NodeSet rest = candidates & search.neighbours(v);
        if (search.has_clique(rest, omega - chosen.size() - 1)) {
            chosen.push_back(static_cast<NodeId>(v));
            candidates = rest;
        } else {
            candidates.reset(v);
        }
    }
    return chosen;
}

std::vector<NodeId> iota_nodes(std::size_t n) {
    std::vector<NodeId> v(n);
    std::iota(v.begin(), v.end(), NodeId{0});
    return v;
}

}  // namespace

bool ImportanceFilter::admits(double importance) const {
    const double v = ranking == ImportanceRanking::Absolute ? std::abs(importance) : importance;
    switch (mode) {
        case FilterMode::None: return true;
        case FilterMode::OnlyImportant: return v >= threshold;
        case FilterMode::OnlyUnimportant: return v <= threshold;
    }
    return true;
}

Connectome admissible_subgraph(const Connectome& g, const ImportanceFilter& filter,
                               const ImportanceMap* imp) {
    if (filter.mode == FilterMode::None) {
        return g;
    }
    if (imp == nullptr || imp->node_count() != g.node_count()) {
        throw ContractViolation("importance filter requires an importance map for this graph");
    }
    std::vector<Edge> drop;
    for (const auto& e : g.active_edges()) {
        if (!filter.admits(imp->at(e.x, e.y))) {
            drop.push_back({e.x, e.y, 0});
        }
    }
    return g.with_weights(drop);
}

EdgeSelection selection_for(const Connectome& g, CriterionKind kind,
                            const std::vector<NodeId>& nodes) {
    std::vector<bool> in(g.node_count(), false);
    for (auto v : nodes) {
        in.at(v) = true;
    }
    std::vector<EdgeKey> keys;
    for (const auto& e : g.active_edges()) {
        const int members = static_cast<int>(in[e.x]) + static_cast<int>(in[e.y]);
        bool take = false;
        switch (kind) {
            case CriterionKind::MaxClique:
            case CriterionKind::MinVertexCover: take = members == 2; break;
            case CriterionKind::IndependentSet: take = members == 1; break;
            case CriterionKind::MaxDegreeNode:
            case CriterionKind::KHub: take = members >= 1; break;
        }
        if (take) {
            keys.push_back(e.key());
        }
    }
    return EdgeSelection(std::move(keys));
}

StructureSolution solve_max_clique(const Connectome& g, const ImportanceFilter& filter,
                                   const ImportanceMap* imp, SolverLimits limits) {
    check_capacity(g, limits);
    const Connectome admissible = admissible_subgraph(g, filter, imp);
    CliqueSearch search(adjacency(admissible, false));
    StructureSolution sol;
    sol.nodes = lex_smallest_max_clique(search, g.node_count());
    sol.optimum_size = sol.nodes.size();
    sol.selection = selection_for(admissible, CriterionKind::MaxClique, sol.nodes);
    return sol;
}

StructureSolution solve_independent_set(const Connectome& g, SolverLimits limits) {
    check_capacity(g, limits);
    CliqueSearch search(adjacency(g, true));
    StructureSolution sol;
    sol.nodes = lex_smallest_max_clique(search, g.node_count());
    sol.optimum_size = sol.nodes.size();
    sol.selection = selection_for(g, CriterionKind::IndependentSet, sol.nodes);
    return sol;
}

StructureSolution solve_min_vertex_cover(const Connectome& g, SolverLimits limits) {
    check_capacity(g, limits);
    const std::size_t q = g.node_count();
    CliqueSearch search(adjacency(g, true));
    const NodeSet all = NodeSet::full(q);
    const std::size_t alpha = search.clique_number(all);

    // A node joins the cover whenever some maximum independent set avoiding it
    // (and honouring earlier decisions) still exists; otherwise it is forced
    // into the independent set.
    std::size_t forced = 0;
    NodeSet candidates = all;
    std::vector<bool> independent(q, false);
    for (std::size_t v = 0; v < q; ++v) {
        if (!candidates.test(v)) {
            continue;
        }
        NodeSet without = candidates;
        without.reset(v);
        if (search.has_clique(without, alpha - forced)) {
            candidates = without;
        } else {
            independent[v] = true;
            ++forced;
            candidates = candidates & search.neighbours(v);
        }
    }
    StructureSolution sol;
    for (std::size_t v = 0; v < q; ++v) {
        if (!independent[v]) {
            sol.nodes.push_back(static_cast<NodeId>(v));
        }
    }
    sol.optimum_size = sol.nodes.size();
    sol.selection = selection_for(g, CriterionKind::MinVertexCover, sol.nodes);
    return sol;
}

StructureSolution solve_k_hub(const Connectome& g, std::size_t k) {
    const std::size_t q = g.node_count();
    if (k < 1 || k > q) {
        throw ContractViolation("k-hub needs 1 <= k <= q, got k=" + std::to_string(k));
    }
    const auto deg = g.degrees();
    auto order = iota_nodes(q);
    std::stable_sort(order.begin(), order.end(),
                     [&](NodeId a, NodeId b) { return deg[a] > deg[b]; });
    StructureSolution sol;
    sol.nodes.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(sol.nodes.begin(), sol.nodes.end());
    sol.optimum_size = k;
    sol.selection = selection_for(g, CriterionKind::KHub, sol.nodes);
    return sol;
}

StructureSolution solve_max_degree_node(const Connectome& g) {
    auto sol = solve_k_hub(g, 1);
    sol.selection = selection_for(g, CriterionKind::MaxDegreeNode, sol.nodes);
    return sol;
}

StructureSolution solve(const Connectome& g, const StructuralCriterion& criterion,
                        const ImportanceMap* imp, SolverLimits limits) {
    if (criterion.kind == CriterionKind::MaxClique) {
        return solve_max_clique(g, criterion.filter, imp, limits);
    }
    const Connectome admissible = admissible_subgraph(g, criterion.filter, imp);
    switch (criterion.kind) {
        case CriterionKind::IndependentSet: return solve_independent_set(admissible, limits);
        case CriterionKind::MaxDegreeNode: return solve_max_degree_node(admissible);
        case CriterionKind::KHub: return solve_k_hub(admissible, criterion.k);
        case CriterionKind::MinVertexCover: return solve_min_vertex_cover(admissible, limits);
        case CriterionKind::MaxClique: break;
    }
    throw ContractViolation("unknown structural criterion");
}

}  // namespace connsim
