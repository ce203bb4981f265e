#include "connsim/metric_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "connsim/errors.hpp"
#include "connsim/metrics.hpp"
#include "connsim/rng.hpp"

namespace connsim {

const MetricRegistry& MetricRegistry::builtin() {
    static const MetricRegistry reg = [] {
        MetricRegistry r;
        r.add(kDensity, [](std::size_t q, std::span<const EdgeKey> edges) {
            return density(q, edges.size());
        });
        r.add(kAssortativity, [](std::size_t q, std::span<const EdgeKey> edges) {
            return assortativity(q, edges);
        });
        return r;
    }();
    return reg;
}

void MetricRegistry::add(const std::string& name, MetricFn fn) { fns_[name] = std::move(fn); }

const MetricFn& MetricRegistry::get(const std::string& name) const {
    auto it = fns_.find(name);
    if (it == fns_.end()) {
        throw ContractViolation("unknown metric '" + name + "'");
    }
    return it->second;
}

double target_value(double current, const MetricTarget& t) {
    const double step = t.relative_change * std::abs(current);
    return t.direction == Direction::Decrease ? current - step : current + step;
}

bool meets_target(double value, double target, Direction direction) {
    const double tol = 1e-12 * std::max(1.0, std::abs(target));
    return direction == Direction::Decrease ? value <= target + tol : value >= target - tol;
}

Connectome apply_removal(const Connectome& g, const EdgeSelection& sel) {
    require_active(g, sel);
    std::vector<Edge> updates;
    updates.reserve(sel.size());
    for (const auto& k : sel) {
        updates.push_back({k.x, k.y, 0});
    }
    return g.with_weights(updates);
}

namespace {

struct Candidate {
    double cost = 0.0;
    std::size_t rank = std::numeric_limits<std::size_t>::max();
    bool operator<(const Candidate& o) const {
        return cost != o.cost ? cost < o.cost : rank < o.rank;
    }
};

double bias_weight(ImportanceBias bias, const ImportanceMap* imp, EdgeKey k) {
    switch (bias) {
        case ImportanceBias::None: return 0.0;
        case ImportanceBias::PreferUnimportant: return imp->at(k);
        case ImportanceBias::PreferImportant: return -imp->at(k);
    }
    return 0.0;
}

std::optional<double> evaluate(const MetricFn& fn, std::size_t q, std::span<const EdgeKey> edges) {
    try {
        return fn(q, edges);
    } catch (const UndefinedMetric&) {
        return std::nullopt;
    }
}

/// Signed distance still to travel towards the target (<= 0 once met).
double shortfall(double value, double target, Direction d) {
    return d == Direction::Decrease ? value - target : target - value;
}

OptimizationResult optimize_density(const Connectome& g, const MetricTarget& t,
                                    const ImportanceMap* imp, std::uint64_t seed,
                                    OptimizationResult res) {
    const auto edges = g.active_edges();
    if (t.direction == Direction::Increase) {
        throw Infeasible("density cannot be increased by removing edges", res.initial_value);
    }
    const std::size_t r = std::min(edges.size(),
                                   ceil_count(t.relative_change * static_cast<double>(edges.size())));
    std::vector<EdgeKey> chosen;
    if (t.bias == ImportanceBias::None) {
        Rng rng(seed);
        for (auto i : sample_without_replacement(edges.size(), r, rng)) {
            chosen.push_back(edges[i].key());
        }
    } else {
        std::vector<Edge> order = edges;
        std::stable_sort(order.begin(), order.end(), [&](const Edge& a, const Edge& b) {
            return bias_weight(t.bias, imp, a.key()) < bias_weight(t.bias, imp, b.key());
        });
        for (std::size_t i = 0; i < r; ++i) {
            chosen.push_back(order[i].key());
        }
    }
    res.removed = EdgeSelection(std::move(chosen));
    res.achieved_value = density(g.node_count(), edges.size() - r);
    res.optimal = true;
    return res;
}

OptimizationResult optimize_exact(const Connectome& g, const MetricTarget& t,
                                  const ImportanceMap* imp, const MetricFn& fn,
                                  OptimizationResult res) {
    const std::size_t q = g.node_count();
    std::vector<EdgeKey> edges;
    for (const auto& e : g.active_edges()) {
        edges.push_back(e.key());
    }
    const std::size_t m = edges.size();
    double best_value = res.initial_value;

    for (std::size_t k = 1; k <= m; ++k) {
        // All k-subsets in lexicographic order of edge positions.
        std::vector<std::vector<std::size_t>> subsets;
        std::vector<std::size_t> idx(k);
        for (std::size_t i = 0; i < k; ++i) idx[i] = i;
        while (true) {
            subsets.push_back(idx);
            std::size_t i = k;
            while (i > 0 && idx[i - 1] == m - k + i - 1) --i;
            if (i == 0) break;
            ++idx[i - 1];
            for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }

        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(subsets.size());
        std::vector<Candidate> found(static_cast<std::size_t>(n));
        std::vector<double> values(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
#pragma omp parallel
        {
            std::vector<EdgeKey> kept;
            kept.reserve(m);
#pragma omp for schedule(static)
            for (std::ptrdiff_t s = 0; s < n; ++s) {
                const auto& removed = subsets[static_cast<std::size_t>(s)];
                kept.clear();
                std::size_t r = 0;
                double cost = 0.0;
                for (std::size_t e = 0; e < m; ++e) {
                    if (r < removed.size() && removed[r] == e) {
                        cost += bias_weight(t.bias, imp, edges[e]);
                        ++r;
                    } else {
                        kept.push_back(edges[e]);
                    }
                }
                if (auto v = evaluate(fn, q, kept)) {
                    values[static_cast<std::size_t>(s)] = *v;
                    if (meets_target(*v, res.target_value, t.direction)) {
                        found[static_cast<std::size_t>(s)] = {cost, static_cast<std::size_t>(s)};
                    }
                }
            }
        }
        // Deterministic reduction independent of the thread schedule.
        const auto best = std::min_element(found.begin(), found.end());
        if (best != found.end() && best->rank != std::numeric_limits<std::size_t>::max()) {
            std::vector<EdgeKey> chosen;
            for (auto e : subsets[best->rank]) chosen.push_back(edges[e]);
            res.removed = EdgeSelection(std::move(chosen));
            res.achieved_value = values[best->rank];
            res.optimal = true;
            return res;
        }
        for (double v : values) {
            if (!std::isnan(v) && shortfall(v, res.target_value, t.direction) <
                                      shortfall(best_value, res.target_value, t.direction)) {
                best_value = v;
            }
        }
    }
    throw Infeasible(t.metric + " target unreachable by edge removals", best_value);
}

OptimizationResult optimize_greedy(const Connectome& g, const MetricTarget& t,
                                   const ImportanceMap* imp, const MetricFn& fn,
                                   OptimizationResult res) {
    const std::size_t q = g.node_count();
    std::vector<EdgeKey> remaining;
    for (const auto& e : g.active_edges()) {
        remaining.push_back(e.key());
    }
    std::vector<EdgeKey> removed;
    double current = res.initial_value;

    while (!meets_target(current, res.target_value, t.direction)) {
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(remaining.size());
        std::vector<double> values(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
#pragma omp parallel
        {
            std::vector<EdgeKey> kept;
            kept.reserve(remaining.size());
#pragma omp for schedule(static)
            for (std::ptrdiff_t c = 0; c < n; ++c) {
                kept.assign(remaining.begin(), remaining.end());
                kept.erase(kept.begin() + c);
                if (auto v = evaluate(fn, q, kept)) {
                    values[static_cast<std::size_t>(c)] = *v;
                }
            }
        }
        // Largest movement toward the target; bias then (x, y) break ties.
        std::optional<std::size_t> pick;
        for (std::size_t c = 0; c < values.size(); ++c) {
            if (std::isnan(values[c])) continue;
            if (!pick) {
                pick = c;
                continue;
            }
            const double a = shortfall(values[c], res.target_value, t.direction);
            const double b = shortfall(values[*pick], res.target_value, t.direction);
            if (a < b || (a == b && bias_weight(t.bias, imp, remaining[c]) <
                                        bias_weight(t.bias, imp, remaining[*pick]))) {
                pick = c;
            }
        }
        if (!pick || shortfall(values[*pick], res.target_value, t.direction) >=
                         shortfall(current, res.target_value, t.direction)) {
            throw Infeasible("greedy removal stalled before reaching the " + t.metric + " target",
                             current);
        }
        current = values[*pick];
        removed.push_back(remaining[*pick]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(*pick));
    }
    res.removed = EdgeSelection(std::move(removed));
    res.achieved_value = current;
    res.optimal = false;
    return res;
}

}  // namespace

OptimizationResult optimize(const Connectome& g, const MetricTarget& t, const ImportanceMap* imp,
                            std::uint64_t seed, const OptimizerConfig& config) {
    if (!(t.relative_change > 0.0 && t.relative_change <= 1.0)) {
        throw ContractViolation("relative_change must lie in (0,1]");
    }
    if (t.bias != ImportanceBias::None && (imp == nullptr || imp->node_count() != g.node_count())) {
        throw ContractViolation("importance bias requires an importance map for this graph");
    }
    const MetricRegistry& registry = config.registry ? *config.registry : MetricRegistry::builtin();
    const MetricFn& fn = registry.get(t.metric);

    std::vector<EdgeKey> edges;
    for (const auto& e : g.active_edges()) {
        edges.push_back(e.key());
    }
    OptimizationResult res;
    res.initial_value = fn(g.node_count(), edges);
    res.target_value = target_value(res.initial_value, t);
    res.achieved_value = res.initial_value;
    if (meets_target(res.initial_value, res.target_value, t.direction)) {
        res.optimal = true;
        return res;
    }
    if (t.metric == kDensity && config.registry == nullptr) {
        return optimize_density(g, t, imp, seed, res);
    }
    if (edges.size() <= config.exact_ceiling) {
        return optimize_exact(g, t, imp, fn, res);
    }
    return optimize_greedy(g, t, imp, fn, res);
}

Connectome evolve_by_metric(const Connectome& g, const MetricTarget& target,
                            const ImportanceMap* imp, std::uint64_t seed,
                            const OptimizerConfig& config) {
    return apply_removal(g, optimize(g, target, imp, seed, config).removed);
}

}  // namespace connsim
