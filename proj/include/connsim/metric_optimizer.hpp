#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>

#include "connsim/graph.hpp"
#include "connsim/importance.hpp"

namespace connsim {

inline constexpr const char* kDensity = "density";
inline constexpr const char* kAssortativity = "assortativity";

/// External metric callback: evaluates a metric on the graph formed by
/// `edges` over `node_count` nodes. May throw UndefinedMetric.
using MetricFn = std::function<double(std::size_t node_count, std::span<const EdgeKey> edges)>;

class MetricRegistry {
public:
    /// Registry holding "density" and "assortativity".
    static const MetricRegistry& builtin();

    void add(const std::string& name, MetricFn fn);
    const MetricFn& get(const std::string& name) const;
    bool contains(const std::string& name) const { return fns_.count(name) > 0; }

private:
    std::map<std::string, MetricFn> fns_;
};

enum class Direction { Decrease, Increase };
enum class ImportanceBias { None, PreferUnimportant, PreferImportant };

struct MetricTarget {
    std::string metric = kDensity;
    Direction direction = Direction::Decrease;
    double relative_change = 0.10;  // in (0, 1]
    ImportanceBias bias = ImportanceBias::None;
};

/// current -/+ relative_change * |current|.
double target_value(double current, const MetricTarget& t);
/// Whether `value` is on the target side of `target` (inclusive).
bool meets_target(double value, double target, Direction direction);

struct OptimizerConfig {
    /// Active-edge count up to which the removal search is exhaustive.
    std::size_t exact_ceiling = 20;
    const MetricRegistry* registry = nullptr;  // nullptr: builtin
};

struct OptimizationResult {
    EdgeSelection removed;
    double initial_value = 0.0;
    double target_value = 0.0;
    double achieved_value = 0.0;
    bool optimal = false;
};

/// Smallest set of edge removals that moves the metric to its target.
/// Density has a closed-form removal count; other metrics are solved by
/// exhaustive subset search up to `exact_ceiling` edges and by greedy
/// best-improvement above it. Throws Infeasible (with the best value reached)
/// when the target cannot be met by removals.
OptimizationResult optimize(const Connectome& g, const MetricTarget& target,
                            const ImportanceMap* imp, std::uint64_t seed,
                            const OptimizerConfig& config = {});

Connectome apply_removal(const Connectome& g, const EdgeSelection& sel);

Connectome evolve_by_metric(const Connectome& g, const MetricTarget& target,
                            const ImportanceMap* imp, std::uint64_t seed,
                            const OptimizerConfig& config = {});

}  // namespace connsim
