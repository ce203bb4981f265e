#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "connsim/graph.hpp"
#include "connsim/stage.hpp"

namespace connsim {

/// Per-edge saliency of a classifier decision: symmetric q*q matrix with a
/// zero diagonal, holding the derivative of the target class score with
/// respect to each adjacency cell.
class ImportanceMap {
public:
    ImportanceMap() = default;
    /// Symmetrizes (v + v^T) / 2 and zeroes the diagonal.
    ImportanceMap(std::size_t node_count, std::vector<double> row_major, Stage target_class);

    std::size_t node_count() const noexcept { return q_; }
    Stage target_class() const noexcept { return target_; }
    double at(NodeId i, NodeId j) const { return values_[static_cast<std::size_t>(i) * q_ + j]; }
    double at(EdgeKey k) const { return at(k.x, k.y); }
    std::span<const double> values() const noexcept { return values_; }

private:
    std::size_t q_ = 0;
    std::vector<double> values_;
    Stage target_ = Stage::CIS;
};

enum class ImportanceRanking { Signed, Absolute };

struct ImportancePartition {
    EdgeSelection important;
    EdgeSelection unimportant;
    /// Importance of the lowest-ranked important edge (0 when there are no
    /// active edges). Filters use it as the important/unimportant cut.
    double threshold = 0.0;
};

/// Ranks active edges by importance descending (ties by (x, y) ascending);
/// the first ceil(fraction * |E|) are important. 0 < fraction < 1.
ImportancePartition partition_by_importance(const ImportanceMap& imp, const Connectome& g,
                                            double fraction,
                                            ImportanceRanking ranking = ImportanceRanking::Signed);

/// Active edges ordered by descending importance, ties by (x, y).
std::vector<Edge> rank_by_importance(const ImportanceMap& imp, const Connectome& g,
                                     ImportanceRanking ranking = ImportanceRanking::Signed);

/// ceil(x) that ignores floating-point noise just above an integer.
std::size_t ceil_count(double x);

}  // namespace connsim
