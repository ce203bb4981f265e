#include "connsim/importance.hpp"

#include <algorithm>
#include <cmath>

#include "connsim/errors.hpp"

namespace connsim {

ImportanceMap::ImportanceMap(std::size_t node_count, std::vector<double> v, Stage target_class)
    : q_(node_count), values_(std::move(v)), target_(target_class) {
    if (values_.size() != q_ * q_) {
        throw ContractViolation("importance map size does not match node count");
    }
    for (std::size_t i = 0; i < q_; ++i) {
        values_[i * q_ + i] = 0.0;
        for (std::size_t j = i + 1; j < q_; ++j) {
            const double s = 0.5 * (values_[i * q_ + j] + values_[j * q_ + i]);
            values_[i * q_ + j] = s;
            values_[j * q_ + i] = s;
        }
    }
}

std::size_t ceil_count(double x) {
    if (x <= 0.0) {
        return 0;
    }
    return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, std::abs(x))));
}

std::vector<Edge> rank_by_importance(const ImportanceMap& imp, const Connectome& g,
                                     ImportanceRanking ranking) {
    if (imp.node_count() != g.node_count()) {
        throw ContractViolation("importance map and graph disagree on node count");
    }
    auto edges = g.active_edges();
    auto score = [&](const Edge& e) {
        const double v = imp.at(e.x, e.y);
        return ranking == ImportanceRanking::Absolute ? std::abs(v) : v;
    };
    std::stable_sort(edges.begin(), edges.end(),
                     [&](const Edge& a, const Edge& b) { return score(a) > score(b); });
    return edges;
}

ImportancePartition partition_by_importance(const ImportanceMap& imp, const Connectome& g,
                                            double fraction, ImportanceRanking ranking) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ContractViolation("importance fraction must lie in (0,1)");
    }
    const auto ranked = rank_by_importance(imp, g, ranking);
    const std::size_t n_important = ceil_count(fraction * static_cast<double>(ranked.size()));
    ImportancePartition part;
    std::vector<EdgeKey> hi;
    std::vector<EdgeKey> lo;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        (i < n_important ? hi : lo).push_back(ranked[i].key());
    }
    if (n_important > 0) {
        const double v = imp.at(ranked[n_important - 1].x, ranked[n_important - 1].y);
        part.threshold = ranking == ImportanceRanking::Absolute ? std::abs(v) : v;
    }
    part.important = EdgeSelection(std::move(hi));
    part.unimportant = EdgeSelection(std::move(lo));
    return part;
}

}  // namespace connsim
