#include "connsim/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "connsim/errors.hpp"
#include "connsim/rng.hpp"

namespace connsim {

SyntheticSpec SyntheticSpec::defaults(Stage stage, std::uint64_t seed) {
    SyntheticSpec s;
    s.stage = stage;
    s.seed = seed;
    switch (stage) {
        case Stage::CIS: s.edge_mean = 2036.31; s.edge_sd = 139.19; s.clique_min = 38; s.clique_max = 42; break;
        case Stage::RR: s.edge_mean = 1951.25; s.edge_sd = 235.43; s.clique_min = 28; s.clique_max = 32; break;
        case Stage::PP: s.edge_mean = 1760.96; s.edge_sd = 293.58; s.clique_min = 18; s.clique_max = 22; break;
        case Stage::SP: s.edge_mean = 1634.56; s.edge_sd = 315.27; s.clique_min = 8; s.clique_max = 12; break;
    }
    return s;
}

LabeledConnectome generate_synthetic(const SyntheticSpec& spec) {
    const std::size_t q = spec.nodes;
    if (q < 2) throw ValidationError("synthetic graph needs at least 2 nodes");
    if (!(spec.edge_mean > 0.0) || !(spec.edge_sd >= 0.0)) {
        throw ValidationError("synthetic edge-count mean must be positive and sd non-negative");
    }
    if (spec.clique_min > spec.clique_max || spec.clique_max > q) {
        throw ValidationError("synthetic clique size range is infeasible for " + std::to_string(q) +
                              " nodes");
    }
    if (spec.weight_min < 1 || spec.weight_max > kMaxWeight || spec.weight_min > spec.weight_max) {
        throw ValidationError("synthetic weight range must lie within [1, 100]");
    }

    Rng rng(spec.seed);
    const auto s = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(spec.clique_min),
                                                        static_cast<std::int64_t>(spec.clique_max)));
    const std::size_t pairs = q * (q - 1) / 2;
    const std::size_t planted = s * (s - 1) / 2;
    const double drawn = std::round(rng.normal(spec.edge_mean, spec.edge_sd));
    const auto m = static_cast<std::size_t>(
        std::clamp(drawn, static_cast<double>(planted), static_cast<double>(pairs)));

    std::vector<EdgeKey> others;
    others.reserve(pairs - planted);
    for (NodeId x = 0; x < q; ++x) {
        for (NodeId y = x + 1; y < q; ++y) {
            if (y >= s) others.push_back({x, y});
        }
    }
    std::vector<Edge> edges;
    edges.reserve(m);
    for (NodeId x = 0; x < s; ++x) {
        for (NodeId y = x + 1; y < s; ++y) edges.push_back({x, y, 0});
    }
    for (std::size_t idx : sample_without_replacement(others.size(), m - planted, rng)) {
        edges.push_back({others[idx].x, others[idx].y, 0});
    }
    for (Edge& e : edges) {
        e.w = static_cast<int>(rng.between(spec.weight_min, spec.weight_max));
    }
    return {Connectome::from_edges(q, edges), spec.stage};
}

std::vector<LabeledConnectome> synthetic_benchmark(std::uint64_t seed, std::size_t nodes) {
    std::vector<LabeledConnectome> out;
    std::uint64_t stream = 0;
    for (Stage st : kStages) {
        for (std::size_t i = 0; i < kBenchmarkCounts[static_cast<std::size_t>(st)]; ++i) {
            SyntheticSpec spec = SyntheticSpec::defaults(st, mix_seed(seed, stream++));
            spec.nodes = nodes;
            out.push_back(generate_synthetic(spec));
        }
    }
    return out;
}

}  // namespace connsim
