#include "connsim/metrics.hpp"

#include <cmath>
#include <vector>

#include "connsim/errors.hpp"

namespace connsim {

double density(std::size_t node_count, std::size_t edge_count) {
    if (node_count < 2) {
        throw UndefinedMetric("density needs at least two nodes");
    }
    const double q = static_cast<double>(node_count);
    return static_cast<double>(edge_count) / (q * (q - 1.0));
}

double density(const Connectome& g) { return density(g.node_count(), g.edge_count()); }

DegreeMixing degree_mixing(const Connectome& g) {
    const auto deg = g.degrees();
    const auto edges = g.active_edges();
    DegreeMixing mix;
    if (edges.empty()) {
        return mix;
    }
    const double unit = 1.0 / (2.0 * static_cast<double>(edges.size()));
    for (const auto& e : edges) {
        const std::size_t dx = deg[e.x];
        const std::size_t dy = deg[e.y];
        mix.e[{dx, dy}] += unit;
        mix.e[{dy, dx}] += unit;
    }
    for (const auto& [pair, frac] : mix.e) {
        mix.a[pair.first] += frac;
        mix.b[pair.second] += frac;
    }
    auto sd = [](const std::map<std::size_t, double>& dist) {
        double m1 = 0.0;
        double m2 = 0.0;
        for (const auto& [x, f] : dist) {
            m1 += static_cast<double>(x) * f;
            m2 += static_cast<double>(x) * static_cast<double>(x) * f;
        }
        return std::sqrt(std::max(0.0, m2 - m1 * m1));
    };
    mix.sigma_a = sd(mix.a);
    mix.sigma_b = sd(mix.b);
    return mix;
}

double assortativity(std::size_t node_count, std::span<const EdgeKey> edges) {
    if (edges.empty()) {
        throw UndefinedMetric("assortativity undefined on a graph without edges");
    }
    std::vector<std::int64_t> deg(node_count, 0);
    for (const auto& e : edges) {
        ++deg[e.x];
        ++deg[e.y];
    }
    // Integer moments over oriented edges: M = 2|E|, s1 = sum of endpoint
    // degrees, s2 = sum of squared endpoint degrees, sxy = sum of degree products.
    using wide = __int128;
    wide m = 2 * static_cast<wide>(edges.size());
    wide s1 = 0;
    wide s2 = 0;
    for (const auto d : deg) {
        s1 += static_cast<wide>(d) * d;
        s2 += static_cast<wide>(d) * d * d;
    }
    wide sxy = 0;
    for (const auto& e : edges) {
        sxy += 2 * static_cast<wide>(deg[e.x]) * deg[e.y];
    }
    const wide var = m * s2 - s1 * s1;
    if (var == 0) {
        throw UndefinedMetric("assortativity undefined: all endpoint degrees are equal");
    }
    const wide cov = m * sxy - s1 * s1;
    return static_cast<double>(static_cast<long double>(cov) / static_cast<long double>(var));
}

double assortativity(const Connectome& g) {
    std::vector<EdgeKey> keys;
    keys.reserve(g.edge_count());
    for (const auto& e : g.active_edges()) {
        keys.push_back(e.key());
    }
    return assortativity(g.node_count(), keys);
}

}  // namespace connsim
