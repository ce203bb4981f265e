#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <utility>

#include "connsim/graph.hpp"

namespace connsim {

/// Degree-pair distribution of a graph, each undirected edge counted once in
/// each orientation. `e[{x, y}]` is the fraction of oriented edges joining a
/// degree-x vertex to a degree-y vertex; `a`/`b` are its marginals.
struct DegreeMixing {
    std::map<std::pair<std::size_t, std::size_t>, double> e;
    std::map<std::size_t, double> a;
    std::map<std::size_t, double> b;
    double sigma_a = 0.0;
    double sigma_b = 0.0;
};

/// |E| / (q (q - 1)). Throws UndefinedMetric for q < 2.
double density(const Connectome& g);
double density(std::size_t node_count, std::size_t edge_count);

DegreeMixing degree_mixing(const Connectome& g);

/// Newman degree assortativity over active-edge topology. Throws
/// UndefinedMetric when there are no edges or the endpoint degree variance
/// is zero (regular graphs).
double assortativity(const Connectome& g);
double assortativity(std::size_t node_count, std::span<const EdgeKey> edges);

}  // namespace connsim
