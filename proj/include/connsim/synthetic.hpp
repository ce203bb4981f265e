#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "connsim/classifier.hpp"
#include "connsim/stage.hpp"

namespace connsim {

/// Parameters of one synthetic connectome. Labels are by construction; the
/// graphs carry no clinical meaning.
struct SyntheticSpec {
    Stage stage = Stage::CIS;
    std::size_t nodes = 84;
    double edge_mean = 0.0;
    double edge_sd = 0.0;
    /// A clique of size drawn from [clique_min, clique_max] is planted on
    /// nodes 0..s-1.
    std::size_t clique_min = 0;
    std::size_t clique_max = 0;
    int weight_min = 1;
    int weight_max = 100;
    std::uint64_t seed = 0;

    /// Per-stage edge-count statistics and clique sizes used throughout the
    /// test suite.
    static SyntheticSpec defaults(Stage stage, std::uint64_t seed);
};

LabeledConnectome generate_synthetic(const SyntheticSpec& spec);

/// Class sizes of the desk-scale benchmark, indexed by Stage.
inline constexpr std::array<std::size_t, 4> kBenchmarkCounts{63, 199, 126, 190};

/// 578 labelled graphs (63 CIS, 199 RR, 190 SP, 126 PP), each drawn with
/// SyntheticSpec::defaults under a seed derived from `seed`.
std::vector<LabeledConnectome> synthetic_benchmark(std::uint64_t seed, std::size_t nodes = 84);

}  // namespace connsim
