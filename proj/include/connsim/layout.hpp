#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "connsim/graph.hpp"

namespace connsim {

/// Seeded Fruchterman-Reingold placement in the unit square, weights acting
/// as spring strengths.
std::vector<std::array<double, 2>> force_layout(const Connectome& g, std::uint64_t seed,
                                                std::size_t iterations = 200);

}  // namespace connsim
