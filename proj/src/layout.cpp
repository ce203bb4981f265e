#include "connsim/layout.hpp"

#include <algorithm>
#include <cmath>

#include "connsim/rng.hpp"

namespace connsim {

std::vector<std::array<double, 2>> force_layout(const Connectome& g, std::uint64_t seed,
                                                std::size_t iterations) {
    const std::size_t q = g.node_count();
    Rng rng(seed);
    std::vector<std::array<double, 2>> pos(q);
    for (auto& p : pos) p = {rng.uniform01(), rng.uniform01()};
    if (q < 2) return pos;

    const double k = std::sqrt(1.0 / static_cast<double>(q));
    const auto edges = g.active_edges();
    std::vector<std::array<double, 2>> disp(q);
    double temperature = 0.1;
    const double cooling = temperature / static_cast<double>(std::max<std::size_t>(iterations, 1));

    for (std::size_t it = 0; it < iterations; ++it) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t vs = 0; vs < static_cast<std::ptrdiff_t>(q); ++vs) {
            const auto v = static_cast<std::size_t>(vs);
            double dx = 0.0;
            double dy = 0.0;
            for (std::size_t u = 0; u < q; ++u) {
                if (u == v) continue;
                const double ex = pos[v][0] - pos[u][0];
                const double ey = pos[v][1] - pos[u][1];
                const double d2 = std::max(ex * ex + ey * ey, 1e-12);
                dx += ex * k * k / d2;
                dy += ey * k * k / d2;
            }
            disp[v] = {dx, dy};
        }
        for (const Edge& e : edges) {
            const double ex = pos[e.x][0] - pos[e.y][0];
            const double ey = pos[e.x][1] - pos[e.y][1];
            const double d = std::max(std::sqrt(ex * ex + ey * ey), 1e-6);
            const double f = d / k * (e.w / static_cast<double>(kMaxWeight));
            disp[e.x][0] -= ex * f;
            disp[e.x][1] -= ey * f;
            disp[e.y][0] += ex * f;
            disp[e.y][1] += ey * f;
        }
        for (std::size_t v = 0; v < q; ++v) {
            const double len = std::max(std::hypot(disp[v][0], disp[v][1]), 1e-12);
            const double step = std::min(len, temperature);
            pos[v][0] = std::clamp(pos[v][0] + disp[v][0] / len * step, 0.0, 1.0);
            pos[v][1] = std::clamp(pos[v][1] + disp[v][1] / len * step, 0.0, 1.0);
        }
        temperature = std::max(temperature - cooling, 1e-4);
    }
    return pos;
}

}  // namespace connsim
