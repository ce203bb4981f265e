#include <gtest/gtest.h>

#include <cmath>

#include "connsim/errors.hpp"
#include "connsim/metrics.hpp"
#include "test_support.hpp"

using namespace connsim;

namespace {

/// Pearson correlation of endpoint degrees over both orientations of every
/// edge, in plain floating point.
double newman_oracle(const Connectome& g) {
    const auto deg = g.degrees();
    std::vector<double> xs;
    std::vector<double> ys;
    for (const Edge& e : g.active_edges()) {
        xs.push_back(static_cast<double>(deg[e.x]));
        ys.push_back(static_cast<double>(deg[e.y]));
        xs.push_back(static_cast<double>(deg[e.y]));
        ys.push_back(static_cast<double>(deg[e.x]));
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / n;
        my += ys[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST(Density, Examples) {
    EXPECT_DOUBLE_EQ(density(fixtures::unweighted(3, {{0, 1}, {1, 2}, {0, 2}})), 0.5);
    EXPECT_DOUBLE_EQ(density(Connectome::empty(5)), 0.0);
    EXPECT_THROW(density(Connectome::empty(1)), UndefinedMetric);
    EXPECT_DOUBLE_EQ(density(84, 2000), 2000.0 / (84.0 * 83.0));
}

TEST(Assortativity, PathP4IsMinusHalf) {
    EXPECT_NEAR(assortativity(fixtures::unweighted(4, {{0, 1}, {1, 2}, {2, 3}})), -0.5, 1e-12);
}

TEST(Assortativity, RegularGraphsAreUndefined) {
    EXPECT_THROW(assortativity(fixtures::unweighted(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}})),
                 UndefinedMetric);
    EXPECT_THROW(assortativity(Connectome::empty(4)), UndefinedMetric);
    EXPECT_THROW(assortativity(fixtures::unweighted(3, {{0, 1}, {1, 2}, {0, 2}})), UndefinedMetric);
}

TEST(Assortativity, StarIsPerfectlyDisassortative) {
    EXPECT_NEAR(assortativity(fixtures::unweighted(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}})), -1.0, 1e-12);
}

TEST(Assortativity, IgnoresWeights) {
    const auto a = fixtures::unweighted(5, {{0, 1}, {1, 2}, {2, 3}, {1, 4}}, 3);
    const auto b = fixtures::unweighted(5, {{0, 1}, {1, 2}, {2, 3}, {1, 4}}, 99);
    EXPECT_EQ(assortativity(a), assortativity(b));
}

TEST(Assortativity, MatchesNewmanOracleOnRandomGraphs) {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto g = fixtures::random_graph(6 + seed % 30, 0.1 + 0.008 * static_cast<double>(seed), seed);
        double expected = 0.0;
        expected = newman_oracle(g);
        if (!std::isfinite(expected)) {
            EXPECT_THROW(assortativity(g), UndefinedMetric);
            continue;
        }
        EXPECT_NEAR(assortativity(g), expected, 1e-9) << "seed " << seed;
        ++checked;
    }
    EXPECT_GT(checked, 90);
}

TEST(DegreeMixing, MarginalsSumToOne) {
    const auto g = fixtures::random_graph(12, 0.3, 4);
    const DegreeMixing m = degree_mixing(g);
    double te = 0, ta = 0;
    for (const auto& [k, v] : m.e) te += v;
    for (const auto& [k, v] : m.a) ta += v;
    EXPECT_NEAR(te, 1.0, 1e-12);
    EXPECT_NEAR(ta, 1.0, 1e-12);
    EXPECT_NEAR(m.sigma_a, m.sigma_b, 1e-12);
}
