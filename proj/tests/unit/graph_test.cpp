#include <gtest/gtest.h>

#include "connsim/errors.hpp"
#include "connsim/graph.hpp"
#include "connsim/stage.hpp"
#include "test_support.hpp"

using namespace connsim;

TEST(EdgeKey, CanonicalizesOrientation) {
    EXPECT_EQ(EdgeKey::of(5, 2), (EdgeKey{2, 5}));
    EXPECT_THROW(EdgeKey::of(3, 3), ContractViolation);
}

TEST(EdgeSelection, SortsAndDeduplicates) {
    EdgeSelection s{{3, 4}, {0, 1}, {3, 4}};
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.keys().front(), (EdgeKey{0, 1}));
    EXPECT_TRUE(s.contains({3, 4}));
    EXPECT_FALSE(s.contains({1, 3}));
    s.insert({1, 2});
    EXPECT_EQ(s.keys()[1], (EdgeKey{1, 2}));
}

TEST(Connectome, FromMatrixRejectsBadInput) {
    const std::vector<int> asym{0, 1, 2, 0};
    EXPECT_THROW(Connectome::from_matrix(2, asym), ValidationError);
    const std::vector<int> diag{5, 0, 0, 0};
    EXPECT_THROW(Connectome::from_matrix(2, diag), ValidationError);
    const std::vector<int> range{0, 101, 101, 0};
    EXPECT_THROW(Connectome::from_matrix(2, range), ValidationError);
    const std::vector<int> negative{0, -1, -1, 0};
    EXPECT_THROW(Connectome::from_matrix(2, negative), ValidationError);
    const std::vector<int> ragged{0, 1, 1};
    EXPECT_THROW(Connectome::from_matrix(2, ragged), ValidationError);
}

TEST(Connectome, AsymmetryMessageNamesCells) {
    const std::vector<int> m{0, 1, 0, 2, 0, 0, 0, 0, 0};
    try {
        Connectome::from_matrix(3, m);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("(0,1)"), std::string::npos) << e.what();
    }
}

TEST(Connectome, BasicQueries) {
    const auto g = fixtures::unweighted(4, {{0, 1}, {1, 2}, {1, 3}}, 40);
    EXPECT_EQ(g.node_count(), 4u);
    EXPECT_EQ(g.edge_count(), 3u);
    EXPECT_EQ(g.degree(1), 3u);
    EXPECT_EQ(g.degree(0), 1u);
    EXPECT_EQ(g.weight(2, 1), 40);
    EXPECT_TRUE(g.is_active(3, 1));
    EXPECT_FALSE(g.is_active(0, 2));
    EXPECT_THROW(g.degree(4), ContractViolation);
    const auto edges = g.active_edges();
    ASSERT_EQ(edges.size(), 3u);
    EXPECT_EQ(edges[0], (Edge{0, 1, 40}));
    EXPECT_EQ(edges[2], (Edge{1, 3, 40}));
}

TEST(Connectome, WithWeightsIsCopyOnWrite) {
    const auto g = fixtures::unweighted(3, {{0, 1}, {1, 2}}, 10);
    const std::vector<Edge> upd{{1, 2, 0}, {0, 2, 7}};
    const auto h = g.with_weights(upd);
    EXPECT_EQ(g.weight(1, 2), 10);
    EXPECT_EQ(h.weight(1, 2), 0);
    EXPECT_EQ(h.weight(2, 0), 7);
    EXPECT_EQ(h.edge_count(), 2u);
}

TEST(Connectome, RealMatrixScales) {
    const auto g = fixtures::unweighted(2, {{0, 1}}, 57);
    const auto m = g.real_matrix();
    EXPECT_DOUBLE_EQ(m[1], 0.57);
    EXPECT_DOUBLE_EQ(m[2], 0.57);
    EXPECT_EQ(m[0], 0.0);
}

TEST(Connectome, RequireActive) {
    const auto g = fixtures::unweighted(3, {{0, 1}});
    EXPECT_NO_THROW(require_active(g, EdgeSelection{{0, 1}}));
    EXPECT_THROW(require_active(g, EdgeSelection{{1, 2}}), ContractViolation);
}

TEST(Stage, ParseAndArgmaxTieOrder) {
    EXPECT_EQ(parse_stage("cis"), Stage::CIS);
    EXPECT_EQ(parse_stage("Sp"), Stage::SP);
    EXPECT_FALSE(parse_stage("XX"));
    StageProbabilities p;
    EXPECT_EQ(p.argmax(), Stage::CIS);
    p.p = {0.1, 0.4, 0.4, 0.1};
    EXPECT_EQ(p.argmax(), Stage::RR);
    p.p = {0.1, 0.2, 0.3, 0.4};
    EXPECT_EQ(p.argmax(), Stage::SP);
}
