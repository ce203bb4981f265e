#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "connsim/classifier.hpp"
#include "connsim/errors.hpp"
#include "connsim/importance.hpp"
#include "test_support.hpp"

using namespace connsim;

namespace {

double rel_err(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-7});
    return std::abs(a - b) / scale;
}

ModelParameters random_model(std::size_t q, std::uint64_t seed) {
    auto m = ModelParameters::initialize(fixtures::tiny_shape(q), seed);
    // Non-zero biases so every layer's bias gradient is exercised.
    Rng rng(seed + 99);
    for (Tensor t : {Tensor::E2E1Bias, Tensor::E2E2Bias, Tensor::E2NBias, Tensor::N2GBias,
                     Tensor::FC1Bias, Tensor::FC2Bias, Tensor::OutBias}) {
        for (double& b : m.tensor(t)) b = rng.normal(0.0, 0.1);
    }
    return m;
}

std::vector<LabeledConnectome> density_classes(std::size_t q, std::size_t per_class, std::uint64_t seed) {
    const std::array<double, 4> dens{0.95, 0.65, 0.35, 0.05};
    std::vector<LabeledConnectome> out;
    for (std::size_t i = 0; i < per_class; ++i) {
        for (Stage s : kStages) {
            const auto g = fixtures::random_graph(q, dens[static_cast<int>(s)], seed++);
            std::vector<Edge> flat = g.active_edges();
            for (Edge& e : flat) e.w = 50;
            out.push_back({Connectome::from_edges(q, flat), s});
        }
    }
    return out;
}

}  // namespace

TEST(Classify, ZeroModelIsUniform) {
    const ModelParameters zero(fixtures::tiny_shape(5));
    const auto p = classify(zero, fixtures::random_graph(5, 0.5, 1));
    for (Stage s : kStages) EXPECT_DOUBLE_EQ(p[s], 0.25);
    const auto imp = edge_importance(zero, fixtures::random_graph(5, 0.5, 1));
    for (double v : imp.values()) EXPECT_EQ(v, 0.0);
}

TEST(Classify, ZeroFinalLayerIsUniform) {
    auto m = random_model(6, 3);
    for (double& w : m.tensor(Tensor::OutWeight)) w = 0.0;
    for (double& b : m.tensor(Tensor::OutBias)) b = 0.0;
    const auto p = classify(m, fixtures::random_graph(6, 0.5, 2));
    for (Stage s : kStages) EXPECT_DOUBLE_EQ(p[s], 0.25);
}

TEST(Classify, SoftmaxNormalized) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto m = random_model(6, seed);
        const auto p = classify(m, fixtures::random_graph(6, 0.5, seed));
        double sum = 0.0;
        for (Stage s : kStages) {
            EXPECT_GT(p[s], 0.0);
            EXPECT_LT(p[s], 1.0);
            sum += p[s];
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

TEST(Classify, ShapeMismatch) {
    const auto m = random_model(6, 1);
    EXPECT_THROW(classify(m, fixtures::random_graph(5, 0.5, 1)), ContractViolation);
}

TEST(Saliency, MatchesCentralDifferences) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const std::size_t q = 3 + seed % 4;
        const auto m = random_model(q, seed);
        const auto g = fixtures::random_graph(q, 0.6, seed + 10);
        for (Stage c : kStages) {
            const auto imp = edge_importance(m, g, c);
            EXPECT_EQ(imp.target_class(), c);
            auto a = g.real_matrix();
            auto pc = [&] { return forward(m, a).probs[static_cast<int>(c)]; };
            const double h = 1e-4;
            auto partial = [&](std::size_t cell) {
                const double saved = a[cell];
                a[cell] = saved + h;
                const double up = pc();
                a[cell] = saved - h;
                const double down = pc();
                a[cell] = saved;
                return (up - down) / (2 * h);
            };
            for (NodeId i = 0; i < q; ++i) {
                EXPECT_EQ(imp.at(i, i), 0.0);
                for (NodeId j = i + 1; j < q; ++j) {
                    const double numeric = (partial(i * q + j) + partial(j * q + i)) / 2;
                    EXPECT_LE(rel_err(imp.at(i, j), numeric), 1e-4)
                        << "seed " << seed << " cell " << i << "," << j;
                    EXPECT_EQ(imp.at(i, j), imp.at(j, i));
                }
            }
        }
    }
}

TEST(Saliency, DefaultTargetIsPrediction) {
    const auto m = random_model(5, 8);
    const auto g = fixtures::random_graph(5, 0.5, 8);
    const auto imp = edge_importance(m, g);
    EXPECT_EQ(imp.target_class(), classify(m, g).argmax());
    BrainNetClassifier wrapped(m);
    EXPECT_EQ(wrapped.edge_importance(g).values().size(), 25u);
    EXPECT_EQ(wrapped.classify(g).p, classify(m, g).p);
}

TEST(Backward, ParameterGradientsMatchCentralDifferences) {
    const std::size_t q = 4;
    auto m = random_model(q, 21);
    const auto a = fixtures::random_graph(q, 0.7, 5).real_matrix();
    const int c = 2;
    auto pc = [&] { return forward(m, a).probs[c]; };

    const auto act = forward(m, a);
    std::array<double, 4> dlogits{};
    for (int k = 0; k < 4; ++k) dlogits[k] = act.probs[c] * ((k == c ? 1.0 : 0.0) - act.probs[k]);
    ModelParameters grads(m.shape());
    backward(m, act, dlogits, &grads, {});

    const double h = 1e-4;
    for (std::size_t t = 0; t < kTensorCount; ++t) {
        auto values = m.tensor(static_cast<Tensor>(t));
        const auto analytic = grads.tensor(static_cast<Tensor>(t));
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + h;
            const double up = pc();
            values[i] = saved - h;
            const double down = pc();
            values[i] = saved;
            const double numeric = (up - down) / (2 * h);
            EXPECT_LE(rel_err(analytic[i], numeric), 1e-4)
                << tensor_name(static_cast<Tensor>(t)) << "[" << i << "]";
        }
    }
}

TEST(ImportancePartition, Examples) {
    const auto all = fixtures::random_graph(6, 1.0, 1).active_edges();
    std::vector<Edge> ten(all.begin(), all.begin() + 10);
    const auto g10 = Connectome::from_edges(6, ten);
    std::vector<double> v(36, 0.0);
    for (std::size_t i = 0; i < 36; ++i) v[i] = static_cast<double>(i % 7);
    const ImportanceMap imp(6, v, Stage::CIS);
    const auto part = partition_by_importance(imp, g10, 0.4);
    EXPECT_EQ(part.important.size(), 4u);
    EXPECT_EQ(part.unimportant.size(), 6u);
    for (const auto& k : part.important) EXPECT_FALSE(part.unimportant.contains(k));

    const ImportanceMap flat(6, std::vector<double>(36, 1.0), Stage::CIS);
    const auto tie = partition_by_importance(flat, g10, 0.4);
    const auto edges = g10.active_edges();
    for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(tie.important.contains(edges[i].key()));

    const auto one = fixtures::unweighted(6, {{2, 3}});
    EXPECT_EQ(partition_by_importance(imp, one, 0.4).important.size(), 1u);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    const auto m = random_model(7, 4);
    std::stringstream ss;
    save_model(m, ss);
    const auto back = load_model(ss);
    EXPECT_EQ(back, m);
    std::string bytes = ss.str();
    bytes[0] = 'X';
    std::stringstream bad(bytes);
    EXPECT_THROW(load_model(bad), ValidationError);
    std::stringstream truncated(ss.str().substr(0, 40));
    EXPECT_THROW(load_model(truncated), ValidationError);
}

TEST(Train, LossDecreasesAndIsDeterministic) {
    const auto data = density_classes(8, 12, 100);
    TrainingConfig cfg;
    cfg.shape = fixtures::tiny_shape(8);
    cfg.max_epochs = 6;
    cfg.patience = 6;
    cfg.seed = 5;
    cfg.dropout = 0.0;
    cfg.learning_rate = 0.01;
    const auto a = train(data, cfg);
    ASSERT_FALSE(a.epochs.empty());
    EXPECT_LT(a.epochs.front().train_loss, a.initial_loss);
    EXPECT_TRUE(a.parameters.all_finite());
    const auto b = train(data, cfg);
    EXPECT_EQ(a.parameters, b.parameters);
    EXPECT_EQ(a.best_epoch, b.best_epoch);
}

TEST(Train, LearnsSeparableClasses) {
    const auto data = density_classes(10, 60, 1);
    const auto test = density_classes(10, 10, 5000);
    TrainingConfig cfg;
    cfg.shape = fixtures::tiny_shape(10);
    cfg.shape.e2e1 = cfg.shape.e2e2 = 4;
    cfg.shape.e2n = 8;
    cfg.shape.n2g = 16;
    cfg.shape.fc1 = 16;
    cfg.shape.fc2 = 8;
    cfg.max_epochs = 60;
    cfg.seed = 2;
    cfg.learning_rate = 0.005;
    const auto res = train(data, cfg);
    EXPECT_GE(accuracy(res.parameters, test), 0.8);
}

TEST(Train, RejectsBadInput) {
    TrainingConfig cfg;
    EXPECT_THROW(train({}, cfg), ContractViolation);
    std::vector<LabeledConnectome> mixed{{Connectome::empty(4), Stage::CIS}, {Connectome::empty(5), Stage::RR}};
    EXPECT_THROW(train(mixed, cfg), ContractViolation);
}
