#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "connsim/graph.hpp"
#include "connsim/importance.hpp"
#include "connsim/stage.hpp"

namespace connsim {

/// Layer widths of the topology-aware classifier:
/// E2E -> E2E -> E2N -> node-to-graph dense -> FC -> FC -> 4-way softmax.
struct ModelShape {
    std::size_t nodes = 84;
    std::size_t e2e1 = 32;
    std::size_t e2e2 = 32;
    std::size_t e2n = 64;
    std::size_t n2g = 256;
    std::size_t fc1 = 128;
    std::size_t fc2 = 30;
    double leak = 0.33;

    static constexpr std::size_t kClasses = 4;

    friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

enum class Tensor : std::size_t {
    E2E1Row, E2E1Col, E2E1Bias,
    E2E2Row, E2E2Col, E2E2Bias,
    E2NWeight, E2NBias,
    N2GWeight, N2GBias,
    FC1Weight, FC1Bias,
    FC2Weight, FC2Bias,
    OutWeight, OutBias,
    Count
};

inline constexpr std::size_t kTensorCount = static_cast<std::size_t>(Tensor::Count);

std::string_view tensor_name(Tensor t);

/// All weights and biases in one flat buffer; `tensor()` slices it.
class ModelParameters {
public:
    ModelParameters() = default;
    /// Zero-initialised parameters for `shape`.
    explicit ModelParameters(const ModelShape& shape);

    /// He-style normal initialisation, biases zero.
    static ModelParameters initialize(const ModelShape& shape, std::uint64_t seed);

    const ModelShape& shape() const noexcept { return shape_; }
    std::span<double> tensor(Tensor t);
    std::span<const double> tensor(Tensor t) const;
    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }

    bool all_finite() const;

    friend bool operator==(const ModelParameters&, const ModelParameters&) = default;

private:
    ModelShape shape_;
    std::array<std::size_t, kTensorCount + 1> offsets_{};
    std::vector<double> data_;
};

/// Cached intermediate values of one forward pass (pre-activations `z*`,
/// activations `a*`).
struct Activations {
    std::vector<double> input;
    std::vector<double> z1, a1, z2, a2, z3, a3, z4, a4, z5, a5, z6, a6;
    std::vector<double> logits;
    std::array<double, 4> probs{};
    /// Dropout masks (training only; empty at inference).
    std::vector<double> mask3, mask4;
};

Activations forward(const ModelParameters& model, std::span<const double> input);

/// Backpropagates dL/dlogits. Accumulates parameter gradients into `grads`
/// (same layout as `model`, may be null) and writes dL/dinput into `d_input`
/// (may be empty).
void backward(const ModelParameters& model, const Activations& act,
              std::span<const double> d_logits, ModelParameters* grads,
              std::span<double> d_input);

/// Pluggable classifier used by the simulation engine.
class StageClassifier {
public:
    virtual ~StageClassifier() = default;
    virtual std::size_t node_count() const = 0;
    virtual StageProbabilities classify(const Connectome& g) const = 0;
    /// Saliency of the score of `target` (default: predicted class).
    virtual ImportanceMap edge_importance(const Connectome& g,
                                          std::optional<Stage> target = std::nullopt) const = 0;
};

StageProbabilities classify(const ModelParameters& model, const Connectome& g);

/// d p_c / d A(i,j) on the real-valued adjacency, symmetrised, zero diagonal.
ImportanceMap edge_importance(const ModelParameters& model, const Connectome& g,
                              std::optional<Stage> target = std::nullopt);

class BrainNetClassifier final : public StageClassifier {
public:
    explicit BrainNetClassifier(ModelParameters params) : params_(std::move(params)) {}

    std::size_t node_count() const override { return params_.shape().nodes; }
    StageProbabilities classify(const Connectome& g) const override;
    ImportanceMap edge_importance(const Connectome& g,
                                  std::optional<Stage> target = std::nullopt) const override;

    const ModelParameters& parameters() const noexcept { return params_; }

private:
    ModelParameters params_;
};

struct LabeledConnectome {
    Connectome graph;
    Stage label;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double validation_accuracy = 0.0;
};

struct TrainingConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 16;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    /// Dropout rate after the edge-to-node and node-to-graph layers.
    double dropout = 0.5;
    /// Global gradient-norm cap per batch; 0 disables.
    double clip_norm = 1.0;
    /// Share of the dataset held out for early stopping; 0 uses training loss.
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
    /// Layer widths; `nodes` is taken from the data.
    ModelShape shape;
    std::function<void(const EpochStats&)> on_epoch;
};

struct TrainingResult {
    ModelParameters parameters;  // best validation loss
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;
    double initial_loss = 0.0;  // training loss before the first update
};

/// Cross-entropy minimisation with Adam and early stopping. Deterministic
/// given the seed.
TrainingResult train(std::span<const LabeledConnectome> dataset, const TrainingConfig& config);

/// Mean cross-entropy of `model` on `data`.
double mean_loss(const ModelParameters& model, std::span<const LabeledConnectome> data);
double accuracy(const ModelParameters& model, std::span<const LabeledConnectome> data);

/// Binary checkpoint, see docs/formats.md.
void save_model(const ModelParameters& model, std::ostream& out);
ModelParameters load_model(std::istream& in);
void save_model(const ModelParameters& model, const std::string& path);
ModelParameters load_model(const std::string& path);

}  // namespace connsim
