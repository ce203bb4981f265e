#include "connsim/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "connsim/errors.hpp"
#include "connsim/nn/kernels.hpp"
#include "connsim/rng.hpp"

namespace connsim {

namespace {

using nn::CrossShape;
using nn::DenseShape;

struct Layout {
    CrossShape e2e1, e2e2, e2n;
    DenseShape n2g, fc1, fc2, out;
};

Layout layout_of(const ModelShape& s) {
    Layout l;
    l.e2e1 = {s.nodes, 1, s.e2e1};
    l.e2e2 = {s.nodes, s.e2e1, s.e2e2};
    l.e2n = {s.nodes, s.e2e2, s.e2n};
    l.n2g = {s.e2n * s.nodes, s.n2g};
    l.fc1 = {s.n2g, s.fc1};
    l.fc2 = {s.fc1, s.fc2};
    l.out = {s.fc2, ModelShape::kClasses};
    return l;
}

std::array<std::size_t, kTensorCount> tensor_sizes(const ModelShape& s) {
    const std::size_t q = s.nodes;
    return {
        s.e2e1 * q, s.e2e1 * q, s.e2e1,
        s.e2e2 * s.e2e1 * q, s.e2e2 * s.e2e1 * q, s.e2e2,
        s.e2n * s.e2e2 * q, s.e2n,
        s.n2g * s.e2n * q, s.n2g,
        s.fc1 * s.n2g, s.fc1,
        s.fc2 * s.fc1, s.fc2,
        ModelShape::kClasses * s.fc2, ModelShape::kClasses,
    };
}

/// Fan-in of the unit fed by each weight tensor; 0 for biases.
std::array<std::size_t, kTensorCount> fan_in(const ModelShape& s) {
    const std::size_t q = s.nodes;
    return {
        2 * q, 2 * q, 0,
        2 * s.e2e1 * q, 2 * s.e2e1 * q, 0,
        s.e2e2 * q, 0,
        s.e2n * q, 0,
        s.n2g, 0,
        s.fc1, 0,
        s.fc2, 0,
    };
}

void leaky(std::span<const double> z, std::vector<double>& a, double alpha) {
    a.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : alpha * z[i];
}

/// d_z = d_a * leaky'(z), in place on d_a.
void leaky_back(std::span<const double> z, std::vector<double>& d, double alpha) {
    for (std::size_t i = 0; i < z.size(); ++i) d[i] *= z[i] > 0.0 ? 1.0 : alpha;
}

std::span<double> grad_of(ModelParameters* g, Tensor t) {
    return g ? g->tensor(t) : std::span<double>{};
}

}  // namespace

std::string_view tensor_name(Tensor t) {
    static constexpr std::array<std::string_view, kTensorCount> names{
        "e2e1.row", "e2e1.col", "e2e1.bias", "e2e2.row", "e2e2.col", "e2e2.bias",
        "e2n.weight", "e2n.bias", "n2g.weight", "n2g.bias", "fc1.weight", "fc1.bias",
        "fc2.weight", "fc2.bias", "out.weight", "out.bias"};
    return names.at(static_cast<std::size_t>(t));
}

ModelParameters::ModelParameters(const ModelShape& shape) : shape_(shape) {
    if (shape.nodes == 0 || shape.e2e1 == 0 || shape.e2e2 == 0 || shape.e2n == 0 ||
        shape.n2g == 0 || shape.fc1 == 0 || shape.fc2 == 0) {
        throw ContractViolation("model shape has an empty layer");
    }
    const auto sizes = tensor_sizes(shape);
    offsets_[0] = 0;
    for (std::size_t t = 0; t < kTensorCount; ++t) offsets_[t + 1] = offsets_[t] + sizes[t];
    data_.assign(offsets_[kTensorCount], 0.0);
}

ModelParameters ModelParameters::initialize(const ModelShape& shape, std::uint64_t seed) {
    ModelParameters p(shape);
    Rng rng(seed);
    const auto fans = fan_in(shape);
    const double gain = std::sqrt(2.0 / (1.0 + shape.leak * shape.leak));
    for (std::size_t t = 0; t < kTensorCount; ++t) {
        if (fans[t] == 0) continue;
        const double sd = gain / std::sqrt(static_cast<double>(fans[t]));
        for (double& w : p.tensor(static_cast<Tensor>(t))) w = rng.normal(0.0, sd);
    }
    return p;
}

std::span<double> ModelParameters::tensor(Tensor t) {
    const auto i = static_cast<std::size_t>(t);
    return std::span<double>(data_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

std::span<const double> ModelParameters::tensor(Tensor t) const {
    const auto i = static_cast<std::size_t>(t);
    return std::span<const double>(data_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

bool ModelParameters::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

void drop(std::vector<double>& a, std::vector<double>& mask, double rate, Rng& rng) {
    mask.resize(a.size());
    const double keep = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < a.size(); ++i) {
        mask[i] = rng.uniform01() < rate ? 0.0 : keep;
        a[i] *= mask[i];
    }
}

void undrop(const std::vector<double>& mask, std::vector<double>& d) {
    if (mask.empty()) return;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= mask[i];
}

Activations forward_impl(const ModelParameters& m, std::span<const double> input, double rate,
                         Rng* rng);

}  // namespace

Activations forward(const ModelParameters& m, std::span<const double> input) {
    return forward_impl(m, input, 0.0, nullptr);
}

namespace {

Activations forward_impl(const ModelParameters& m, std::span<const double> input, double rate,
                         Rng* rng) {
    const ModelShape& s = m.shape();
    const Layout l = layout_of(s);
    const std::size_t q = s.nodes;
    if (input.size() != q * q) {
        throw ContractViolation("classifier expects " + std::to_string(q) + "x" +
                                std::to_string(q) + " input");
    }
    Activations a;
    a.input.assign(input.begin(), input.end());

    a.z1.resize(s.e2e1 * q * q);
    nn::edge2edge_forward(l.e2e1, a.input, m.tensor(Tensor::E2E1Row), m.tensor(Tensor::E2E1Col),
                          m.tensor(Tensor::E2E1Bias), a.z1);
    leaky(a.z1, a.a1, s.leak);

    a.z2.resize(s.e2e2 * q * q);
    nn::edge2edge_forward(l.e2e2, a.a1, m.tensor(Tensor::E2E2Row), m.tensor(Tensor::E2E2Col),
                          m.tensor(Tensor::E2E2Bias), a.z2);
    leaky(a.z2, a.a2, s.leak);

    a.z3.resize(s.e2n * q);
    nn::edge2node_forward(l.e2n, a.a2, m.tensor(Tensor::E2NWeight), m.tensor(Tensor::E2NBias),
                          a.z3);
    leaky(a.z3, a.a3, s.leak);
    if (rng) drop(a.a3, a.mask3, rate, *rng);

    a.z4.resize(s.n2g);
    nn::dense_forward(l.n2g, a.a3, m.tensor(Tensor::N2GWeight), m.tensor(Tensor::N2GBias), a.z4);
    leaky(a.z4, a.a4, s.leak);
    if (rng) drop(a.a4, a.mask4, rate, *rng);

    a.z5.resize(s.fc1);
    nn::dense_forward(l.fc1, a.a4, m.tensor(Tensor::FC1Weight), m.tensor(Tensor::FC1Bias), a.z5);
    leaky(a.z5, a.a5, s.leak);

    a.z6.resize(s.fc2);
    nn::dense_forward(l.fc2, a.a5, m.tensor(Tensor::FC2Weight), m.tensor(Tensor::FC2Bias), a.z6);
    leaky(a.z6, a.a6, s.leak);

    a.logits.resize(ModelShape::kClasses);
    nn::dense_forward(l.out, a.a6, m.tensor(Tensor::OutWeight), m.tensor(Tensor::OutBias),
                      a.logits);

    const double top = *std::max_element(a.logits.begin(), a.logits.end());
    if (!std::isfinite(top)) {
        throw NumericError("classifier produced a non-finite logit");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < ModelShape::kClasses; ++k) {
        a.probs[k] = std::exp(a.logits[k] - top);
        total += a.probs[k];
    }
    for (double& p : a.probs) p /= total;
    return a;
}

}  // namespace

void backward(const ModelParameters& m, const Activations& a, std::span<const double> d_logits,
              ModelParameters* g, std::span<double> d_input) {
    const ModelShape& s = m.shape();
    const Layout l = layout_of(s);
    const std::size_t q = s.nodes;
    if (g && !(g->shape() == s)) {
        throw ContractViolation("gradient buffer shape differs from model");
    }

    std::vector<double> d6(s.fc2, 0.0);
    nn::dense_backward(l.out, a.a6, m.tensor(Tensor::OutWeight), d_logits,
                       grad_of(g, Tensor::OutWeight), grad_of(g, Tensor::OutBias), d6);
    leaky_back(a.z6, d6, s.leak);

    std::vector<double> d5(s.fc1, 0.0);
    nn::dense_backward(l.fc2, a.a5, m.tensor(Tensor::FC2Weight), d6,
                       grad_of(g, Tensor::FC2Weight), grad_of(g, Tensor::FC2Bias), d5);
    leaky_back(a.z5, d5, s.leak);

    std::vector<double> d4(s.n2g, 0.0);
    nn::dense_backward(l.fc1, a.a4, m.tensor(Tensor::FC1Weight), d5,
                       grad_of(g, Tensor::FC1Weight), grad_of(g, Tensor::FC1Bias), d4);
    undrop(a.mask4, d4);
    leaky_back(a.z4, d4, s.leak);

    std::vector<double> d3(s.e2n * q, 0.0);
    nn::dense_backward(l.n2g, a.a3, m.tensor(Tensor::N2GWeight), d4,
                       grad_of(g, Tensor::N2GWeight), grad_of(g, Tensor::N2GBias), d3);
    undrop(a.mask3, d3);
    leaky_back(a.z3, d3, s.leak);

    std::vector<double> d2(s.e2e2 * q * q, 0.0);
    nn::edge2node_backward(l.e2n, a.a2, m.tensor(Tensor::E2NWeight), d3,
                           grad_of(g, Tensor::E2NWeight), grad_of(g, Tensor::E2NBias), d2);
    leaky_back(a.z2, d2, s.leak);

    std::vector<double> d1(s.e2e1 * q * q, 0.0);
    nn::edge2edge_backward(l.e2e2, a.a1, m.tensor(Tensor::E2E2Row), m.tensor(Tensor::E2E2Col), d2,
                           grad_of(g, Tensor::E2E2Row), grad_of(g, Tensor::E2E2Col),
                           grad_of(g, Tensor::E2E2Bias), d1);
    leaky_back(a.z1, d1, s.leak);

    if (!d_input.empty()) {
        std::fill(d_input.begin(), d_input.end(), 0.0);
    }
    nn::edge2edge_backward(l.e2e1, a.input, m.tensor(Tensor::E2E1Row), m.tensor(Tensor::E2E1Col),
                           d1, grad_of(g, Tensor::E2E1Row), grad_of(g, Tensor::E2E1Col),
                           grad_of(g, Tensor::E2E1Bias), d_input);
}

namespace {

void check_nodes(const ModelParameters& model, const Connectome& g) {
    if (model.shape().nodes != g.node_count()) {
        throw ContractViolation("model expects " + std::to_string(model.shape().nodes) +
                                " nodes, graph has " + std::to_string(g.node_count()));
    }
}

StageProbabilities to_probabilities(const std::array<double, 4>& p) {
    StageProbabilities out;
    out.p = p;
    return out;
}

}  // namespace

StageProbabilities classify(const ModelParameters& model, const Connectome& g) {
    check_nodes(model, g);
    return to_probabilities(forward(model, g.real_matrix()).probs);
}

ImportanceMap edge_importance(const ModelParameters& model, const Connectome& g,
                              std::optional<Stage> target) {
    check_nodes(model, g);
    const Activations act = forward(model, g.real_matrix());
    const Stage c = target.value_or(to_probabilities(act.probs).argmax());
    const auto ci = static_cast<std::size_t>(c);
    // d p_c / d logit_k = p_c (delta_ck - p_k)
    std::array<double, 4> d_logits{};
    for (std::size_t k = 0; k < 4; ++k) {
        d_logits[k] = act.probs[ci] * ((k == ci ? 1.0 : 0.0) - act.probs[k]);
    }
    std::vector<double> d_input(g.node_count() * g.node_count(), 0.0);
    backward(model, act, d_logits, nullptr, d_input);
    return ImportanceMap(g.node_count(), std::move(d_input), c);
}

StageProbabilities BrainNetClassifier::classify(const Connectome& g) const {
    return connsim::classify(params_, g);
}

ImportanceMap BrainNetClassifier::edge_importance(const Connectome& g,
                                                  std::optional<Stage> target) const {
    return connsim::edge_importance(params_, g, target);
}

double mean_loss(const ModelParameters& model, std::span<const LabeledConnectome> data) {
    if (data.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : data) {
        const auto act = forward(model, s.graph.real_matrix());
        total -= std::log(std::max(act.probs[static_cast<std::size_t>(s.label)], 1e-300));
    }
    return total / static_cast<double>(data.size());
}

double accuracy(const ModelParameters& model, std::span<const LabeledConnectome> data) {
    if (data.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& s : data) {
        hits += classify(model, s.graph).argmax() == s.label;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainingResult train(std::span<const LabeledConnectome> dataset, const TrainingConfig& cfg) {
    if (dataset.empty()) {
        throw ContractViolation("training set is empty");
    }
    if (!(cfg.learning_rate > 0.0) || cfg.patience < 1 || cfg.batch_size < 1 ||
        !(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
        throw ContractViolation("invalid training configuration");
    }
    const std::size_t q = dataset.front().graph.node_count();
    for (const auto& s : dataset) {
        if (s.graph.node_count() != q) {
            throw ContractViolation("training graphs disagree on node count");
        }
    }

    Rng split_rng(mix_seed(cfg.seed, 1));
    const auto order = sample_without_replacement(dataset.size(), dataset.size(), split_rng);
    std::size_t n_val = static_cast<std::size_t>(
        std::floor(cfg.validation_fraction * static_cast<double>(dataset.size())));
    if (n_val >= dataset.size()) n_val = dataset.size() - 1;
    std::vector<LabeledConnectome> train_set;
    std::vector<LabeledConnectome> val_set;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_val ? val_set : train_set).push_back(dataset[order[i]]);
    }
    // Real-valued inputs are reused every epoch.
    std::vector<std::vector<double>> inputs;
    inputs.reserve(train_set.size());
    for (const auto& s : train_set) inputs.push_back(s.graph.real_matrix());

    ModelShape shape = cfg.shape;
    shape.nodes = q;
    ModelParameters params = ModelParameters::initialize(shape, mix_seed(cfg.seed, 2));
    ModelParameters grads(shape);
    std::vector<double> m1(params.flat().size(), 0.0);
    std::vector<double> m2(params.flat().size(), 0.0);
    std::uint64_t step = 0;

    TrainingResult result;
    result.initial_loss = mean_loss(params, train_set);
    result.parameters = params;
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    Rng epoch_rng(mix_seed(cfg.seed, 3));
    Rng drop_rng(mix_seed(cfg.seed, 4));

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto perm = sample_without_replacement(train_set.size(), train_set.size(), epoch_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < perm.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(perm.size(), start + cfg.batch_size);
            std::fill(grads.flat().begin(), grads.flat().end(), 0.0);
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t idx = perm[b];
                const auto act = cfg.dropout > 0.0
                                     ? forward_impl(params, inputs[idx], cfg.dropout, &drop_rng)
                                     : forward(params, inputs[idx]);
                const auto label = static_cast<std::size_t>(train_set[idx].label);
                epoch_loss -= std::log(std::max(act.probs[label], 1e-300));
                std::array<double, 4> d_logits{};
                for (std::size_t k = 0; k < 4; ++k) {
                    d_logits[k] = act.probs[k] - (k == label ? 1.0 : 0.0);
                }
                backward(params, act, d_logits, &grads, {});
            }
            double scale = 1.0 / static_cast<double>(end - start);
            if (cfg.clip_norm > 0.0) {
                double sq = 0.0;
                for (double v : grads.flat()) sq += v * v;
                const double norm = std::sqrt(sq) * scale;
                if (norm > cfg.clip_norm) scale *= cfg.clip_norm / norm;
            }
            ++step;
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            auto w = params.flat();
            auto gr = grads.flat();
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double gi = gr[i] * scale;
                m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * gi;
                m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * gi * gi;
                w[i] -= cfg.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + cfg.epsilon);
            }
        }
        if (!params.all_finite()) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch));
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(train_set.size());
        if (val_set.empty()) {
            stats.validation_loss = mean_loss(params, train_set);
            stats.validation_accuracy = accuracy(params, train_set);
        } else {
            stats.validation_loss = mean_loss(params, val_set);
            stats.validation_accuracy = accuracy(params, val_set);
        }
        result.epochs.push_back(stats);
        if (cfg.on_epoch) cfg.on_epoch(stats);

        if (stats.validation_loss < best) {
            best = stats.validation_loss;
            result.parameters = params;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

namespace {

constexpr char kMagic[8] = {'C', 'N', 'S', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw ValidationError("model checkpoint is truncated");
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

void save_model(const ModelParameters& model, std::ostream& out) {
    const ModelShape& s = model.shape();
    out.write(kMagic, sizeof(kMagic));
    write_le<std::uint32_t>(out, kFormatVersion);
    write_le<std::uint32_t>(out, 0);
    for (std::uint64_t v : {s.nodes, s.e2e1, s.e2e2, s.e2n, s.n2g, s.fc1, s.fc2, ModelShape::kClasses}) {
        write_le<std::uint64_t>(out, v);
    }
    write_le<double>(out, s.leak);
    write_le<std::uint64_t>(out, model.flat().size());
    for (double v : model.flat()) write_le<double>(out, v);
    if (!out) throw Error("failed to write model checkpoint");
}

ModelParameters load_model(std::istream& in) {
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        throw ValidationError("not a connsim model checkpoint");
    }
    const auto version = read_le<std::uint32_t>(in);
    if (version != kFormatVersion) {
        throw ValidationError("unsupported checkpoint version " + std::to_string(version));
    }
    read_le<std::uint32_t>(in);
    ModelShape s;
    s.nodes = read_le<std::uint64_t>(in);
    s.e2e1 = read_le<std::uint64_t>(in);
    s.e2e2 = read_le<std::uint64_t>(in);
    s.e2n = read_le<std::uint64_t>(in);
    s.n2g = read_le<std::uint64_t>(in);
    s.fc1 = read_le<std::uint64_t>(in);
    s.fc2 = read_le<std::uint64_t>(in);
    if (read_le<std::uint64_t>(in) != ModelShape::kClasses) {
        throw ValidationError("checkpoint has an unexpected class count");
    }
    s.leak = read_le<double>(in);
    ModelParameters p(s);
    if (read_le<std::uint64_t>(in) != p.flat().size()) {
        throw ValidationError("checkpoint parameter count does not match its shape");
    }
    for (double& v : p.flat()) v = read_le<double>(in);
    if (!p.all_finite()) {
        throw ValidationError("checkpoint contains non-finite parameters");
    }
    return p;
}

void save_model(const ModelParameters& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    save_model(model, out);
}

ModelParameters load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open model '" + path + "'");
    return load_model(in);
}

}  // namespace connsim
