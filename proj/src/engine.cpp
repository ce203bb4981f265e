#include "connsim/engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "connsim/errors.hpp"
#include "connsim/rng.hpp"

namespace connsim {

DegradationMap::DegradationMap(Connectome g0, int p, std::vector<std::uint8_t> dc, std::size_t size)
    : origin_(std::move(g0)), percent_(p), q_(origin_.node_count()), dc_(std::move(dc)), size_(size) {}

std::optional<int> DegradationMap::at(EdgeKey k) const {
    if (k.x >= q_ || k.y >= q_) return std::nullopt;
    const int d = dc_[static_cast<std::size_t>(k.x) * q_ + k.y];
    if (d == 0) return std::nullopt;
    return d;
}

std::vector<Edge> DegradationMap::entries() const {
    std::vector<Edge> out;
    out.reserve(size_);
    for (NodeId x = 0; x < q_; ++x) {
        for (NodeId y = x + 1; y < q_; ++y) {
            if (const int d = dc_[static_cast<std::size_t>(x) * q_ + y]; d > 0) out.push_back({x, y, d});
        }
    }
    return out;
}

DegradationMap compute_degradation_map(const Connectome& g0, int p) {
    if (p < 1 || p > 100) {
        throw ContractViolation("degradation percentage must be in 1..100, got " + std::to_string(p));
    }
    const std::size_t q = g0.node_count();
    std::vector<std::uint8_t> dc(q * q, 0);
    std::size_t n = 0;
    for (const Edge& e : g0.active_edges()) {
        dc[static_cast<std::size_t>(e.x) * q + e.y] = static_cast<std::uint8_t>((e.w * p + 99) / 100);
        ++n;
    }
    return DegradationMap(g0, p, std::move(dc), n);
}

Connectome apply_degradation(const Connectome& g, const EdgeSelection& sel,
                             const DegradationMap& dc) {
    if (g.node_count() != dc.node_count()) {
        throw ContractViolation("degradation map was computed for a different node count");
    }
    require_active(g, sel);
    std::vector<Edge> updates;
    updates.reserve(sel.size());
    for (const EdgeKey& k : sel) {
        const auto d = dc.at(k);
        if (!d) {
            throw ContractViolation("edge (" + std::to_string(k.x) + "," + std::to_string(k.y) +
                                    ") has no degradation coefficient");
        }
        updates.push_back({k.x, k.y, std::max(g.weight(k.x, k.y) - *d, 0)});
    }
    return g.with_weights(updates);
}

EdgeSelection random_baseline_selection(const Connectome& g, std::size_t n,
                                        const EdgeSelection& excluded, std::uint64_t seed) {
    std::vector<EdgeKey> eligible;
    for (const Edge& e : g.active_edges()) {
        if (!excluded.contains(e.key())) eligible.push_back(e.key());
    }
    if (n > eligible.size()) {
        throw Infeasible("random baseline needs " + std::to_string(n) + " edges but only " +
                             std::to_string(eligible.size()) + " are eligible",
                         static_cast<double>(eligible.size()));
    }
    Rng rng(seed);
    std::vector<EdgeKey> picked;
    picked.reserve(n);
    for (std::size_t i : sample_without_replacement(eligible.size(), n, rng)) {
        picked.push_back(eligible[i]);
    }
    return EdgeSelection(std::move(picked));
}

namespace {

constexpr std::array<std::pair<PolicyKind, std::string_view>, 9> kPolicyNames{{
    {PolicyKind::Clique, "clique"},
    {PolicyKind::IndependentSet, "independent-set"},
    {PolicyKind::MaxDegree, "max-degree"},
    {PolicyKind::KHub, "k-hub"},
    {PolicyKind::MinVertexCover, "mvc"},
    {PolicyKind::Density, "density"},
    {PolicyKind::Assortativity, "assortativity"},
    {PolicyKind::Random, "random"},
    {PolicyKind::Manual, "manual"},
}};

constexpr std::array<std::pair<ImportanceMode, std::string_view>, 5> kImportanceNames{{
    {ImportanceMode::None, "none"},
    {ImportanceMode::OnlyImportant, "only-important"},
    {ImportanceMode::OnlyUnimportant, "only-unimportant"},
    {ImportanceMode::PreferImportant, "prefer-important"},
    {ImportanceMode::PreferUnimportant, "prefer-unimportant"},
}};

constexpr std::array<std::pair<Outcome, std::string_view>, 4> kOutcomeNames{{
    {Outcome::Completed, "completed"},
    {Outcome::Aborted, "aborted"},
    {Outcome::Errored, "errored"},
    {Outcome::Cancelled, "cancelled"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
    for (const auto& [e, name] : table) {
        if (e == v) return name;
    }
    return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const std::array<std::pair<E, std::string_view>, N>& table,
                          std::string_view text) {
    for (const auto& [e, name] : table) {
        if (name == text) return e;
    }
    return std::nullopt;
}

CriterionKind criterion_of(PolicyKind k) {
    switch (k) {
        case PolicyKind::Clique: return CriterionKind::MaxClique;
        case PolicyKind::IndependentSet: return CriterionKind::IndependentSet;
        case PolicyKind::MaxDegree: return CriterionKind::MaxDegreeNode;
        case PolicyKind::KHub: return CriterionKind::KHub;
        case PolicyKind::MinVertexCover: return CriterionKind::MinVertexCover;
        default: break;
    }
    throw ContractViolation("policy '" + std::string(to_string(k)) + "' is not structural");
}

bool is_restricting(ImportanceMode m) {
    return m == ImportanceMode::OnlyImportant || m == ImportanceMode::OnlyUnimportant;
}

bool is_biasing(ImportanceMode m) {
    return m == ImportanceMode::PreferImportant || m == ImportanceMode::PreferUnimportant;
}

UpdateMode update_mode_of(const PolicySpec& p) {
    if (is_structural(p.kind)) {
        return is_restricting(p.importance) ? UpdateMode::Remove : UpdateMode::Degrade;
    }
    if (is_metric(p.kind)) return UpdateMode::Remove;
    return p.update;
}

}  // namespace

std::string_view to_string(PolicyKind k) { return name_of(kPolicyNames, k); }
std::optional<PolicyKind> parse_policy(std::string_view text) { return value_of(kPolicyNames, text); }
std::string_view to_string(ImportanceMode m) { return name_of(kImportanceNames, m); }
std::optional<ImportanceMode> parse_importance_mode(std::string_view text) {
    return value_of(kImportanceNames, text);
}
std::string_view to_string(UpdateMode m) { return m == UpdateMode::Degrade ? "degrade" : "remove"; }
std::optional<UpdateMode> parse_update_mode(std::string_view text) {
    if (text == "degrade") return UpdateMode::Degrade;
    if (text == "remove") return UpdateMode::Remove;
    return std::nullopt;
}
std::string_view to_string(Outcome o) { return name_of(kOutcomeNames, o); }
std::optional<Outcome> parse_outcome(std::string_view text) { return value_of(kOutcomeNames, text); }

bool is_structural(PolicyKind k) {
    return k == PolicyKind::Clique || k == PolicyKind::IndependentSet ||
           k == PolicyKind::MaxDegree || k == PolicyKind::KHub ||
           k == PolicyKind::MinVertexCover;
}

bool is_metric(PolicyKind k) { return k == PolicyKind::Density || k == PolicyKind::Assortativity; }

void validate(const PolicySpec& p) {
    if (is_structural(p.kind) && is_biasing(p.importance)) {
        throw ContractViolation("importance mode '" + std::string(to_string(p.importance)) +
                                "' applies to metric policies only");
    }
    if (is_metric(p.kind) && is_restricting(p.importance)) {
        throw ContractViolation("importance mode '" + std::string(to_string(p.importance)) +
                                "' applies to structural policies only");
    }
    if (!is_structural(p.kind) && !is_metric(p.kind) && p.importance != ImportanceMode::None) {
        throw ContractViolation("policy '" + std::string(to_string(p.kind)) +
                                "' does not take an importance mode");
    }
    if (p.kind == PolicyKind::KHub && p.k == 0) {
        throw ContractViolation("k-hub needs k >= 1");
    }
    if (is_metric(p.kind) && !(p.relative_change > 0.0 && p.relative_change <= 1.0)) {
        throw ContractViolation("relative change must be in (0, 1]");
    }
    if (p.kind == PolicyKind::Random && p.counts.empty()) {
        throw ContractViolation("random policy needs per-iteration edge counts");
    }
}

ExitCondition ExitCondition::max_iterations(std::size_t n) {
    if (n < 1) throw ContractViolation("max iterations must be at least 1");
    return {Kind::MaxIterations, n, 1e-3};
}

ExitCondition ExitCondition::transition_detected() { return {Kind::TransitionDetected, 0, 1e-3}; }

ExitCondition ExitCondition::probability_delta_below(double epsilon) {
    if (!(epsilon > 0.0)) throw ContractViolation("probability delta epsilon must be positive");
    return {Kind::ProbabilityDeltaBelow, 0, epsilon};
}

CheckerConfig RunConfig::checker_for(const Connectome& g0) const {
    CheckerConfig cfg = CheckerConfig::for_initial_graph(g0);
    if (checker_threshold) cfg.threshold = *checker_threshold;
    cfg.forbidden = forbidden;
    return cfg;
}

void validate(const RunConfig& cfg) {
    validate(cfg.policy);
    if (cfg.percent < 1 || cfg.percent > 100) {
        throw ContractViolation("p must be in 1..100, got " + std::to_string(cfg.percent));
    }
    if (!(cfg.importance_fraction > 0.0 && cfg.importance_fraction < 1.0)) {
        throw ContractViolation("importance fraction must be in (0, 1)");
    }
    for (const auto& e : cfg.exit) {
        if (e.kind == ExitCondition::Kind::MaxIterations && e.iterations < 1) {
            throw ContractViolation("max iterations must be at least 1");
        }
        if (e.kind == ExitCondition::Kind::ProbabilityDeltaBelow && !(e.epsilon > 0.0)) {
            throw ContractViolation("probability delta epsilon must be positive");
        }
    }
}

std::optional<std::size_t> EvolutionHistory::abort_index() const {
    if (outcome != Outcome::Aborted || records.empty()) return std::nullopt;
    return records.back().index;
}

Simulation::Simulation(Connectome g0, std::shared_ptr<const StageClassifier> classifier,
                       RunConfig config)
    : classifier_(std::move(classifier)), dc_(compute_degradation_map(g0, config.percent)) {
    validate(config);
    if (!classifier_) throw ContractViolation("simulation needs a classifier");
    if (classifier_->node_count() != g0.node_count()) {
        throw ContractViolation("classifier expects " + std::to_string(classifier_->node_count()) +
                                " nodes, graph has " + std::to_string(g0.node_count()));
    }
    checker_ = config.checker_for(g0);
    history_.config = std::move(config);
    reset();
}

void Simulation::reset() {
    Connectome g0 = dc_.origin();
    const StageProbabilities probs = classifier_->classify(g0);
    IterationRecord r0{0, std::move(g0), probs, {}, {}, 0};
    history_.records.clear();
    history_.outcome = Outcome::Completed;
    history_.message.clear();
    if (const auto& label = history_.config.initial_label; label && probs.argmax() != *label) {
        r0.verdict.tag = VerdictTag::Fail;
        r0.verdict.violated_rule = Transition{*label, probs.argmax()};
        history_.outcome = Outcome::Aborted;
        history_.message = "initial classification " + std::string(to_string(probs.argmax())) +
                           " differs from label " + std::string(to_string(*label));
    }
    history_.records.push_back(std::move(r0));
    importance_.reset();
}

bool Simulation::accepts_steps() const noexcept { return history_.records.back().verdict.ok(); }

bool exit_reached(const EvolutionHistory& h, const std::vector<ExitCondition>& exit) {
    const auto& recs = h.records;
    if (recs.empty()) return false;
    const std::size_t i = recs.size() - 1;
    for (const auto& e : exit) {
        switch (e.kind) {
            case ExitCondition::Kind::MaxIterations:
                if (i >= e.iterations) return true;
                break;
            case ExitCondition::Kind::TransitionDetected:
                if (i >= 1 && recs[i].probabilities.argmax() != recs[i - 1].probabilities.argmax()) {
                    return true;
                }
                break;
            case ExitCondition::Kind::ProbabilityDeltaBelow:
                if (i >= 1) {
                    double delta = 0.0;
                    for (Stage s : kStages) {
                        delta = std::max(delta, std::abs(recs[i].probabilities[s] -
                                                         recs[i - 1].probabilities[s]));
                    }
                    if (delta < e.epsilon) return true;
                }
                break;
        }
    }
    return false;
}

bool Simulation::exit_reached() const { return connsim::exit_reached(history_, history_.config.exit); }

const ImportanceMap& Simulation::importance() {
    if (!importance_) importance_ = classifier_->edge_importance(current());
    return *importance_;
}

EdgeSelection Simulation::select(const PolicySpec& policy, UpdateMode* mode) {
    validate(policy);
    const Connectome& g = current();
    const std::size_t step = history_.records.size() - 1;
    const RunConfig& cfg = history_.config;
    if (mode) *mode = update_mode_of(policy);

    if (is_structural(policy.kind)) {
        StructuralCriterion criterion;
        criterion.kind = criterion_of(policy.kind);
        criterion.k = policy.k;
        const ImportanceMap* imp = nullptr;
        if (is_restricting(policy.importance)) {
            imp = &importance();
            const auto part = partition_by_importance(*imp, g, cfg.importance_fraction, cfg.ranking);
            criterion.filter.mode = policy.importance == ImportanceMode::OnlyImportant
                                        ? FilterMode::OnlyImportant
                                        : FilterMode::OnlyUnimportant;
            criterion.filter.threshold = part.threshold;
            criterion.filter.ranking = cfg.ranking;
        }
        return solve(g, criterion, imp).selection;
    }
    if (is_metric(policy.kind)) {
        MetricTarget target;
        target.metric = policy.kind == PolicyKind::Density ? kDensity : kAssortativity;
        target.direction = policy.direction;
        target.relative_change = policy.relative_change;
        target.bias = policy.importance == ImportanceMode::PreferImportant ? ImportanceBias::PreferImportant
                      : policy.importance == ImportanceMode::PreferUnimportant
                          ? ImportanceBias::PreferUnimportant
                          : ImportanceBias::None;
        const ImportanceMap* imp = target.bias == ImportanceBias::None ? nullptr : &importance();
        return optimize(g, target, imp, mix_seed(cfg.seed, step + 1)).removed;
    }
    if (policy.kind == PolicyKind::Random) {
        const std::size_t n = policy.counts[std::min(step, policy.counts.size() - 1)];
        const EdgeSelection none;
        const EdgeSelection& excluded = step < policy.excluded.size() ? policy.excluded[step] : none;
        return random_baseline_selection(g, n, excluded, mix_seed(cfg.seed, step + 1));
    }
    throw ContractViolation("manual policy needs an explicit edge selection");
}

const IterationRecord& Simulation::step(const PolicySpec& policy) {
    if (!accepts_steps()) throw ContractViolation("run has aborted; reset before stepping");
    UpdateMode mode = UpdateMode::Degrade;
    EdgeSelection sel = select(policy, &mode);
    return commit(std::move(sel), mode);
}

const IterationRecord& Simulation::step_with(const EdgeSelection& selection, UpdateMode mode) {
    if (!accepts_steps()) throw ContractViolation("run has aborted; reset before stepping");
    require_active(current(), selection);
    return commit(selection, mode);
}

const IterationRecord& Simulation::commit(EdgeSelection selection, UpdateMode mode) {
    const IterationRecord& prev = history_.records.back();
    Connectome next = mode == UpdateMode::Degrade ? apply_degradation(prev.graph, selection, dc_)
                                                  : apply_removal(prev.graph, selection);
    const StageProbabilities probs = classifier_->classify(next);
    const ValidityVerdict verdict = check(prev.graph, next, prev.probabilities, probs, checker_);
    const std::size_t modified = selection.size();
    history_.records.push_back(
        {prev.index + 1, std::move(next), probs, std::move(selection), verdict, modified});
    importance_.reset();
    if (!verdict.ok()) {
        history_.outcome = Outcome::Aborted;
        history_.message = "checker rejected " + to_string(*verdict.violated_rule) + " after " +
                           std::to_string(verdict.removed_edge_count) + " removed edges";
    }
    return history_.records.back();
}

AdvanceResult advance(Simulation& sim, const PolicySpec& policy,
                      const std::vector<ExitCondition>& exit, std::size_t iteration_cap,
                      const ManualProvider& manual, std::stop_token stop) {
    if (!sim.accepts_steps()) return {Outcome::Aborted, sim.history().message};
    if (policy.kind == PolicyKind::Manual && !manual) {
        throw ContractViolation("manual policy needs a selection provider");
    }
    while (true) {
        if (stop.stop_requested()) return {Outcome::Cancelled, "cancelled"};
        const std::size_t done = sim.history().records.size() - 1;
        if (exit_reached(sim.history(), exit)) return {};
        if (done >= iteration_cap) return {Outcome::Completed, "iteration cap reached"};
        try {
            if (policy.kind == PolicyKind::Manual) {
                auto sel = manual(sim.current(), done + 1);
                if (!sel) return {Outcome::Cancelled, "manual selection cancelled"};
                sim.step_with(*sel, policy.update);
            } else {
                sim.step(policy);
            }
        } catch (const Error& e) {
            return {Outcome::Errored, e.what()};
        }
        if (!sim.accepts_steps()) return {Outcome::Aborted, sim.history().message};
    }
}

EvolutionHistory run(const Connectome& g0, std::shared_ptr<const StageClassifier> classifier,
                     const RunConfig& config, const ManualProvider& manual, std::stop_token stop) {
    Simulation sim(g0, std::move(classifier), config);
    const AdvanceResult r =
        advance(sim, config.policy, config.exit, config.iteration_cap, manual, std::move(stop));
    EvolutionHistory h = sim.history();
    h.outcome = r.outcome;
    h.message = r.message;
    return h;
}

RunConfig paired_baseline_config(const EvolutionHistory& structural, std::uint64_t seed) {
    if (structural.records.empty()) throw ContractViolation("history has no records");
    RunConfig cfg = structural.config;
    PolicySpec p;
    p.kind = PolicyKind::Random;
    p.update = update_mode_of(structural.config.policy);
    for (std::size_t i = 1; i < structural.records.size(); ++i) {
        p.counts.push_back(structural.records[i].modified_edge_count);
        p.excluded.push_back(structural.records[i].selection);
    }
    if (p.counts.empty()) p.counts.push_back(0);
    cfg.policy = std::move(p);
    cfg.seed = seed;
    cfg.exit.clear();
    cfg.iteration_cap = structural.records.size() - 1;
    return cfg;
}

EvolutionHistory run_paired_baseline(const EvolutionHistory& structural,
                                     std::shared_ptr<const StageClassifier> classifier,
                                     std::uint64_t seed) {
    return run(structural.records.front().graph, std::move(classifier),
               paired_baseline_config(structural, seed));
}

}  // namespace connsim
