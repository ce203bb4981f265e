#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "connsim/classifier.hpp"
#include "connsim/graph.hpp"
#include "connsim/importance.hpp"
#include "connsim/metric_optimizer.hpp"
#include "connsim/stage.hpp"
#include "connsim/substructures.hpp"
#include "connsim/validity.hpp"

namespace connsim {

/// Per-edge decrements ceil(w0 * p / 100), fixed from the initial graph.
class DegradationMap {
public:
    int percent() const noexcept { return percent_; }
    std::size_t node_count() const noexcept { return q_; }
    /// Decrement for an edge active in G0, nullopt otherwise.
    std::optional<int> at(EdgeKey k) const;
    bool contains(EdgeKey k) const { return at(k).has_value(); }
    std::size_t size() const noexcept { return size_; }
    /// Entries sorted by (x, y), `w` holding the decrement.
    std::vector<Edge> entries() const;
    const Connectome& origin() const noexcept { return origin_; }

private:
    friend DegradationMap compute_degradation_map(const Connectome& g0, int p);
    DegradationMap(Connectome g0, int p, std::vector<std::uint8_t> dc, std::size_t size);

    Connectome origin_;
    int percent_ = 0;
    std::size_t q_ = 0;
    std::vector<std::uint8_t> dc_;
    std::size_t size_ = 0;
};

/// p in 1..100.
DegradationMap compute_degradation_map(const Connectome& g0, int p);

/// Selected edges get max(w - dc, 0); everything else is copied unchanged.
Connectome apply_degradation(const Connectome& g, const EdgeSelection& sel,
                             const DegradationMap& dc);

/// n distinct active edges of `g` outside `excluded`, uniform without
/// replacement. Throws Infeasible when fewer than n are eligible.
EdgeSelection random_baseline_selection(const Connectome& g, std::size_t n,
                                        const EdgeSelection& excluded, std::uint64_t seed);

enum class PolicyKind {
    Clique,
    IndependentSet,
    MaxDegree,
    KHub,
    MinVertexCover,
    Density,
    Assortativity,
    Random,
    Manual,
};

enum class ImportanceMode { None, OnlyImportant, OnlyUnimportant, PreferImportant, PreferUnimportant };
enum class UpdateMode { Degrade, Remove };

std::string_view to_string(PolicyKind k);
std::optional<PolicyKind> parse_policy(std::string_view text);
std::string_view to_string(ImportanceMode m);
std::optional<ImportanceMode> parse_importance_mode(std::string_view text);
std::string_view to_string(UpdateMode m);
std::optional<UpdateMode> parse_update_mode(std::string_view text);

bool is_structural(PolicyKind k);
bool is_metric(PolicyKind k);

/// How E'_i is chosen each iteration. Structural kinds degrade, or remove
/// when restricted by importance (OnlyImportant/OnlyUnimportant). Metric
/// kinds remove and accept a Prefer* bias. Random and Manual use `update`.
struct PolicySpec {
    PolicyKind kind = PolicyKind::Clique;
    std::size_t k = 1;
    ImportanceMode importance = ImportanceMode::None;
    double relative_change = 0.10;
    Direction direction = Direction::Decrease;
    UpdateMode update = UpdateMode::Degrade;
    /// Random: edges drawn at iteration i+1 is counts[i]; when shorter than
    /// the run, the last entry repeats.
    std::vector<std::size_t> counts;
    /// Random: edges never drawn at iteration i+1 (the paired structural
    /// selection); missing entries exclude nothing.
    std::vector<EdgeSelection> excluded;

    friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

/// Rejects contradictory combinations (e.g. a Prefer* bias on a clique).
void validate(const PolicySpec& policy);

struct ExitCondition {
    enum class Kind { MaxIterations, TransitionDetected, ProbabilityDeltaBelow };
    Kind kind = Kind::MaxIterations;
    std::size_t iterations = 4;
    double epsilon = 1e-3;

    static ExitCondition max_iterations(std::size_t n);
    static ExitCondition transition_detected();
    static ExitCondition probability_delta_below(double epsilon);

    friend bool operator==(const ExitCondition&, const ExitCondition&) = default;
};

struct RunConfig {
    PolicySpec policy;
    int percent = 50;
    std::uint64_t seed = 0;
    /// Any-of; an empty list stops only at `iteration_cap`.
    std::vector<ExitCondition> exit{ExitCondition::max_iterations(4)};
    std::size_t iteration_cap = 1000;
    /// Severity threshold; nullopt means ceil(0.1 * |E(G0)|).
    std::optional<std::size_t> checker_threshold;
    std::vector<Transition> forbidden = default_forbidden_transitions();
    double importance_fraction = 0.4;
    ImportanceRanking ranking = ImportanceRanking::Signed;
    std::optional<Stage> initial_label;

    CheckerConfig checker_for(const Connectome& g0) const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Validates ranges; throws ContractViolation naming the field.
void validate(const RunConfig& cfg);

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

struct IterationRecord {
    std::size_t index = 0;
    Connectome graph;
    StageProbabilities probabilities;
    EdgeSelection selection;
    ValidityVerdict verdict;
    std::size_t modified_edge_count = 0;

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

/// Completed: an exit condition held, all verdicts OK. Aborted: the checker
/// (or the initial-label check) returned FAIL on the last record. Errored:
/// the policy could not produce a step; `message` says why. Cancelled: a
/// stop was requested between iterations.
enum class Outcome { Completed, Aborted, Errored, Cancelled };

std::string_view to_string(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view text);

struct EvolutionHistory {
    std::vector<IterationRecord> records;
    Outcome outcome = Outcome::Completed;
    std::string message;
    RunConfig config;

    /// Index of the FAIL record when Aborted.
    std::optional<std::size_t> abort_index() const;

    friend bool operator==(const EvolutionHistory&, const EvolutionHistory&) = default;
};

/// Supplies E'_i for Manual policies; nullopt cancels the run.
using ManualProvider =
    std::function<std::optional<EdgeSelection>(const Connectome& current, std::size_t iteration)>;

/// One framework iteration at a time over a fixed G0 and classifier.
class Simulation {
public:
    Simulation(Connectome g0, std::shared_ptr<const StageClassifier> classifier, RunConfig config);

    const EvolutionHistory& history() const noexcept { return history_; }
    const Connectome& current() const { return history_.records.back().graph; }
    const DegradationMap& degradation() const noexcept { return dc_; }
    const CheckerConfig& checker() const noexcept { return checker_; }
    const RunConfig& config() const noexcept { return history_.config; }
    /// False once a FAIL verdict has been recorded.
    bool accepts_steps() const noexcept;
    /// Whether any configured exit condition holds for the current history.
    bool exit_reached() const;

    /// Importance of the current graph for its predicted class (cached).
    const ImportanceMap& importance();

    /// Selection the policy would apply to the current graph.
    EdgeSelection select(const PolicySpec& policy, UpdateMode* mode);

    /// Runs one iteration. Throws Infeasible/ContractViolation without
    /// changing state when the policy cannot produce a step, and
    /// ContractViolation when the run has already aborted.
    const IterationRecord& step(const PolicySpec& policy);
    /// Manual step over an explicit selection.
    const IterationRecord& step_with(const EdgeSelection& selection, UpdateMode mode);

    /// Back to the state right after G0 was classified.
    void reset();

private:
    const IterationRecord& commit(EdgeSelection selection, UpdateMode mode);

    std::shared_ptr<const StageClassifier> classifier_;
    DegradationMap dc_;
    CheckerConfig checker_;
    EvolutionHistory history_;
    std::optional<ImportanceMap> importance_;
};

/// Whether any of `exit` holds for the last record of `h`. MaxIterations(n)
/// holds once the last index reaches n.
bool exit_reached(const EvolutionHistory& h, const std::vector<ExitCondition>& exit);

struct AdvanceResult {
    Outcome outcome = Outcome::Completed;
    std::string message;
};

/// Steps `sim` with `policy` until an exit condition holds, the last index
/// reaches `iteration_cap`, the checker fails (Aborted), the policy errors
/// (Errored), or `stop` fires / the manual provider declines (Cancelled).
AdvanceResult advance(Simulation& sim, const PolicySpec& policy,
                      const std::vector<ExitCondition>& exit, std::size_t iteration_cap,
                      const ManualProvider& manual = {}, std::stop_token stop = {});

/// Classifies G0 and iterates the configured policy until an exit
/// condition holds, the checker fails, the policy errors, or `stop` fires.
EvolutionHistory run(const Connectome& g0, std::shared_ptr<const StageClassifier> classifier,
                     const RunConfig& config, const ManualProvider& manual = {},
                     std::stop_token stop = {});

/// Random-baseline twin of `structural`: the same G0, p, checker and
/// iteration count, with each step drawing as many random edges as the
/// structural step modified, avoiding that step's selection.
RunConfig paired_baseline_config(const EvolutionHistory& structural, std::uint64_t seed);
EvolutionHistory run_paired_baseline(const EvolutionHistory& structural,
                                     std::shared_ptr<const StageClassifier> classifier,
                                     std::uint64_t seed);

}  // namespace connsim
