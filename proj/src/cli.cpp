#include "connsim/cli.hpp"

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "connsim/engine.hpp"
#include "connsim/errors.hpp"
#include "connsim/interop.hpp"
#include "connsim/metrics.hpp"
#include "connsim/rng.hpp"
#include "connsim/service.hpp"
#include "connsim/synthetic.hpp"

namespace connsim {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw Error("failed writing '" + path + "'");
}

std::shared_ptr<const StageClassifier> load_classifier(const std::string& path) {
    return std::make_shared<BrainNetClassifier>(load_model(path));
}

std::string fmt_real(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

void print_probabilities(std::ostream& out, const StageProbabilities& p) {
    for (Stage s : kStages) out << to_string(s) << ' ' << fmt_real(p[s]) << '\n';
    out << "predicted " << to_string(p.argmax()) << '\n';
}

const std::map<std::string, PolicyKind> kCriteria{
    {"clique", PolicyKind::Clique},
    {"independent-set", PolicyKind::IndependentSet},
    {"max-degree", PolicyKind::MaxDegree},
    {"k-hub", PolicyKind::KHub},
    {"mvc", PolicyKind::MinVertexCover},
};

struct Options {
    std::string input, model, out, importance_out, policy = "clique", importance = "none";
    std::string criterion, stage, data, match, static_dir, host = "127.0.0.1", rules, label;
    std::vector<std::string> models;
    std::size_t k = 1, iterations = 4, count = 1, epochs = 100, patience = 10;
    std::optional<std::size_t> random_count, checker_threshold;
    int p = 50, port = 8080;
    double relative_change = 0.10, fraction = 0.4;
    std::optional<std::uint64_t> seed;
    bool increase = false;
};

int cmd_classify(const Options& o, std::ostream& out) {
    const Connectome g = load_matrix(o.input);
    const auto model = load_classifier(o.model);
    print_probabilities(out, model->classify(g));
    if (!o.importance_out.empty()) {
        const ImportanceMap imp = model->edge_importance(g);
        std::ostringstream ss;
        ss << std::setprecision(17);
        const std::size_t q = imp.node_count();
        for (std::size_t i = 0; i < q; ++i) {
            for (std::size_t j = 0; j < q; ++j) ss << (j ? " " : "") << imp.values()[i * q + j];
            ss << '\n';
        }
        write_file(o.importance_out, ss.str());
    }
    return 0;
}

int cmd_metrics(const Options& o, std::ostream& out) {
    const Connectome g = load_matrix(o.input);
    out << "nodes " << g.node_count() << '\n' << "edges " << g.edge_count() << '\n';
    auto show = [&](const char* name, double (*metric)(const Connectome&)) {
        std::string value;
        try {
            value = fmt_real(metric(g));
        } catch (const UndefinedMetric&) {
            value = "undefined";
        }
        out << name << ' ' << value << '\n';
    };
    show("density", static_cast<double (*)(const Connectome&)>(&density));
    show("assortativity", static_cast<double (*)(const Connectome&)>(&assortativity));
    return 0;
}

int cmd_solve(const Options& o, std::ostream& out) {
    const auto it = kCriteria.find(o.criterion);
    if (it == kCriteria.end()) throw UsageError("--criterion: unknown criterion '" + o.criterion + "'");
    const Connectome g = load_matrix(o.input);
    StructuralCriterion c;
    switch (it->second) {
        case PolicyKind::Clique: c.kind = CriterionKind::MaxClique; break;
        case PolicyKind::IndependentSet: c.kind = CriterionKind::IndependentSet; break;
        case PolicyKind::MaxDegree: c.kind = CriterionKind::MaxDegreeNode; break;
        case PolicyKind::KHub: c.kind = CriterionKind::KHub; break;
        default: c.kind = CriterionKind::MinVertexCover; break;
    }
    c.k = o.k;
    const StructureSolution sol = solve(g, c);
    out << "nodes:";
    for (NodeId v : sol.nodes) out << ' ' << v;
    out << "\nselection:";
    for (const EdgeKey& e : sol.selection) out << " (" << e.x << ',' << e.y << ')';
    out << '\n';
    return 0;
}

int cmd_export_facts(const Options& o, std::ostream& out) {
    const Connectome g = load_matrix(o.input);
    FactExtras extras;
    if (!o.model.empty()) {
        const auto model = load_classifier(o.model);
        extras.result = result_facts(model->classify(g));
        extras.importance = importance_facts(model->edge_importance(g), g);
    }
    if (o.p != 0) extras.degradation = degradation_facts(compute_degradation_map(g, o.p));
    if (o.checker_threshold) extras.threshold = *o.checker_threshold;
    write_file(o.out, emit_facts(g, extras));
    out << "wrote " << o.out << '\n';
    return 0;
}

int cmd_synth(const Options& o, std::ostream& out) {
    const auto stage = parse_stage(o.stage);
    if (!stage) throw UsageError("--stage: unknown stage '" + o.stage + "'");
    if (o.count == 1) {
        const auto lc = generate_synthetic(SyntheticSpec::defaults(*stage, *o.seed));
        save_matrix(lc.graph, o.out);
        out << "wrote " << o.out << " (" << lc.graph.edge_count() << " edges)\n";
        return 0;
    }
    fs::create_directories(o.out);
    std::string name(to_string(*stage));
    std::transform(name.begin(), name.end(), name.begin(), ::tolower);
    std::vector<std::string> errors(o.count);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t is = 0; is < static_cast<std::ptrdiff_t>(o.count); ++is) {
        const auto i = static_cast<std::size_t>(is);
        try {
            const auto lc = generate_synthetic(SyntheticSpec::defaults(*stage, mix_seed(*o.seed, i)));
            std::ostringstream file;
            file << name << '_' << std::setw(4) << std::setfill('0') << i << ".txt";
            save_matrix(lc.graph, (fs::path(o.out) / file.str()).string());
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) throw Error(e);
    }
    out << "wrote " << o.count << " graphs to " << o.out << '\n';
    return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
    if (!fs::is_directory(o.data)) throw ValidationError("--data: '" + o.data + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(o.data)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<LabeledConnectome> data;
    for (const auto& f : files) {
        const std::string name = f.filename().string();
        const auto cut = name.find('_');
        const auto stage = cut == std::string::npos ? std::nullopt : parse_stage(name.substr(0, cut));
        if (!stage) {
            spdlog::warn("skipping {}: file name does not start with a stage label", name);
            continue;
        }
        data.push_back({load_matrix(f.string()), *stage});
    }
    if (data.empty()) throw ValidationError("--data: no labelled matrices in '" + o.data + "'");
    TrainingConfig cfg;
    cfg.seed = *o.seed;
    cfg.max_epochs = o.epochs;
    cfg.patience = o.patience;
    cfg.on_epoch = [](const EpochStats& s) {
        spdlog::info("epoch {} train {:.4f} val {:.4f} acc {:.3f}", s.epoch, s.train_loss,
                     s.validation_loss, s.validation_accuracy);
    };
    const TrainingResult r = train(data, cfg);
    save_model(r.parameters, o.out);
    out << "trained on " << data.size() << " graphs, best epoch " << r.best_epoch << ", wrote "
        << o.out << '\n';
    return 0;
}

int cmd_evolve(const Options& o, std::ostream& out) {
    const auto kind = parse_policy(o.policy);
    if (!kind || *kind == PolicyKind::Manual) throw UsageError("--policy: unknown policy '" + o.policy + "'");
    const auto mode = parse_importance_mode(o.importance);
    if (!mode) throw UsageError("--importance: unknown mode '" + o.importance + "'");
    const bool stochastic = *kind == PolicyKind::Random || is_metric(*kind);
    if (stochastic && !o.seed) throw UsageError("--seed is required for policy '" + o.policy + "'");

    const Connectome g0 = load_matrix(o.input);
    const auto model = load_classifier(o.model);
    RunConfig cfg;
    if (*kind == PolicyKind::Random && !o.match.empty()) {
        const EvolutionHistory twin = import_history(read_file(o.match));
        if (twin.records.empty() || !(twin.records.front().graph == g0)) {
            throw ValidationError("--match: history starts from a different graph than --input");
        }
        cfg = paired_baseline_config(twin, *o.seed);
    } else {
        cfg.policy.kind = *kind;
        cfg.policy.k = o.k;
        cfg.policy.importance = *mode;
        cfg.policy.relative_change = o.relative_change;
        cfg.policy.direction = o.increase ? Direction::Increase : Direction::Decrease;
        if (*kind == PolicyKind::Random) cfg.policy.counts = {*o.random_count};
        cfg.percent = o.p;
        cfg.seed = o.seed.value_or(0);
        cfg.exit = {ExitCondition::max_iterations(o.iterations)};
        cfg.importance_fraction = o.fraction;
        cfg.checker_threshold = o.checker_threshold;
        if (!o.label.empty()) {
            cfg.initial_label = parse_stage(o.label);
            if (!cfg.initial_label) throw UsageError("--label: unknown stage '" + o.label + "'");
        }
    }
    if (!o.rules.empty()) {
        constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
        const CheckerConfig rules =
            load_rules(o.rules, {cfg.checker_threshold.value_or(kUnset), cfg.forbidden});
        cfg.forbidden = rules.forbidden;
        if (rules.threshold != kUnset) cfg.checker_threshold = rules.threshold;
    }
    try {
        validate(cfg);
    } catch (const ContractViolation& e) {
        throw UsageError(e.what());
    }
    const EvolutionHistory h = run(g0, model, cfg);
    write_file(o.out, export_history(h));
    out << "outcome " << to_string(h.outcome) << '\n' << "records " << h.records.size() << '\n';
    for (const auto& r : h.records) {
        out << r.index << ' ' << to_string(r.probabilities.argmax()) << " modified "
            << r.modified_edge_count << ' ' << (r.verdict.ok() ? "OK" : "FAIL") << '\n';
    }
    if (!h.message.empty()) out << "message " << h.message << '\n';
    return h.outcome == Outcome::Errored ? 1 : 0;
}

Service* g_service = nullptr;

int cmd_serve(const Options& o, std::ostream& out) {
    Service service;
    for (const std::string& spec : o.models) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--model: expected name=path, got '" + spec + "'");
        service.add_model(spec.substr(0, eq), load_classifier(spec.substr(eq + 1)));
    }
    if (!o.static_dir.empty()) service.mount_static(o.static_dir);
    const int port = service.bind(o.host, o.port);
    out << "listening on " << o.host << ':' << port << std::endl;
    g_service = &service;
    std::signal(SIGINT, [](int) { if (g_service) g_service->stop(); });
    std::signal(SIGTERM, [](int) { if (g_service) g_service->stop(); });
    service.serve();
    g_service = nullptr;
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    if (!spdlog::get("connsim")) {
        auto logger = spdlog::stderr_logger_mt("connsim");
        spdlog::set_default_logger(logger);
        spdlog::set_level(spdlog::level::warn);
        spdlog::cfg::load_env_levels();
    }

    CLI::App app{"Connectome evolution simulator"};
    app.require_subcommand(1);
    Options o;

    auto* classify = app.add_subcommand("classify", "Stage probabilities of a connectome");
    classify->add_option("--input", o.input, "Adjacency matrix file")->required()->check(CLI::ExistingFile);
    classify->add_option("--model", o.model, "Model checkpoint")->required()->check(CLI::ExistingFile);
    classify->add_option("--importance-out", o.importance_out, "Write the edge importance matrix");

    auto* evolve = app.add_subcommand("evolve", "Run the evolution loop");
    evolve->add_option("--input", o.input)->required()->check(CLI::ExistingFile);
    evolve->add_option("--model", o.model)->required()->check(CLI::ExistingFile);
    evolve->add_option("--policy", o.policy)
        ->check(CLI::IsMember({"clique", "independent-set", "max-degree", "k-hub", "mvc", "density",
                               "assortativity", "random"}));
    auto* k_opt = evolve->add_option("--k", o.k, "Hub count for k-hub")->check(CLI::PositiveNumber);
    evolve->add_option("--p", o.p, "Degradation percentage")->check(CLI::Range(1, 100));
    auto* rc_opt = evolve->add_option("--relative-change", o.relative_change)->check(CLI::Range(0.0, 1.0));
    auto* inc_opt = evolve->add_flag("--increase", o.increase, "Raise the metric instead of lowering it");
    evolve->add_option("--iterations", o.iterations)->check(CLI::PositiveNumber);
    evolve->add_option("--seed", o.seed);
    evolve->add_option("--importance", o.importance)
        ->check(CLI::IsMember({"none", "only-important", "only-unimportant", "prefer-important",
                               "prefer-unimportant"}));
    auto* frac_opt = evolve->add_option("--fraction", o.fraction, "Share of edges counted as important");
    evolve->add_option("--checker-threshold", o.checker_threshold);
    evolve->add_option("--rules", o.rules, "Checker rule file (JSON)")->check(CLI::ExistingFile);
    evolve->add_option("--label", o.label, "Known initial stage");
    auto* match_opt = evolve->add_option("--match", o.match, "Structural history to pair with")
                          ->check(CLI::ExistingFile);
    auto* count_opt = evolve->add_option("--count", o.random_count, "Random edges per iteration");
    evolve->add_option("--out", o.out, "History output")->required();
    match_opt->excludes(count_opt);

    auto* solve_cmd = app.add_subcommand("solve", "Solve a structural criterion");
    solve_cmd->add_option("--input", o.input)->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--criterion", o.criterion)->required();
    auto* solve_k = solve_cmd->add_option("--k", o.k)->check(CLI::PositiveNumber);

    auto* metrics_cmd = app.add_subcommand("metrics", "Density and assortativity");
    metrics_cmd->add_option("--input", o.input)->required()->check(CLI::ExistingFile);

    auto* facts = app.add_subcommand("export-facts", "Write ASP facts");
    facts->add_option("--input", o.input)->required()->check(CLI::ExistingFile);
    facts->add_option("--model", o.model)->check(CLI::ExistingFile);
    auto* facts_p = facts->add_option("--p", o.p, "Also emit dc/3 for this percentage")->check(CLI::Range(1, 100));
    facts->add_option("--checker-threshold", o.checker_threshold, "Also emit th/1");
    facts->add_option("--out", o.out)->required();

    auto* synth = app.add_subcommand("synth", "Generate synthetic connectomes");
    synth->add_option("--stage", o.stage)->required();
    synth->add_option("--seed", o.seed)->required();
    synth->add_option("--out", o.out, "Matrix file, or directory with --count")->required();
    synth->add_option("--count", o.count)->check(CLI::PositiveNumber);

    auto* train_cmd = app.add_subcommand("train", "Train a classifier");
    train_cmd->add_option("--data", o.data, "Directory of <stage>_*.txt matrices")->required();
    train_cmd->add_option("--seed", o.seed)->required();
    train_cmd->add_option("--out", o.out)->required();
    train_cmd->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
    train_cmd->add_option("--patience", o.patience)->check(CLI::PositiveNumber);

    auto* serve = app.add_subcommand("serve", "Start the HTTP service");
    serve->add_option("--port", o.port)->check(CLI::Range(0, 65535));
    serve->add_option("--host", o.host);
    serve->add_option("--static", o.static_dir)->check(CLI::ExistingDirectory);
    serve->add_option("--model", o.models, "name=checkpoint, repeatable");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help(e.get_name() == "--help" ? "" : e.get_name());
        for (auto* sub : app.get_subcommands()) out << sub->help();
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << e.what() << '\n';
            return 0;
        }
        err << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (evolve->parsed()) {
            const bool random = o.policy == "random";
            const bool metric = o.policy == "density" || o.policy == "assortativity";
            if (k_opt->count() && o.policy != "k-hub") throw UsageError("--k applies only to --policy k-hub");
            if ((rc_opt->count() || inc_opt->count()) && !metric) {
                throw UsageError("--relative-change/--increase apply only to metric policies");
            }
            if ((match_opt->count() || count_opt->count()) && !random) {
                throw UsageError("--match/--count apply only to --policy random");
            }
            if (random && !match_opt->count() && !count_opt->count()) {
                throw UsageError("--policy random needs --match <history> or --count N");
            }
            if (frac_opt->count() && o.importance.rfind("only-", 0) != 0) {
                throw UsageError("--fraction applies only to --importance only-important/only-unimportant");
            }
            if (!(o.fraction > 0.0 && o.fraction < 1.0)) throw UsageError("--fraction must be in (0, 1)");
            if (o.importance.rfind("prefer-", 0) == 0 && !metric) {
                throw UsageError("--importance " + o.importance + " applies only to metric policies");
            }
            if (o.importance.rfind("only-", 0) == 0 && (metric || random)) {
                throw UsageError("--importance " + o.importance + " applies only to structural policies");
            }
            return cmd_evolve(o, out);
        }
        if (classify->parsed()) return cmd_classify(o, out);
        if (solve_cmd->parsed()) {
            if (solve_k->count() && o.criterion != "k-hub") throw UsageError("--k applies only to --criterion k-hub");
            return cmd_solve(o, out);
        }
        if (metrics_cmd->parsed()) return cmd_metrics(o, out);
        if (facts->parsed()) {
            if (!facts_p->count()) o.p = 0;
            return cmd_export_facts(o, out);
        }
        if (synth->parsed()) return cmd_synth(o, out);
        if (train_cmd->parsed()) return cmd_train(o, out);
        if (serve->parsed()) return cmd_serve(o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace connsim
