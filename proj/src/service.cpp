#include "connsim/service.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <stop_token>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "connsim/engine.hpp"
#include "connsim/errors.hpp"
#include "connsim/interop.hpp"
#include "connsim/layout.hpp"
#include "json_codec.hpp"

namespace connsim {

namespace {

struct HttpError {
    int status;
    std::string message;
};

struct StoredConnectome {
    StoredConnectome(Connectome g, std::optional<std::vector<std::array<double, 2>>> c)
        : graph(std::move(g)), layout(std::move(c)) {}
    Connectome graph;
    std::optional<std::vector<std::array<double, 2>>> layout;
    std::mutex layout_mutex;
};

struct Session {
    std::mutex mutex;
    std::string model_id;
    std::string connectome_id;
    std::unique_ptr<Simulation> sim;
    std::mutex stop_mutex;
    std::stop_source stop;
};

json error_body(const std::string& msg) { return {{"error", msg}}; }

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw HttpError{400, std::string("malformed JSON: ") + e.what()};
    }
}

json record_json(const IterationRecord& r) {
    return {{"index", r.index},
            {"probabilities", r.probabilities},
            {"predicted", to_string(r.probabilities.argmax())},
            {"selection", r.selection},
            {"modified_edge_count", r.modified_edge_count},
            {"verdict", r.verdict},
            {"active_edges", r.graph.edge_count()}};
}

std::string state_of(const Simulation& sim) { return sim.accepts_steps() ? "active" : "aborted"; }

/// Step body: {"policy": "clique", "k": 3, ...}, {"policy": {...}} or
/// {"manual_edges": [[x, y], ...], "mode": "degrade"}.
PolicySpec policy_of(const json& body) {
    if (!body.contains("policy")) throw HttpError{422, "missing 'policy' or 'manual_edges'"};
    if (body["policy"].is_object()) return decode<PolicySpec>(body["policy"], "policy");
    json spec = body;
    spec["kind"] = body["policy"];
    spec.erase("policy");
    return decode<PolicySpec>(spec, "policy");
}

}  // namespace

struct Service::Impl {
    httplib::Server server;
    std::shared_mutex registry_mutex;
    std::map<std::string, std::shared_ptr<const StageClassifier>> models;
    std::map<std::string, std::shared_ptr<StoredConnectome>> connectomes;
    std::map<std::string, std::shared_ptr<Session>> sessions;
    std::atomic<std::uint64_t> next_id{1};

    Impl();
    void routes();

    std::string fresh_id(const char* prefix) { return prefix + std::to_string(next_id++); }

    std::shared_ptr<Session> session(const std::string& id) {
        std::shared_lock lock(registry_mutex);
        auto it = sessions.find(id);
        if (it == sessions.end()) throw HttpError{404, "unknown session '" + id + "'"};
        return it->second;
    }

    std::shared_ptr<StoredConnectome> connectome(const std::string& id) {
        std::shared_lock lock(registry_mutex);
        auto it = connectomes.find(id);
        if (it == connectomes.end()) throw HttpError{404, "unknown connectome '" + id + "'"};
        return it->second;
    }

    std::shared_ptr<const StageClassifier> model(const std::string& id) {
        std::shared_lock lock(registry_mutex);
        auto it = models.find(id);
        if (it == models.end()) throw HttpError{404, "unknown model '" + id + "'"};
        return it->second;
    }

    template <typename F>
    httplib::Server::Handler wrap(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const HttpError& e) {
                reply(res, e.status, error_body(e.message));
            } catch (const Infeasible& e) {
                reply(res, 422, error_body(e.what()));
            } catch (const Error& e) {
                reply(res, 422, error_body(e.what()));
            } catch (const json::exception& e) {
                reply(res, 422, error_body(e.what()));
            } catch (const std::exception& e) {
                spdlog::error("{} {}: {}", req.method, req.path, e.what());
                reply(res, 500, error_body(e.what()));
            }
        };
    }
};

Service::Impl::Impl() {
    server.new_task_queue = [] { return new httplib::ThreadPool(8); };
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    routes();
}

void Service::Impl::routes() {
    server.Get("/models", wrap([this](const httplib::Request&, httplib::Response& res) {
        json ids = json::array();
        std::shared_lock lock(registry_mutex);
        for (const auto& [id, m] : models) ids.push_back({{"id", id}, {"node_count", m->node_count()}});
        reply(res, 200, {{"models", ids}});
    }));

    server.Post("/connectomes", wrap([this](const httplib::Request& req, httplib::Response& res) {
        std::optional<Connectome> g;
        std::optional<std::vector<std::array<double, 2>>> coords;
        const bool is_json = req.get_header_value("Content-Type").find("json") != std::string::npos;
        try {
            if (is_json) {
                const json body = parse_body(req);
                if (body.contains("matrix")) {
                    g = matrix_from_json(body["matrix"]);
                } else if (body.contains("facts")) {
                    g = parse_facts(body["facts"].get<std::string>()).graph;
                } else {
                    throw HttpError{422, "body needs 'matrix' or 'facts'"};
                }
                if (body.contains("coordinates")) {
                    std::vector<std::array<double, 2>> c;
                    for (const json& p : body["coordinates"]) c.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                    if (c.size() != g->node_count()) {
                        throw HttpError{422, "coordinates must list one point per node"};
                    }
                    coords = std::move(c);
                }
            } else if (req.body.find("node(") != std::string::npos) {
                g = parse_facts(req.body).graph;
            } else {
                std::istringstream in(req.body);
                g = load_matrix(in);
            }
        } catch (const json::exception& e) {
            throw HttpError{422, e.what()};
        }
        auto stored = std::make_shared<StoredConnectome>(*g, coords);
        const std::string id = fresh_id("c");
        {
            std::unique_lock lock(registry_mutex);
            connectomes.emplace(id, stored);
        }
        reply(res, 201, {{"id", id}, {"node_count", g->node_count()}, {"active_edges", g->edge_count()}});
    }));

    server.Get(R"(/connectomes/([^/]+)/layout)",
               wrap([this](const httplib::Request& req, httplib::Response& res) {
                   auto c = connectome(req.matches[1]);
                   std::lock_guard lock(c->layout_mutex);
                   if (!c->layout) c->layout = force_layout(c->graph, 0);
                   reply(res, 200, {{"coordinates", *c->layout}});
               }));

    server.Post("/sessions", wrap([this](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        if (!body.contains("connectome") || !body.contains("model")) {
            throw HttpError{422, "session needs 'connectome' and 'model' ids"};
        }
        auto c = connectome(body["connectome"].get<std::string>());
        auto m = model(body["model"].get<std::string>());
        RunConfig cfg;
        if (body.contains("p")) cfg.percent = body["p"].get<int>();
        if (body.contains("seed")) cfg.seed = body["seed"].get<std::uint64_t>();
        if (body.contains("checker_threshold") && !body["checker_threshold"].is_null()) {
            cfg.checker_threshold = body["checker_threshold"].get<std::size_t>();
        }
        if (body.contains("importance_fraction")) {
            cfg.importance_fraction = body["importance_fraction"].get<double>();
        }
        if (body.contains("initial_label") && !body["initial_label"].is_null()) {
            const auto st = parse_stage(body["initial_label"].get<std::string>());
            if (!st) throw HttpError{422, "unknown stage in 'initial_label'"};
            cfg.initial_label = st;
        }
        cfg.exit.clear();
        auto s = std::make_shared<Session>();
        s->model_id = body["model"].get<std::string>();
        s->connectome_id = body["connectome"].get<std::string>();
        s->sim = std::make_unique<Simulation>(c->graph, m, cfg);
        const std::string id = fresh_id("s");
        json out = {{"id", id},
                    {"state", state_of(*s->sim)},
                    {"record", record_json(s->sim->history().records.front())}};
        {
            std::unique_lock lock(registry_mutex);
            sessions.emplace(id, std::move(s));
        }
        reply(res, 201, out);
    }));

    server.Get(R"(/sessions/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
        auto s = session(req.matches[1]);
        std::lock_guard lock(s->mutex);
        const auto& last = s->sim->history().records.back();
        reply(res, 200,
              {{"id", req.matches[1]},
               {"node_count", last.graph.node_count()},
               {"active_edges", last.graph.edge_count()},
               {"iteration", last.index},
               {"probabilities", last.probabilities},
               {"predicted", to_string(last.probabilities.argmax())},
               {"state", state_of(*s->sim)},
               {"model", s->model_id},
               {"connectome", s->connectome_id}});
    }));

    server.Get(R"(/sessions/([^/]+)/graph)", wrap([this](const httplib::Request& req, httplib::Response& res) {
        auto s = session(req.matches[1]);
        double percentile = 0.0;
        if (req.has_param("min_importance_percentile")) {
            try {
                percentile = std::stod(req.get_param_value("min_importance_percentile"));
            } catch (const std::exception&) {
                throw HttpError{422, "min_importance_percentile must be a number"};
            }
            if (!(percentile >= 0.0 && percentile <= 100.0)) {
                throw HttpError{422, "min_importance_percentile must be in [0, 100]"};
            }
        }
        std::lock_guard lock(s->mutex);
        const Connectome& g = s->sim->current();
        const ImportanceMap& imp = s->sim->importance();
        const auto ranked = rank_by_importance(imp, g, s->sim->config().ranking);
        const std::size_t keep = ceil_count((1.0 - percentile / 100.0) * static_cast<double>(ranked.size()));
        json edges = json::array();
        for (std::size_t i = 0; i < keep; ++i) {
            const Edge& e = ranked[i];
            edges.push_back({{"x", e.x}, {"y", e.y}, {"weight", e.w}, {"importance", imp.at(e.x, e.y)}});
        }
        reply(res, 200,
              {{"node_count", g.node_count()},
               {"total_edges", ranked.size()},
               {"target_class", to_string(imp.target_class())},
               {"edges", edges}});
    }));

    server.Post(R"(/sessions/([^/]+)/step)", wrap([this](const httplib::Request& req, httplib::Response& res) {
        auto s = session(req.matches[1]);
        const json body = parse_body(req);
        std::lock_guard lock(s->mutex);
        if (!s->sim->accepts_steps()) throw HttpError{409, "session has aborted; reset it first"};
        const IterationRecord* rec = nullptr;
        if (body.contains("manual_edges")) {
            const auto sel = decode<EdgeSelection>(body["manual_edges"], "manual_edges");
            UpdateMode mode = UpdateMode::Degrade;
            if (body.contains("mode")) {
                const auto m = parse_update_mode(body["mode"].get<std::string>());
                if (!m) throw HttpError{422, "mode must be 'degrade' or 'remove'"};
                mode = *m;
            }
            rec = &s->sim->step_with(sel, mode);
        } else {
            rec = &s->sim->step(policy_of(body));
        }
        reply(res, 200, {{"record", record_json(*rec)}, {"state", state_of(*s->sim)}});
    }));

    server.Post(R"(/sessions/([^/]+)/run)", wrap([this](const httplib::Request& req, httplib::Response& res) {
        auto s = session(req.matches[1]);
        const json body = parse_body(req);
        const PolicySpec policy = policy_of(body);
        if (policy.kind == PolicyKind::Manual) throw HttpError{422, "run does not accept a manual policy"};
        std::lock_guard lock(s->mutex);
        if (!s->sim->accepts_steps()) throw HttpError{409, "session has aborted; reset it first"};
        const std::size_t base = s->sim->history().records.back().index;
        std::vector<ExitCondition> exit;
        if (body.contains("exit")) exit = decode<std::vector<ExitCondition>>(body["exit"], "exit");
        const std::size_t more = body.value("iterations", std::size_t{4});
        if (more == 0) throw HttpError{422, "iterations must be at least 1"};
        for (auto& e : exit) {
            if (e.kind == ExitCondition::Kind::MaxIterations) e.iterations += base;
        }
        std::stop_token token;
        {
            std::lock_guard stop_lock(s->stop_mutex);
            s->stop = std::stop_source{};
            token = s->stop.get_token();
        }
        const AdvanceResult r = advance(*s->sim, policy, exit, base + more, {}, token);
        EvolutionHistory h = s->sim->history();
        h.outcome = r.outcome;
        h.message = r.message;
        json out = json::parse(export_history(h));
        out["state"] = state_of(*s->sim);
        reply(res, 200, out);
    }));

    server.Post(R"(/sessions/([^/]+)/cancel)", wrap([this](const httplib::Request& req, httplib::Response& res) {
        auto s = session(req.matches[1]);
        std::lock_guard stop_lock(s->stop_mutex);
        s->stop.request_stop();
        reply(res, 202, {{"cancelled", true}});
    }));

    server.Get(R"(/sessions/([^/]+)/history)", wrap([this](const httplib::Request& req, httplib::Response& res) {
        auto s = session(req.matches[1]);
        std::lock_guard lock(s->mutex);
        res.status = 200;
        res.set_content(export_history(s->sim->history()), "application/json");
    }));

    server.Post(R"(/sessions/([^/]+)/reset)", wrap([this](const httplib::Request& req, httplib::Response& res) {
        auto s = session(req.matches[1]);
        std::lock_guard lock(s->mutex);
        s->sim->reset();
        reply(res, 200, {{"record", record_json(s->sim->history().records.front())},
                         {"state", state_of(*s->sim)}});
    }));
}

Service::Service() : impl_(std::make_unique<Impl>()) {}
Service::~Service() { stop(); }

void Service::add_model(const std::string& id, std::shared_ptr<const StageClassifier> model) {
    if (!model) throw ContractViolation("model '" + id + "' is null");
    std::unique_lock lock(impl_->registry_mutex);
    impl_->models[id] = std::move(model);
}

void Service::mount_static(const std::string& dir) {
    if (!impl_->server.set_mount_point("/", dir)) {
        throw ValidationError("static directory '" + dir + "' does not exist");
    }
}

int Service::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw Error("cannot bind " + host);
        return p;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw Error("cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void Service::serve() { impl_->server.listen_after_bind(); }

void Service::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace connsim
