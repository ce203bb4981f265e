#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "connsim/interop.hpp"
#include "connsim/service.hpp"
#include "test_support.hpp"

using namespace connsim;
using nlohmann::json;

namespace {

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override {
        // q = 6 model; 10-edge graph with distinct importances.
        service_.add_model("tiny", std::make_shared<BrainNetClassifier>(
                                       ModelParameters::initialize(fixtures::tiny_shape(6), 3)));
        base_ = fixtures::unweighted(6, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 4}, {2, 5}, {3, 4},
                                         {3, 5}, {4, 5}, {2, 4}},
                                     60);
        flip_ = std::make_shared<fixtures::FunctionClassifier>(6, [g = base_](const Connectome& c) {
            return fixtures::favouring(c == g ? Stage::RR : Stage::CIS);
        });
        service_.add_model("flip", flip_);
        slow_ = std::make_shared<fixtures::FunctionClassifier>(6, [](const Connectome&) {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            return fixtures::favouring(Stage::PP);
        });
        service_.add_model("slow", slow_);
        port_ = service_.bind("127.0.0.1", 0);
        thread_ = std::thread([this] { service_.serve(); });
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
        client_->set_read_timeout(30, 0);
        for (int i = 0; i < 100 && !client_->Get("/models"); ++i) {
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
    }

    void TearDown() override {
        service_.stop();
        thread_.join();
    }

    std::pair<int, json> post(const std::string& path, const json& body) {
        auto r = client_->Post(path, body.dump(), "application/json");
        if (!r) return {0, {}};
        return {r->status, r->body.empty() ? json{} : json::parse(r->body)};
    }

    std::pair<int, json> get(const std::string& path) {
        auto r = client_->Get(path);
        if (!r) return {0, {}};
        return {r->status, json::parse(r->body)};
    }

    std::string upload(const Connectome& g) {
        std::ostringstream m;
        save_matrix(g, m);
        auto r = client_->Post("/connectomes", m.str(), "text/plain");
        EXPECT_EQ(r->status, 201) << r->body;
        return json::parse(r->body)["id"];
    }

    std::string session(const std::string& model, json extra = json::object()) {
        extra["connectome"] = upload(base_);
        extra["model"] = model;
        auto [status, body] = post("/sessions", extra);
        EXPECT_EQ(status, 201) << body.dump();
        return body["id"];
    }

    Service service_;
    Connectome base_ = Connectome::empty(6);
    std::shared_ptr<fixtures::FunctionClassifier> flip_, slow_;
    int port_ = 0;
    std::thread thread_;
    std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST_F(ServiceTest, ModelsAndConnectomes) {
    auto [s, body] = get("/models");
    EXPECT_EQ(s, 200);
    EXPECT_EQ(body["models"].size(), 3u);

    auto [cs, cbody] = post("/connectomes", {{"matrix", {{0, 5}, {5, 0}}}});
    EXPECT_EQ(cs, 201);
    EXPECT_EQ(cbody["active_edges"], 1);
    auto [fs, fbody] = post("/connectomes", {{"facts", "node(0).\nnode(1).\nnode(2).\nedge(0,2,9).\n"}});
    EXPECT_EQ(fs, 201);
    EXPECT_EQ(fbody["node_count"], 3);
    EXPECT_EQ(post("/connectomes", {{"matrix", {{0, 5}, {4, 0}}}}).first, 422);
    EXPECT_EQ(post("/connectomes", {{"facts", "edge(0,1,500)."}}).first, 422);
    auto bad = client_->Post("/connectomes", "{not json", "application/json");
    EXPECT_EQ(bad->status, 400);

    auto [ls, layout] = get("/connectomes/" + cbody["id"].get<std::string>() + "/layout");
    EXPECT_EQ(ls, 200);
    EXPECT_EQ(layout["coordinates"].size(), 2u);
    EXPECT_EQ(get("/connectomes/zzz/layout").first, 404);
}

TEST_F(ServiceTest, SessionLifecycle) {
    const auto id = session("tiny", {{"p", 50}, {"seed", 4}, {"checker_threshold", 100}});
    auto [s, summary] = get("/sessions/" + id);
    EXPECT_EQ(s, 200);
    EXPECT_EQ(summary["active_edges"], 10);
    EXPECT_EQ(summary["iteration"], 0);
    EXPECT_EQ(summary["state"], "active");

    auto [st, step] = post("/sessions/" + id + "/step", {{"policy", "max-degree"}});
    EXPECT_EQ(st, 200) << step.dump();
    EXPECT_EQ(step["record"]["index"], 1);
    EXPECT_EQ(step["record"]["verdict"]["tag"], "OK");

    auto [ms, manual] = post("/sessions/" + id + "/step", {{"manual_edges", json::array()}});
    EXPECT_EQ(ms, 200);
    EXPECT_EQ(manual["record"]["index"], 2);
    EXPECT_EQ(manual["record"]["modified_edge_count"], 0);

    auto [rs, ran] = post("/sessions/" + id + "/run", {{"policy", "k-hub"}, {"k", 2}, {"iterations", 3}});
    EXPECT_EQ(rs, 200) << ran.dump();
    EXPECT_EQ(ran["iterations"].size(), 6u);
    EXPECT_EQ(ran["outcome"], "completed");

    auto [hs, hist] = get("/sessions/" + id + "/history");
    EXPECT_EQ(hs, 200);
    EXPECT_EQ(hist["iterations"].size(), 6u);
    EXPECT_EQ(hist["schema_version"], kHistorySchemaVersion);

    auto [zs, reset] = post("/sessions/" + id + "/reset", json::object());
    EXPECT_EQ(zs, 200);
    EXPECT_EQ(get("/sessions/" + id + "/history").second["iterations"].size(), 1u);
    EXPECT_EQ(get("/sessions/" + id).second["active_edges"], 10);
}

TEST_F(ServiceTest, ManualStepsAndErrors) {
    const auto id = session("tiny", {{"checker_threshold", 100}});
    auto [s, rec] = post("/sessions/" + id + "/step", {{"manual_edges", {{1, 0}}}, {"mode", "remove"}});
    EXPECT_EQ(s, 200);
    EXPECT_EQ(rec["record"]["selection"], json::array({{0, 1}}));
    EXPECT_EQ(get("/sessions/" + id).second["active_edges"], 9);
    EXPECT_EQ(post("/sessions/" + id + "/step", {{"manual_edges", {{0, 1}}}}).first, 422);
    EXPECT_EQ(post("/sessions/" + id + "/step", {{"manual_edges", {{0, 2}}}, {"mode", "melt"}}).first, 422);
    EXPECT_EQ(post("/sessions/" + id + "/step", {{"policy", "nonsense"}}).first, 422);
    EXPECT_EQ(post("/sessions/" + id + "/step", json::object()).first, 422);
    EXPECT_EQ(post("/sessions/" + id + "/step", {{"policy", "density"}, {"direction", "increase"}}).first, 422);
    EXPECT_EQ(post("/sessions/nope/step", {{"policy", "clique"}}).first, 404);
    EXPECT_EQ(get("/sessions/nope").first, 404);
    EXPECT_EQ(post("/sessions", {{"connectome", "c999"}, {"model", "tiny"}}).first, 404);
    EXPECT_EQ(post("/sessions", {{"connectome", upload(base_)}, {"model", "tiny"}, {"p", 0}}).first, 422);
    EXPECT_EQ(post("/sessions", {{"connectome", upload(Connectome::empty(5))}, {"model", "tiny"}}).first, 422);
}

TEST_F(ServiceTest, PercentileFilterKeepsTopImportance) {
    const auto id = session("tiny");
    auto [s, all] = get("/sessions/" + id + "/graph");
    EXPECT_EQ(s, 200);
    ASSERT_EQ(all["edges"].size(), 10u);
    auto [fs, top] = get("/sessions/" + id + "/graph?min_importance_percentile=60");
    EXPECT_EQ(fs, 200);
    ASSERT_EQ(top["edges"].size(), 4u);
    double lowest_kept = 1e9;
    for (const auto& e : top["edges"]) lowest_kept = std::min(lowest_kept, e["importance"].get<double>());
    for (std::size_t i = 4; i < 10; ++i) EXPECT_LE(all["edges"][i]["importance"].get<double>(), lowest_kept);
    EXPECT_EQ(get("/sessions/" + id + "/graph?min_importance_percentile=100").second["edges"].size(), 0u);
    EXPECT_EQ(get("/sessions/" + id + "/graph?min_importance_percentile=150").first, 422);
}

TEST_F(ServiceTest, AbortedSessionRejectsSteps) {
    const auto id = session("flip", {{"checker_threshold", 0}});
    auto [s, step] = post("/sessions/" + id + "/step", {{"policy", "density"}, {"relative_change", 0.3}});
    EXPECT_EQ(s, 200);
    EXPECT_EQ(step["record"]["verdict"]["tag"], "FAIL");
    EXPECT_EQ(step["state"], "aborted");
    EXPECT_EQ(post("/sessions/" + id + "/step", {{"policy", "clique"}}).first, 409);
    EXPECT_EQ(post("/sessions/" + id + "/run", {{"policy", "clique"}}).first, 409);
    EXPECT_EQ(get("/sessions/" + id + "/history").first, 200);
    EXPECT_EQ(post("/sessions/" + id + "/reset", json::object()).first, 200);
    EXPECT_EQ(post("/sessions/" + id + "/step", {{"manual_edges", json::array()}}).first, 200);
}

TEST_F(ServiceTest, LongRunIsCancellable) {
    const auto id = session("slow", {{"checker_threshold", 1000}});
    std::pair<int, json> result;
    std::thread runner([&] {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(60, 0);
        auto r = c.Post("/sessions/" + id + "/run",
                        json{{"policy", "manual"}, {"iterations", 100000}}.dump(), "application/json");
        result = {r ? r->status : 0, r ? json::parse(r->body) : json{}};
    });
    runner.join();
    EXPECT_EQ(result.first, 422) << "manual policy is not runnable";

    std::atomic<bool> done{false};
    std::thread runner2([&] {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(60, 0);
        auto r = c.Post("/sessions/" + id + "/run",
                        json{{"policy", "random"}, {"counts", {0}}, {"iterations", 100000}}.dump(),
                        "application/json");
        result = {r ? r->status : 0, r ? json::parse(r->body) : json{}};
        done = true;
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    for (int i = 0; i < 200 && !done; ++i) {
        EXPECT_EQ(post("/sessions/" + id + "/cancel", json::object()).first, 202);
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    runner2.join();
    EXPECT_EQ(result.first, 200);
    EXPECT_EQ(result.second["outcome"], "cancelled");
    EXPECT_LT(result.second["iterations"].size(), 1000u);
}

TEST_F(ServiceTest, ConcurrentStepsOnOneSessionSerialize) {
    const auto id = session("tiny", {{"checker_threshold", 1000}});
    std::vector<std::thread> threads;
    std::atomic<int> ok{0};
    for (int t = 0; t < 6; ++t) {
        threads.emplace_back([&] {
            httplib::Client c("127.0.0.1", port_);
            auto r = c.Post("/sessions/" + id + "/step", json{{"manual_edges", json::array()}}.dump(),
                            "application/json");
            if (r && r->status == 200) ++ok;
        });
    }
    for (auto& th : threads) th.join();
    const auto hist = get("/sessions/" + id + "/history").second;
    EXPECT_EQ(hist["iterations"].size(), static_cast<std::size_t>(ok) + 1);
    for (std::size_t i = 0; i < hist["iterations"].size(); ++i) EXPECT_EQ(hist["iterations"][i]["index"], i);
}

TEST_F(ServiceTest, CorsPreflight) {
    auto r = client_->Options("/sessions");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 204);
    EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
}
