#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "connsim/classifier.hpp"
#include "connsim/cli.hpp"
#include "connsim/interop.hpp"
#include "connsim/synthetic.hpp"
#include "test_support.hpp"

using namespace connsim;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "connsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("connsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path(name)) << text;
        return path(name);
    }

    std::string tiny_model() const {
        save_model(ModelParameters::initialize(fixtures::tiny_shape(84), 1), path("model.bin"));
        return path("model.bin");
    }

    std::string synthetic(Stage s, std::uint64_t seed) const {
        save_matrix(generate_synthetic(SyntheticSpec::defaults(s, seed)).graph, path("g.txt"));
        return path("g.txt");
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, MetricsOnTriangle) {
    const auto k3 = write("k3.csv", "0,1,1\n1,0,1\n1,1,0\n");
    const auto r = cli({"metrics", "--input", k3});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("density 0.5"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("assortativity undefined"), std::string::npos) << r.out;
}

TEST_F(CliTest, SolveMvcOnPath) {
    const auto p3 = write("p3.txt", "0 1 0\n1 0 1\n0 1 0\n");
    const auto r = cli({"solve", "--input", p3, "--criterion", "mvc"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "nodes: 1\nselection:\n");
    const auto c = cli({"solve", "--input", p3, "--criterion", "independent-set"});
    EXPECT_EQ(c.out, "nodes: 0 2\nselection: (0,1) (1,2)\n");
}

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"metrics"}).code, 2);
    EXPECT_EQ(cli({"bogus"}).code, 2);
    EXPECT_EQ(cli({"metrics", "--input", path("missing.txt")}).code, 2);
    const auto p3 = write("p3.txt", "0 1 0\n1 0 1\n0 1 0\n");
    EXPECT_EQ(cli({"solve", "--input", p3, "--criterion", "nope"}).code, 2);
    EXPECT_EQ(cli({"solve", "--input", p3, "--criterion", "k-hub"}).out, "nodes: 1\nselection: (0,1) (1,2)\n");
    EXPECT_EQ(cli({"solve", "--input", p3, "--criterion", "mvc", "--k", "2"}).code, 2);
    EXPECT_EQ(cli({"synth", "--stage", "cis", "--out", path("x.txt")}).code, 2);
    const auto model = tiny_model();
    EXPECT_EQ(cli({"evolve", "--input", p3, "--model", model, "--policy", "random", "--out", path("h.json")}).code, 2);
    const auto both = cli({"evolve", "--input", p3, "--model", model, "--policy", "density", "--seed", "1",
                           "--k", "3", "--out", path("h.json")});
    EXPECT_EQ(both.code, 2);
    EXPECT_NE(both.err.find("--k"), std::string::npos) << both.err;
    EXPECT_FALSE(fs::exists(path("h.json")));
}

TEST_F(CliTest, DomainErrors) {
    const auto asym = write("asym.txt", "0 1\n2 0\n");
    const auto r = cli({"metrics", "--input", asym});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("(0,1)"), std::string::npos) << r.err;
    const auto ragged = write("ragged.txt", "0 1\n1\n");
    const auto rr = cli({"metrics", "--input", ragged});
    EXPECT_EQ(rr.code, 1);
    EXPECT_NE(rr.err.find("line 2"), std::string::npos) << rr.err;
}

TEST_F(CliTest, EvolveCliqueWritesFiveRecords) {
    const auto g = synthetic(Stage::CIS, 4);
    const auto model = tiny_model();
    const auto r = cli({"evolve", "--input", g, "--model", model, "--policy", "clique", "--p", "50",
                        "--iterations", "4", "--checker-threshold", "100000", "--out", path("h.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(path("h.json"));
    std::stringstream ss;
    ss << in.rdbuf();
    const auto h = import_history(ss.str());
    EXPECT_EQ(h.records.size(), 5u);
    EXPECT_EQ(h.outcome, Outcome::Completed);

    const auto b = cli({"evolve", "--input", g, "--model", model, "--policy", "random", "--seed", "5",
                        "--match", path("h.json"), "--out", path("b.json")});
    ASSERT_EQ(b.code, 0) << b.err;
    std::ifstream bin(path("b.json"));
    std::stringstream bs;
    bs << bin.rdbuf();
    const auto base = import_history(bs.str());
    ASSERT_EQ(base.records.size(), 5u);
    for (std::size_t i = 1; i < 5; ++i) {
        EXPECT_EQ(base.records[i].modified_edge_count, h.records[i].modified_edge_count);
    }
}

TEST_F(CliTest, ClassifyAndExportFacts) {
    const auto g = synthetic(Stage::RR, 2);
    const auto model = tiny_model();
    const auto c = cli({"classify", "--input", g, "--model", model, "--importance-out", path("imp.txt")});
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_NE(c.out.find("predicted "), std::string::npos);
    EXPECT_TRUE(fs::exists(path("imp.txt")));
    const auto f = cli({"export-facts", "--input", g, "--model", model, "--p", "25", "--checker-threshold", "9",
                        "--out", path("g.lp")});
    ASSERT_EQ(f.code, 0) << f.err;
    std::ifstream in(path("g.lp"));
    std::stringstream ss;
    ss << in.rdbuf();
    const auto parsed = parse_facts(ss.str());
    EXPECT_EQ(parsed.graph, load_matrix(g));
    EXPECT_EQ(parsed.extras.threshold, 9u);
    EXPECT_TRUE(parsed.extras.result.has_value());
    EXPECT_FALSE(parsed.extras.importance.empty());
    EXPECT_EQ(parsed.extras.degradation.size(), parsed.graph.edge_count());
}

TEST_F(CliTest, SynthIsSeedDeterministic) {
    ASSERT_EQ(cli({"synth", "--stage", "sp", "--seed", "3", "--out", path("a.txt")}).code, 0);
    ASSERT_EQ(cli({"synth", "--stage", "sp", "--seed", "3", "--out", path("b.txt")}).code, 0);
    EXPECT_EQ(load_matrix(path("a.txt")), load_matrix(path("b.txt")));
    EXPECT_EQ(cli({"synth", "--stage", "xx", "--seed", "3", "--out", path("c.txt")}).code, 2);
    ASSERT_EQ(cli({"synth", "--stage", "pp", "--seed", "3", "--count", "3", "--out", path("batch")}).code, 0);
    EXPECT_TRUE(fs::exists(path("batch/PP_0002.txt")) || fs::exists(path("batch/pp_0002.txt")));
}
