#include "connsim/interop.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "connsim/errors.hpp"
#include "json_codec.hpp"

namespace connsim {

int scale_to_percent(double x) {
    if (!std::isfinite(x)) throw ValidationError("cannot scale a non-finite value");
    return static_cast<int>(std::floor(x * 100.0 + 0.5));
}

std::map<EdgeKey, int> importance_facts(const ImportanceMap& imp, const Connectome& g) {
    if (imp.node_count() != g.node_count()) {
        throw ContractViolation("importance map and graph differ in node count");
    }
    std::map<EdgeKey, int> out;
    for (const Edge& e : g.active_edges()) out[e.key()] = scale_to_percent(imp.at(e.x, e.y));
    return out;
}

std::map<EdgeKey, int> degradation_facts(const DegradationMap& dc) {
    std::map<EdgeKey, int> out;
    for (const Edge& e : dc.entries()) out[e.key()] = e.w;
    return out;
}

std::array<int, 4> result_facts(const StageProbabilities& p) {
    std::array<int, 4> out{};
    for (Stage s : kStages) out[static_cast<std::size_t>(s)] = scale_to_percent(p[s]);
    return out;
}

namespace {

// Stages in the byte order of their names.
constexpr std::array<Stage, 4> kStagesByName{Stage::CIS, Stage::PP, Stage::RR, Stage::SP};

void put_triples(std::string& out, const char* pred, const std::map<EdgeKey, int>& facts) {
    for (const auto& [k, v] : facts) {
        out += pred;
        out += '(' + std::to_string(k.x) + ',' + std::to_string(k.y) + ',' + std::to_string(v) + ").\n";
    }
}

void put_results(std::string& out, const char* pred, const std::array<int, 4>& r) {
    for (Stage s : kStagesByName) {
        out += pred;
        out += "(\"" + std::string(to_string(s)) + "\"," +
               std::to_string(r[static_cast<std::size_t>(s)]) + ").\n";
    }
}

}  // namespace

std::string emit_facts(const Connectome& g, const FactExtras& extras) {
    const std::size_t q = g.node_count();
    if (extras.previous && extras.previous->node_count() != q) {
        throw ContractViolation("previous graph differs in node count");
    }
    std::string out;
    for (std::size_t i = 0; i < q; ++i) out += "node(" + std::to_string(i) + ").\n";

    std::map<EdgeKey, int> edges;
    for (const Edge& e : g.active_edges()) edges[e.key()] = e.w;
    if (extras.previous) {
        for (const Edge& e : extras.previous->active_edges()) edges.try_emplace(e.key(), 0);
    }
    put_triples(out, "edge", edges);
    if (extras.previous) {
        std::map<EdgeKey, int> prev;
        for (const Edge& e : extras.previous->active_edges()) prev[e.key()] = e.w;
        put_triples(out, "edge_1", prev);
    }
    put_triples(out, "imp", extras.importance);
    put_triples(out, "dc", extras.degradation);
    if (extras.result) put_results(out, "result", *extras.result);
    if (extras.result_1) put_results(out, "result_1", *extras.result_1);
    if (extras.threshold) out += "th(" + std::to_string(*extras.threshold) + ").\n";
    return out;
}

namespace {

struct Term {
    bool is_string = false;
    long long number = 0;
    std::string text;
};

struct Fact {
    std::string predicate;
    std::vector<Term> args;
    std::size_t line = 0;
};

class FactScanner {
public:
    explicit FactScanner(const std::string& text) : s_(text) {}

    std::optional<Fact> next() {
        skip_blank();
        if (pos_ >= s_.size()) return std::nullopt;
        Fact f;
        f.line = line_;
        while (pos_ < s_.size() && (std::islower(static_cast<unsigned char>(s_[pos_])) ||
                                    std::isdigit(static_cast<unsigned char>(s_[pos_])) ||
                                    s_[pos_] == '_')) {
            f.predicate += s_[pos_++];
        }
        if (f.predicate.empty()) fail("expected a predicate name");
        skip_space();
        if (peek() == '(') {
            ++pos_;
            while (true) {
                skip_space();
                f.args.push_back(term());
                skip_space();
                if (peek() == ',') {
                    ++pos_;
                    continue;
                }
                if (peek() == ')') {
                    ++pos_;
                    break;
                }
                fail("expected ',' or ')'");
            }
            skip_space();
        }
        if (peek() != '.') fail("expected '.' after " + f.predicate);
        ++pos_;
        return f;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_); }

private:
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

    void skip_space() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
    }

    void skip_blank() {
        while (pos_ < s_.size()) {
            const char c = s_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\r') {
                ++pos_;
            } else if (c == '%') {
                while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    Term term() {
        Term t;
        if (peek() == '"') {
            ++pos_;
            const std::size_t start = pos_;
            while (pos_ < s_.size() && s_[pos_] != '"' && s_[pos_] != '\n') ++pos_;
            if (peek() != '"') fail("unterminated string");
            t.is_string = true;
            t.text = s_.substr(start, pos_ - start);
            ++pos_;
            return t;
        }
        const std::size_t start = pos_;
        if (peek() == '-') ++pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        const auto [p, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, t.number);
        if (ec != std::errc() || p != s_.data() + pos_ || pos_ == start) fail("expected an integer or string");
        return t;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

long long integer(const Fact& f, std::size_t i) {
    if (f.args[i].is_string) {
        throw ParseError(f.predicate + ": argument " + std::to_string(i + 1) + " must be an integer",
                         f.line);
    }
    return f.args[i].number;
}

void expect_arity(const Fact& f, std::size_t n) {
    if (f.args.size() != n) {
        throw ParseError(f.predicate + " expects " + std::to_string(n) + " arguments", f.line);
    }
}

struct Pair {
    EdgeKey key;
    int value;
};

Pair pair_fact(const Fact& f, std::size_t q, int lo, int hi) {
    expect_arity(f, 3);
    const long long x = integer(f, 0);
    const long long y = integer(f, 1);
    const long long v = integer(f, 2);
    if (x < 0 || y < 0 || static_cast<std::size_t>(x) >= q || static_cast<std::size_t>(y) >= q) {
        throw ParseError(f.predicate + ": node out of range 0.." + std::to_string(q - 1), f.line);
    }
    if (x == y) throw ParseError(f.predicate + ": self-loop on node " + std::to_string(x), f.line);
    if (v < lo || v > hi) {
        throw ParseError(f.predicate + ": value " + std::to_string(v) + " outside [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "]",
                         f.line);
    }
    return {EdgeKey::of(static_cast<NodeId>(x), static_cast<NodeId>(y)), static_cast<int>(v)};
}

void store(std::map<EdgeKey, int>& m, const Pair& p, const Fact& f) {
    auto [it, inserted] = m.emplace(p.key, p.value);
    if (!inserted && it->second != p.value) {
        throw ParseError(f.predicate + "(" + std::to_string(p.key.x) + "," +
                             std::to_string(p.key.y) + ") repeated with a different value",
                         f.line);
    }
}

Connectome graph_of(std::size_t q, const std::map<EdgeKey, int>& weights) {
    std::vector<Edge> edges;
    for (const auto& [k, w] : weights) {
        if (w > 0) edges.push_back({k.x, k.y, w});
    }
    return Connectome::from_edges(q, edges);
}

}  // namespace

ParsedFacts parse_facts(const std::string& text) {
    std::vector<Fact> facts;
    FactScanner scan(text);
    while (auto f = scan.next()) facts.push_back(std::move(*f));

    std::size_t q = 0;
    bool any_node = false;
    for (const Fact& f : facts) {
        if (f.predicate != "node") continue;
        expect_arity(f, 1);
        const long long v = integer(f, 0);
        if (v < 0 || v >= 1 << 20) throw ParseError("node index out of range", f.line);
        q = std::max(q, static_cast<std::size_t>(v) + 1);
        any_node = true;
    }
    if (!any_node) throw ParseError("no node facts", 1);

    std::map<EdgeKey, int> edges;
    std::map<EdgeKey, int> prev;
    bool has_prev = false;
    FactExtras extras;
    std::array<std::optional<int>, 4> result;
    std::array<std::optional<int>, 4> result_1;
    bool has_result = false;
    bool has_result_1 = false;
    for (const Fact& f : facts) {
        if (f.predicate == "node") continue;
        if (f.predicate == "edge") {
            store(edges, pair_fact(f, q, 0, kMaxWeight), f);
        } else if (f.predicate == "edge_1") {
            store(prev, pair_fact(f, q, 0, kMaxWeight), f);
            has_prev = true;
        } else if (f.predicate == "imp") {
            store(extras.importance, pair_fact(f, q, INT32_MIN, INT32_MAX), f);
        } else if (f.predicate == "dc") {
            store(extras.degradation, pair_fact(f, q, 0, kMaxWeight), f);
        } else if (f.predicate == "result" || f.predicate == "result_1") {
            expect_arity(f, 2);
            if (!f.args[0].is_string) throw ParseError(f.predicate + ": stage must be a string", f.line);
            const auto st = parse_stage(f.args[0].text);
            if (!st) throw ParseError(f.predicate + ": unknown stage '" + f.args[0].text + "'", f.line);
            const long long v = integer(f, 1);
            if (v < 0 || v > 100) throw ParseError(f.predicate + ": value outside [0, 100]", f.line);
            auto& slot = (f.predicate == "result" ? result : result_1)[static_cast<std::size_t>(*st)];
            if (slot && *slot != v) throw ParseError(f.predicate + ": stage repeated", f.line);
            slot = static_cast<int>(v);
            (f.predicate == "result" ? has_result : has_result_1) = true;
        } else if (f.predicate == "th") {
            expect_arity(f, 1);
            const long long v = integer(f, 0);
            if (v < 0) throw ParseError("th: threshold must be non-negative", f.line);
            if (extras.threshold && *extras.threshold != static_cast<std::size_t>(v)) {
                throw ParseError("th: repeated with a different value", f.line);
            }
            extras.threshold = static_cast<std::size_t>(v);
        } else {
            throw ParseError("unknown predicate '" + f.predicate + "'", f.line);
        }
    }
    auto complete = [](const std::array<std::optional<int>, 4>& r, const char* pred) {
        std::array<int, 4> out{};
        for (std::size_t i = 0; i < 4; ++i) {
            if (!r[i]) {
                throw ParseError(std::string(pred) + ": missing stage " +
                                     std::string(to_string(kStages[i])),
                                 1);
            }
            out[i] = *r[i];
        }
        return out;
    };
    if (has_result) extras.result = complete(result, "result");
    if (has_result_1) extras.result_1 = complete(result_1, "result_1");
    if (has_prev) extras.previous = graph_of(q, prev);
    return {graph_of(q, edges), std::move(extras)};
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

Connectome load_matrix(std::istream& in) {
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const bool comma = text.find(',') != std::string::npos;
    const bool real = text.find('.') != std::string::npos;

    std::vector<int> cells;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> tokens;
        if (comma) {
            std::stringstream ls(line);
            std::string tok;
            while (std::getline(ls, tok, ',')) tokens.push_back(trim(tok));
        } else {
            std::istringstream ls(line);
            std::string tok;
            while (ls >> tok) tokens.push_back(tok);
        }
        if (rows == 0) {
            cols = tokens.size();
        } else if (tokens.size() != cols) {
            throw ParseError("row " + std::to_string(rows + 1) + " has " +
                                 std::to_string(tokens.size()) + " cells, expected " +
                                 std::to_string(cols),
                             line_no);
        }
        for (std::size_t c = 0; c < tokens.size(); ++c) {
            const std::string& tok = tokens[c];
            const char* b = tok.data();
            const char* e = tok.data() + tok.size();
            int v = 0;
            bool ok = false;
            if (real) {
                double d = 0.0;
                const auto [p, ec] = std::from_chars(b, e, d);
                ok = ec == std::errc() && p == e && !tok.empty() && std::isfinite(d);
                if (ok) v = scale_to_percent(d);
            } else {
                const auto [p, ec] = std::from_chars(b, e, v);
                ok = ec == std::errc() && p == e && !tok.empty();
            }
            if (!ok) {
                throw ParseError("cell (" + std::to_string(rows) + "," + std::to_string(c) +
                                     ") is not numeric: '" + tok + "'",
                                 line_no);
            }
            cells.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw ValidationError("matrix file is empty");
    if (rows != cols) {
        throw ValidationError("matrix is " + std::to_string(rows) + "x" + std::to_string(cols) +
                              ", expected square");
    }
    return Connectome::from_matrix(rows, cells);
}

Connectome load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open matrix '" + path + "'");
    try {
        return load_matrix(in);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

void save_matrix(const Connectome& g, std::ostream& out) {
    const std::size_t q = g.node_count();
    std::string line;
    for (NodeId i = 0; i < q; ++i) {
        line.clear();
        for (NodeId j = 0; j < q; ++j) {
            if (j) line += ' ';
            line += std::to_string(g.weight(i, j));
        }
        line += '\n';
        out << line;
    }
}

void save_matrix(const Connectome& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    save_matrix(g, out);
    if (!out) throw Error("failed writing '" + path + "'");
}

std::string export_history(const EvolutionHistory& h) {
    json doc;
    doc["schema_version"] = kHistorySchemaVersion;
    doc["outcome"] = to_string(h.outcome);
    doc["abort_index"] = nullptr;
    if (auto i = h.abort_index()) doc["abort_index"] = *i;
    doc["message"] = h.message;
    doc["config"] = h.config;
    doc["node_count"] = h.records.empty() ? 0 : h.records.front().graph.node_count();
    json its = json::array();
    for (const IterationRecord& r : h.records) {
        its.push_back({{"index", r.index},
                       {"probabilities", r.probabilities},
                       {"predicted", to_string(r.probabilities.argmax())},
                       {"selection", r.selection},
                       {"modified_edge_count", r.modified_edge_count},
                       {"verdict", r.verdict},
                       {"active_edges", r.graph.edge_count()},
                       {"adjacency", matrix_json(r.graph)}});
    }
    doc["iterations"] = std::move(its);
    return doc.dump();
}

EvolutionHistory import_history(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("history: ") + e.what());
    }
    try {
        const int version = doc.at("schema_version").get<int>();
        if (version != kHistorySchemaVersion) {
            throw ValidationError("history: unsupported schema version " + std::to_string(version));
        }
        EvolutionHistory h;
        const auto outcome = parse_outcome(doc.at("outcome").get<std::string>());
        if (!outcome) throw ValidationError("history: unknown outcome");
        h.outcome = *outcome;
        h.message = doc.value("message", "");
        h.config = doc.at("config").get<RunConfig>();
        for (const json& it : doc.at("iterations")) {
            h.records.push_back({it.at("index").get<std::size_t>(),
                                 matrix_from_json(it.at("adjacency")),
                                 it.at("probabilities").get<StageProbabilities>(),
                                 it.at("selection").get<EdgeSelection>(),
                                 it.at("verdict").get<ValidityVerdict>(),
                                 it.at("modified_edge_count").get<std::size_t>()});
            if (h.records.back().index != h.records.size() - 1) {
                throw ValidationError("history: iteration indices must run 0, 1, 2, ...");
            }
        }
        return h;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("history: ") + e.what());
    } catch (const ContractViolation& e) {
        throw ValidationError(std::string("history: ") + e.what());
    }
}

}  // namespace connsim
