#include "connsim/graph.hpp"

#include <algorithm>

#include "connsim/errors.hpp"

namespace connsim {

EdgeKey EdgeKey::of(NodeId a, NodeId b) {
    if (a == b) {
        throw ContractViolation("self-loop (" + std::to_string(a) + "," + std::to_string(b) +
                                ") is not an edge");
    }
    return a < b ? EdgeKey{a, b} : EdgeKey{b, a};
}

EdgeSelection::EdgeSelection(std::initializer_list<EdgeKey> keys) : keys_(keys) { normalize(); }

EdgeSelection::EdgeSelection(std::vector<EdgeKey> keys) : keys_(std::move(keys)) { normalize(); }

void EdgeSelection::normalize() {
    for (auto& k : keys_) {
        k = EdgeKey::of(k.x, k.y);
    }
    std::sort(keys_.begin(), keys_.end());
    keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
}

void EdgeSelection::insert(EdgeKey key) {
    key = EdgeKey::of(key.x, key.y);
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) {
        keys_.insert(it, key);
    }
}

bool EdgeSelection::contains(EdgeKey key) const {
    if (key.x == key.y) {
        return false;
    }
    key = EdgeKey::of(key.x, key.y);
    return std::binary_search(keys_.begin(), keys_.end(), key);
}

Connectome::Connectome(std::size_t q, std::vector<std::uint8_t> w) : q_(q), w_(std::move(w)) {
    for (std::size_t i = 0; i < q_; ++i) {
        for (std::size_t j = i + 1; j < q_; ++j) {
            edges_ += w_[i * q_ + j] > 0;
        }
    }
}

std::size_t Connectome::index(NodeId i, NodeId j) const {
    if (i >= q_ || j >= q_) {
        throw ContractViolation("node index (" + std::to_string(i) + "," + std::to_string(j) +
                                ") out of range for q=" + std::to_string(q_));
    }
    return static_cast<std::size_t>(i) * q_ + j;
}

Connectome Connectome::from_matrix(std::size_t node_count, std::span<const int> m) {
    if (node_count == 0) {
        throw ValidationError("connectome needs at least one node");
    }
    if (m.size() != node_count * node_count) {
        throw ValidationError("matrix has " + std::to_string(m.size()) + " cells, expected " +
                              std::to_string(node_count * node_count));
    }
    std::vector<std::uint8_t> w(m.size());
    for (std::size_t i = 0; i < node_count; ++i) {
        for (std::size_t j = 0; j < node_count; ++j) {
            const int v = m[i * node_count + j];
            const std::string cell = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
            if (v < 0 || v > kMaxWeight) {
                throw ValidationError("weight " + std::to_string(v) + " at " + cell +
                                      " outside [0,100]");
            }
            if (i == j && v != 0) {
                throw ValidationError("non-zero diagonal at " + cell);
            }
            if (j > i && v != m[j * node_count + i]) {
                throw ValidationError("asymmetric cells " + cell + "=" + std::to_string(v) +
                                      " and (" + std::to_string(j) + "," + std::to_string(i) +
                                      ")=" + std::to_string(m[j * node_count + i]));
            }
            w[i * node_count + j] = static_cast<std::uint8_t>(v);
        }
    }
    return Connectome(node_count, std::move(w));
}

Connectome Connectome::from_rows(const std::vector<std::vector<int>>& rows) {
    std::vector<int> flat;
    flat.reserve(rows.size() * rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) {
            throw ValidationError("row " + std::to_string(i) + " has " +
                                  std::to_string(rows[i].size()) + " cells, expected " +
                                  std::to_string(rows.size()));
        }
        flat.insert(flat.end(), rows[i].begin(), rows[i].end());
    }
    return from_matrix(rows.size(), flat);
}

Connectome Connectome::from_edges(std::size_t node_count, std::span<const Edge> edges) {
    std::vector<int> m(node_count * node_count, 0);
    for (const auto& e : edges) {
        if (e.x >= node_count || e.y >= node_count || e.x == e.y) {
            throw ValidationError("edge (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                                  ") invalid for q=" + std::to_string(node_count));
        }
        m[e.x * node_count + e.y] = e.w;
        m[e.y * node_count + e.x] = e.w;
    }
    return from_matrix(node_count, m);
}

Connectome Connectome::empty(std::size_t node_count) {
    if (node_count == 0) {
        throw ValidationError("connectome needs at least one node");
    }
    return Connectome(node_count, std::vector<std::uint8_t>(node_count * node_count, 0));
}

std::vector<Edge> Connectome::active_edges() const {
    std::vector<Edge> out;
    out.reserve(edges_);
    for (std::size_t i = 0; i < q_; ++i) {
        for (std::size_t j = i + 1; j < q_; ++j) {
            if (const int w = w_[i * q_ + j]; w > 0) {
                out.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), w});
            }
        }
    }
    return out;
}

std::size_t Connectome::degree(NodeId v) const {
    const std::size_t row = index(v, 0);
    std::size_t d = 0;
    for (std::size_t u = 0; u < q_; ++u) {
        d += w_[row + u] > 0;
    }
    return d;
}

std::vector<std::size_t> Connectome::degrees() const {
    std::vector<std::size_t> d(q_);
    for (std::size_t v = 0; v < q_; ++v) {
        d[v] = degree(static_cast<NodeId>(v));
    }
    return d;
}

Connectome Connectome::with_weights(std::span<const Edge> updates) const {
    auto w = w_;
    for (const auto& e : updates) {
        if (e.w < 0 || e.w > kMaxWeight) {
            throw ContractViolation("weight " + std::to_string(e.w) + " outside [0,100]");
        }
        const auto k = EdgeKey::of(e.x, e.y);
        w[index(k.x, k.y)] = static_cast<std::uint8_t>(e.w);
        w[index(k.y, k.x)] = static_cast<std::uint8_t>(e.w);
    }
    return Connectome(q_, std::move(w));
}

std::vector<double> Connectome::real_matrix() const {
    std::vector<double> out(w_.size());
    std::transform(w_.begin(), w_.end(), out.begin(),
                   [](std::uint8_t v) { return static_cast<double>(v) / kMaxWeight; });
    return out;
}

std::vector<int> Connectome::int_matrix() const { return {w_.begin(), w_.end()}; }

std::vector<Edge> active_edges(const Connectome& g) { return g.active_edges(); }

std::size_t degree(const Connectome& g, NodeId v) { return g.degree(v); }

std::size_t edge_count(const Connectome& g) { return g.edge_count(); }

void require_active(const Connectome& g, const EdgeSelection& sel) {
    for (const auto& k : sel) {
        if (k.y >= g.node_count() || !g.is_active(k.x, k.y)) {
            throw ContractViolation("edge (" + std::to_string(k.x) + "," + std::to_string(k.y) +
                                    ") is not active");
        }
    }
}

}  // namespace connsim
