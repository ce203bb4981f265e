#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace connsim {

using NodeId = std::uint32_t;

inline constexpr int kMaxWeight = 100;

/// Unordered node pair in canonical orientation (x < y).
struct EdgeKey {
    NodeId x = 0;
    NodeId y = 0;

    /// Canonicalizes (a, b); a == b is a contract violation.
    static EdgeKey of(NodeId a, NodeId b);

    friend auto operator<=>(const EdgeKey&, const EdgeKey&) = default;
};

struct Edge {
    NodeId x = 0;
    NodeId y = 0;
    int w = 0;

    EdgeKey key() const { return {x, y}; }
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Sorted, duplicate-free set of canonical edges.
class EdgeSelection {
public:
    EdgeSelection() = default;
    EdgeSelection(std::initializer_list<EdgeKey> keys);
    explicit EdgeSelection(std::vector<EdgeKey> keys);

    void insert(EdgeKey key);
    bool contains(EdgeKey key) const;

    std::size_t size() const noexcept { return keys_.size(); }
    bool empty() const noexcept { return keys_.empty(); }
    auto begin() const noexcept { return keys_.begin(); }
    auto end() const noexcept { return keys_.end(); }
    const std::vector<EdgeKey>& keys() const noexcept { return keys_; }

    friend bool operator==(const EdgeSelection&, const EdgeSelection&) = default;

private:
    void normalize();
    std::vector<EdgeKey> keys_;
};

/// Symmetric weighted graph over nodes 0..q-1 with integer weights in
/// [0, 100]. A weight of 0 means the pair is not connected. Instances are
/// immutable; every modification yields a new value.
class Connectome {
public:
    /// Builds from a row-major q*q matrix. Rejects non-square input,
    /// asymmetric entries, non-zero diagonal and weights outside [0, 100].
    static Connectome from_matrix(std::size_t node_count, std::span<const int> row_major);
    static Connectome from_rows(const std::vector<std::vector<int>>& rows);
    static Connectome from_edges(std::size_t node_count, std::span<const Edge> edges);
    static Connectome empty(std::size_t node_count);

    std::size_t node_count() const noexcept { return q_; }
    int weight(NodeId i, NodeId j) const { return w_[index(i, j)]; }
    bool is_active(NodeId i, NodeId j) const { return weight(i, j) > 0; }

    /// Active edges sorted by (x, y).
    std::vector<Edge> active_edges() const;
    std::size_t edge_count() const noexcept { return edges_; }
    std::size_t degree(NodeId v) const;
    std::vector<std::size_t> degrees() const;

    /// Copy with the listed canonical pairs set to new weights.
    Connectome with_weights(std::span<const Edge> updates) const;

    /// Row-major matrix of weight / 100.
    std::vector<double> real_matrix() const;
    std::vector<int> int_matrix() const;

    friend bool operator==(const Connectome& a, const Connectome& b) {
        return a.q_ == b.q_ && a.w_ == b.w_;
    }

private:
    Connectome(std::size_t q, std::vector<std::uint8_t> w);
    std::size_t index(NodeId i, NodeId j) const;

    std::size_t q_ = 0;
    std::vector<std::uint8_t> w_;
    std::size_t edges_ = 0;
};

std::vector<Edge> active_edges(const Connectome& g);
std::size_t degree(const Connectome& g, NodeId v);
std::size_t edge_count(const Connectome& g);

/// The pairs of `sel` that are active in `g` must be all of them.
void require_active(const Connectome& g, const EdgeSelection& sel);

/// Optional sidecar naming of nodes, e.g. atlas region labels. Not part of
/// graph identity.
struct NodeAtlas {
    std::vector<std::string> names;
    std::optional<std::vector<std::array<double, 3>>> coordinates;
};

}  // namespace connsim
