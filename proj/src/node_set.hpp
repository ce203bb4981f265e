#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace connsim::detail {

/// Fixed-size bitset over node indices.
class NodeSet {
public:
    NodeSet() = default;
    explicit NodeSet(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

    static NodeSet full(std::size_t n) {
        NodeSet s(n);
        for (std::size_t i = 0; i < n; ++i) {
            s.set(i);
        }
        return s;
    }

    void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }

    bool any() const {
        for (auto w : words_) {
            if (w) return true;
        }
        return false;
    }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    /// Lowest member; undefined when empty.
    std::size_t first() const {
        for (std::size_t k = 0; k < words_.size(); ++k) {
            if (words_[k]) return k * 64 + static_cast<std::size_t>(std::countr_zero(words_[k]));
        }
        return n_;
    }

    NodeSet& operator&=(const NodeSet& o) {
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= o.words_[k];
        return *this;
    }

    NodeSet& subtract(const NodeSet& o) {
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= ~o.words_[k];
        return *this;
    }

    friend NodeSet operator&(NodeSet a, const NodeSet& b) { return a &= b; }

    std::size_t universe() const noexcept { return n_; }

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace connsim::detail
