#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mgnn {

// A 3-node pattern is packed into 6 bits, one per ordered non-diagonal pair.
// Slot order: (0,1) (1,0) (0,2) (2,0) (1,2) (2,1).
using PatternBits = std::uint8_t;

namespace pattern {

constexpr int slot(int u, int v) {
    if (u == 0 && v == 1) return 0;
    if (u == 1 && v == 0) return 1;
    if (u == 0 && v == 2) return 2;
    if (u == 2 && v == 0) return 3;
    if (u == 1 && v == 2) return 4;
    return 5; // (2,1)
}

constexpr std::array<std::pair<int, int>, 6> kSlotPairs = {
    {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}}};

constexpr bool has(PatternBits b, int u, int v) { return (b >> slot(u, v)) & 1; }

constexpr PatternBits with_edge(PatternBits b, int u, int v) {
    return static_cast<PatternBits>(b | (1u << slot(u, v)));
}

constexpr std::array<std::array<int, 3>, 6> kPerms = {
    {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

constexpr PatternBits apply_perm(PatternBits b, const std::array<int, 3>& p) {
    PatternBits out = 0;
    for (const auto& [u, v] : kSlotPairs)
        if (has(b, u, v)) out = with_edge(out, p[u], p[v]);
    return out;
}

constexpr PatternBits canonical(PatternBits b) {
    PatternBits best = 0x3f;
    bool first = true;
    for (const auto& p : kPerms) {
        PatternBits c = apply_perm(b, p);
        if (first || c < best) {
            best = c;
            first = false;
        }
    }
    return best;
}

/// Connected as an undirected 3-node graph: at least two of the three pairs
/// linked (two linked pairs always share a node, so no isolated node remains).
constexpr bool connected(PatternBits b) {
    bool p01 = has(b, 0, 1) || has(b, 1, 0);
    bool p02 = has(b, 0, 2) || has(b, 2, 0);
    bool p12 = has(b, 1, 2) || has(b, 2, 1);
    return (p01 && p02) || (p01 && p12) || (p02 && p12);
}

constexpr bool all_pairs_linked(PatternBits b) {
    return (has(b, 0, 1) || has(b, 1, 0)) && (has(b, 0, 2) || has(b, 2, 0)) &&
           (has(b, 1, 2) || has(b, 2, 1));
}

} // namespace pattern

enum class Openness { Closed, Open };

/// One entry of the catalog of the 13 connected 3-node directed motifs.
/// M1 is the directed 3-cycle, M4 the fully bidirectional triangle; the open
/// motifs M8-M13 are the wedges classified by their two center-neighbor link
/// types (out/out, out/in, in/in, bi/out, bi/in, bi/bi).
struct Motif {
    int id = 0;
    PatternBits bits = 0;
    int edge_count = 0;
    Openness openness = Openness::Open;

    bool closed() const { return openness == Openness::Closed; }
    std::array<std::array<int, 3>, 3> adjacency() const {
        std::array<std::array<int, 3>, 3> m{};
        for (const auto& [u, v] : pattern::kSlotPairs)
            if (pattern::has(bits, u, v)) m[u][v] = 1;
        return m;
    }
};

namespace detail {

constexpr PatternBits make_bits(std::initializer_list<std::pair<int, int>> edges) {
    PatternBits b = 0;
    for (const auto& [u, v] : edges) b = pattern::with_edge(b, u, v);
    return b;
}

} // namespace detail

inline const std::array<Motif, 13>& motif_catalog() {
    static const std::array<Motif, 13> kCatalog = [] {
        std::array<Motif, 13> c{};
        auto set = [&](int id, std::initializer_list<std::pair<int, int>> edges) {
            PatternBits b = detail::make_bits(edges);
            c[id - 1] = Motif{id, b, std::popcount(static_cast<unsigned>(b)),
                              pattern::all_pairs_linked(b) ? Openness::Closed : Openness::Open};
        };
        set(1, {{0, 1}, {1, 2}, {2, 0}});
        set(2, {{0, 1}, {1, 0}, {1, 2}, {2, 0}});
        set(3, {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {0, 2}});
        set(4, {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 0}, {0, 2}});
        set(5, {{0, 1}, {1, 2}, {0, 2}});
        set(6, {{0, 1}, {1, 0}, {2, 0}, {2, 1}});
        set(7, {{0, 1}, {1, 0}, {0, 2}, {1, 2}});
        set(8, {{0, 1}, {0, 2}});
        set(9, {{0, 1}, {2, 0}});
        set(10, {{1, 0}, {2, 0}});
        set(11, {{0, 1}, {1, 0}, {0, 2}});
        set(12, {{0, 1}, {1, 0}, {2, 0}});
        set(13, {{0, 1}, {1, 0}, {0, 2}, {2, 0}});
        return c;
    }();
    return kCatalog;
}

inline const Motif& motif(int id) {
    if (id < 1 || id > 13) throw std::invalid_argument("motif id must be in 1..13");
    return motif_catalog()[id - 1];
}

inline bool is_open_motif(int id) { return !motif(id).closed(); }

/// Maps a 3x3 zero-diagonal binary pattern to its motif id by isomorphism
/// over the 6 node permutations. Disconnected patterns violate the motif
/// definition and are rejected.
inline int motif_id_of(const std::array<std::array<int, 3>, 3>& m) {
    PatternBits b = 0;
    for (int u = 0; u < 3; ++u) {
        if (m[u][u] != 0) throw std::invalid_argument("motif pattern must have zero diagonal");
        for (int v = 0; v < 3; ++v)
            if (u != v && m[u][v]) b = pattern::with_edge(b, u, v);
    }
    if (b == 0) throw std::invalid_argument("motif pattern must have at least one edge");
    if (!pattern::connected(b))
        throw std::invalid_argument("motif pattern is disconnected");
    PatternBits canon = pattern::canonical(b);
    for (const Motif& mo : motif_catalog())
        if (pattern::canonical(mo.bits) == canon) return mo.id;
    throw std::logic_error("pattern matches no catalog motif"); // unreachable
}

} // namespace mgnn
