#pragma once

#include <array>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mgnn/graph.hpp"
#include "mgnn/motifs.hpp"
#include "mgnn/sparse.hpp"

namespace mgnn::census {

enum class Semantics { EdgeSubset, NodeInduced, PaperHybrid };
enum class Orientation { Symmetric, Directional };

/// PaperHybrid resolves per motif family: closed motifs node-induced (the
/// matrix-multiplication method), open motifs edge-subset (the degree rules).
inline Semantics resolve_semantics(Semantics s, int motif_id) {
    if (s != Semantics::PaperHybrid) return s;
    return motif(motif_id).closed() ? Semantics::NodeInduced : Semantics::EdgeSubset;
}

inline std::string semantics_name(Semantics s) {
    switch (s) {
        case Semantics::EdgeSubset: return "edge-subset";
        case Semantics::NodeInduced: return "node-induced";
        default: return "hybrid";
    }
}

inline std::string orientation_name(Orientation o) {
    return o == Orientation::Symmetric ? "symmetric" : "directional";
}

inline Semantics semantics_from_name(const std::string& s) {
    if (s == "edge-subset") return Semantics::EdgeSubset;
    if (s == "node-induced") return Semantics::NodeInduced;
    if (s == "hybrid") return Semantics::PaperHybrid;
    throw std::invalid_argument("unknown semantics: " + s);
}

inline Orientation orientation_from_name(const std::string& s) {
    if (s == "symmetric") return Orientation::Symmetric;
    if (s == "directional") return Orientation::Directional;
    throw std::invalid_argument("unknown orientation: " + s);
}

struct CensusConfig {
    Semantics semantics = Semantics::PaperHybrid;
    Orientation orientation = Orientation::Symmetric;
    bool verify_with_oracle = false;
    std::size_t oracle_cap = 200;
};

// Counts abstract instance visits in the enumeration paths. The fast paths
// never touch it; a property test pins that to zero.
namespace instrumentation {
inline std::atomic<std::uint64_t> instances_materialized{0};
inline void reset() { instances_materialized.store(0); }
inline std::uint64_t read() { return instances_materialized.load(); }
} // namespace instrumentation

class WrongPathError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class CensusMismatchError : public std::runtime_error {
public:
    CensusMismatchError(int motif_id, std::size_t row, std::size_t col, double fast_value,
                        double oracle_value)
        : std::runtime_error("census mismatch for M" + std::to_string(motif_id) + " at (" +
                             std::to_string(row) + "," + std::to_string(col) +
                             "): fast=" + std::to_string(fast_value) +
                             " oracle=" + std::to_string(oracle_value)),
          motif_id(motif_id), row(row), col(col), fast_value(fast_value),
          oracle_value(oracle_value) {}
    int motif_id;
    std::size_t row, col;
    double fast_value, oracle_value;
};

// ---------------------------------------------------------------------------
// Neighbor classification (S4.2): disjoint in-only / out-only / bidirectional
// sets per node; d_in and d_out count all in/out edges including the
// bidirectional ones, d_bi counts those separately. Self-loops excluded.
// ---------------------------------------------------------------------------

struct NeighborClassification {
    std::vector<std::vector<std::size_t>> in_only;
    std::vector<std::vector<std::size_t>> out_only;
    std::vector<std::vector<std::size_t>> bidirectional;

    std::size_t d_in(std::size_t v) const { return in_only[v].size() + bidirectional[v].size(); }
    std::size_t d_out(std::size_t v) const { return out_only[v].size() + bidirectional[v].size(); }
    std::size_t d_bi(std::size_t v) const { return bidirectional[v].size(); }
};

inline NeighborClassification classify_neighbors(const DirectedGraph& g) {
    const std::size_t n = g.node_count();
    NeighborClassification nc;
    nc.in_only.resize(n);
    nc.out_only.resize(n);
    nc.bidirectional.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& out = g.out_neighbors(v);
        const auto& in = g.in_neighbors(v);
        std::size_t i = 0, j = 0;
        while (i < out.size() || j < in.size()) {
            std::size_t a = i < out.size() ? out[i] : static_cast<std::size_t>(-1);
            std::size_t b = j < in.size() ? in[j] : static_cast<std::size_t>(-1);
            if (a == b) {
                if (a != v) nc.bidirectional[v].push_back(a);
                ++i, ++j;
            } else if (a < b) {
                if (a != v) nc.out_only[v].push_back(a);
                ++i;
            } else {
                if (b != v) nc.in_only[v].push_back(b);
                ++j;
            }
        }
    }
    return nc;
}

// ---------------------------------------------------------------------------
// Brute-force oracle. Literal reading of Definitions 2-4: visit every node
// triple; node-induced semantics matches the full induced configuration,
// edge-subset semantics matches every r-subset of the triple's edges
// (Def. 3 verbatim). Per-triple contributions are precomputed for all 64
// possible edge configurations.
// ---------------------------------------------------------------------------

namespace detail {

struct TripleContrib {
    std::array<std::uint8_t, 6> ordered{};   // per pattern slot, directional
    std::array<std::uint8_t, 3> unordered{}; // pairs (0,1) (0,2) (1,2), symmetric
    std::uint8_t instances = 0;
};

inline int unordered_index(int u, int v) {
    int a = std::min(u, v), b = std::max(u, v);
    if (a == 0 && b == 1) return 0;
    if (a == 0 && b == 2) return 1;
    return 2;
}

struct TripleTable {
    // [config][motif-1][semantics: 0 edge-subset, 1 node-induced]
    TripleContrib entry[64][13][2];

    TripleTable() {
        std::array<PatternBits, 13> canon{};
        for (const Motif& m : motif_catalog()) canon[m.id - 1] = pattern::canonical(m.bits);
        for (unsigned cfg = 0; cfg < 64; ++cfg) {
            // node-induced: the full configuration must match
            if (pattern::connected(static_cast<PatternBits>(cfg))) {
                PatternBits c = pattern::canonical(static_cast<PatternBits>(cfg));
                for (int k = 1; k <= 13; ++k) {
                    if (canon[k - 1] != c) continue;
                    TripleContrib& t = entry[cfg][k - 1][1];
                    t.instances = 1;
                    for (int s = 0; s < 6; ++s)
                        if ((cfg >> s) & 1) t.ordered[s] = 1;
                    for (int s = 0; s < 6; ++s)
                        if ((cfg >> s) & 1) {
                            auto [u, v] = pattern::kSlotPairs[s];
                            t.unordered[unordered_index(u, v)] = 1; // idempotent per pair
                        }
                }
            }
            // edge-subset: every subset of the configuration that is a motif
            for (unsigned sub = cfg;; sub = (sub - 1) & cfg) {
                if (sub != 0 && pattern::connected(static_cast<PatternBits>(sub))) {
                    PatternBits c = pattern::canonical(static_cast<PatternBits>(sub));
                    for (int k = 1; k <= 13; ++k) {
                        if (canon[k - 1] != c) continue;
                        TripleContrib& t = entry[cfg][k - 1][0];
                        t.instances++;
                        for (int s = 0; s < 6; ++s)
                            if ((sub >> s) & 1) t.ordered[s]++;
                        bool pair_done[3] = {false, false, false};
                        for (int s = 0; s < 6; ++s)
                            if ((sub >> s) & 1) {
                                auto [u, v] = pattern::kSlotPairs[s];
                                int p = unordered_index(u, v);
                                if (!pair_done[p]) {
                                    t.unordered[p]++;
                                    pair_done[p] = true;
                                }
                            }
                    }
                }
                if (sub == 0) break;
            }
        }
    }
};

inline const TripleTable& triple_table() {
    static const TripleTable t;
    return t;
}

// Row-major adjacency bitsets (self-loops stripped) for O(1) edge probes.
struct AdjacencyBits {
    std::size_t n = 0;
    std::size_t words = 0;
    std::vector<std::uint64_t> bits;

    explicit AdjacencyBits(const DirectedGraph& g)
        : n(g.node_count()), words((g.node_count() + 63) / 64), bits(n * words, 0) {
        for (const auto& [u, v] : g.edges())
            if (u != v) bits[u * words + v / 64] |= (1ULL << (v % 64));
    }

    bool has(std::size_t u, std::size_t v) const {
        return (bits[u * words + v / 64] >> (v % 64)) & 1ULL;
    }
};

} // namespace detail

/// Exhaustive census over all node triples for one motif. Returns exact
/// integer counts. This is the reference the fast paths must reproduce and
/// the "Enumerate" column of the efficiency comparison.
inline SparseMatrix motif_adjacency_oracle(const DirectedGraph& g, int motif_id,
                                           const CensusConfig& config) {
    const Motif& m = motif(motif_id);
    Semantics sem = resolve_semantics(config.semantics, motif_id);
    const int sem_idx = sem == Semantics::EdgeSubset ? 0 : 1;
    const std::size_t n = g.node_count();
    const detail::AdjacencyBits adj(g);
    const detail::TripleTable& table = detail::triple_table();

    std::vector<long long> dense(n * n, 0);
    std::uint64_t instances = 0;
    for (std::size_t i = 0; i + 2 < n; ++i)
        for (std::size_t j = i + 1; j + 1 < n; ++j) {
            unsigned base = (adj.has(i, j) ? 1u : 0u) | (adj.has(j, i) ? 2u : 0u);
            for (std::size_t t = j + 1; t < n; ++t) {
                unsigned cfg = base;
                if (adj.has(i, t)) cfg |= 4u;
                if (adj.has(t, i)) cfg |= 8u;
                if (adj.has(j, t)) cfg |= 16u;
                if (adj.has(t, j)) cfg |= 32u;
                if (cfg == 0) continue;
                const detail::TripleContrib& c = table.entry[cfg][m.id - 1][sem_idx];
                if (c.instances == 0) continue;
                instances += c.instances;
                const std::size_t nodes[3] = {i, j, t};
                if (config.orientation == Orientation::Directional) {
                    for (int s = 0; s < 6; ++s)
                        if (c.ordered[s]) {
                            auto [u, v] = pattern::kSlotPairs[s];
                            dense[nodes[u] * n + nodes[v]] += c.ordered[s];
                        }
                } else {
                    static constexpr int kPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
                    for (int p = 0; p < 3; ++p)
                        if (c.unordered[p]) {
                            std::size_t a = nodes[kPairs[p][0]], b = nodes[kPairs[p][1]];
                            dense[a * n + b] += c.unordered[p];
                            dense[b * n + a] += c.unordered[p];
                        }
                }
            }
        }
    instrumentation::instances_materialized.fetch_add(instances);

    std::vector<CooEntry> entries;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t cidx = 0; cidx < n; ++cidx)
            if (dense[r * n + cidx] != 0)
                entries.push_back({r, cidx, static_cast<double>(dense[r * n + cidx])});
    return SparseMatrix::from_unsorted(n, std::move(entries), false);
}

struct MotifInstance {
    int motif_id = 0;
    std::vector<Edge> edges;

    bool operator<(const MotifInstance& o) const { return edges < o.edges; }
    bool operator==(const MotifInstance& o) const {
        return motif_id == o.motif_id && edges == o.edges;
    }
};

/// Materializes the instance set of one motif in canonical order. Node-induced
/// instances are reported with the triple's complete edge set.
inline std::vector<MotifInstance> enumerate_instances(const DirectedGraph& g, int motif_id,
                                                      Semantics semantics) {
    const Motif& m = motif(motif_id);
    Semantics sem = resolve_semantics(semantics, motif_id);
    const std::size_t n = g.node_count();
    const detail::AdjacencyBits adj(g);
    const PatternBits canon = pattern::canonical(m.bits);

    std::vector<MotifInstance> out;
    auto emit = [&](const std::size_t nodes[3], unsigned sub) {
        MotifInstance mi;
        mi.motif_id = motif_id;
        for (int s = 0; s < 6; ++s)
            if ((sub >> s) & 1) {
                auto [u, v] = pattern::kSlotPairs[s];
                mi.edges.emplace_back(nodes[u], nodes[v]);
            }
        std::sort(mi.edges.begin(), mi.edges.end());
        out.push_back(std::move(mi));
    };

    for (std::size_t i = 0; i + 2 < n; ++i)
        for (std::size_t j = i + 1; j + 1 < n; ++j)
            for (std::size_t t = j + 1; t < n; ++t) {
                unsigned cfg = 0;
                if (adj.has(i, j)) cfg |= 1u;
                if (adj.has(j, i)) cfg |= 2u;
                if (adj.has(i, t)) cfg |= 4u;
                if (adj.has(t, i)) cfg |= 8u;
                if (adj.has(j, t)) cfg |= 16u;
                if (adj.has(t, j)) cfg |= 32u;
                if (cfg == 0) continue;
                const std::size_t nodes[3] = {i, j, t};
                if (sem == Semantics::NodeInduced) {
                    if (pattern::connected(static_cast<PatternBits>(cfg)) &&
                        pattern::canonical(static_cast<PatternBits>(cfg)) == canon)
                        emit(nodes, cfg);
                } else {
                    for (unsigned sub = cfg;; sub = (sub - 1) & cfg) {
                        if (sub != 0 && std::popcount(sub) == m.edge_count &&
                            pattern::connected(static_cast<PatternBits>(sub)) &&
                            pattern::canonical(static_cast<PatternBits>(sub)) == canon)
                            emit(nodes, sub);
                        if (sub == 0) break;
                    }
                }
            }
    instrumentation::instances_materialized.fetch_add(out.size());
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Open-motif fast path (S4.2). Degree rules per center node, accumulated into
// both (v,u) and (u,v); edge-subset semantics, symmetric orientation. The
// bi-neighbor combinations the paper leaves unlisted were derived against the
// oracle and frozen here: a bidirectional neighbor can fill either spoke role,
// so it collects both role contributions (minus the self exclusions).
// No per-instance storage: O(|V|+|E|) work beyond the output entries.
// ---------------------------------------------------------------------------

inline SparseMatrix open_motif_adjacency_fast(const DirectedGraph& g, int motif_id) {
    if (!is_open_motif(motif_id))
        throw WrongPathError("open_motif_adjacency_fast called for closed motif M" +
                             std::to_string(motif_id));
    const std::size_t n = g.node_count();
    NeighborClassification nc = classify_neighbors(g);

    std::vector<CooEntry> acc;
    for (std::size_t v = 0; v < n; ++v) {
        const double d_in = static_cast<double>(nc.d_in(v));
        const double d_out = static_cast<double>(nc.d_out(v));
        const double d_bi = static_cast<double>(nc.d_bi(v));
        auto add = [&](std::size_t u, double c) {
            if (c > 0.0) {
                acc.push_back({v, u, c});
                acc.push_back({u, v, c});
            }
        };
        switch (motif_id) {
            case 8:
                for (std::size_t u : nc.out_only[v]) add(u, d_out - 1);
                for (std::size_t u : nc.bidirectional[v]) add(u, d_out - 1);
                break;
            case 9:
                for (std::size_t u : nc.out_only[v]) add(u, d_in);
                for (std::size_t u : nc.in_only[v]) add(u, d_out);
                for (std::size_t u : nc.bidirectional[v]) add(u, d_in + d_out - 2);
                break;
            case 10:
                for (std::size_t u : nc.in_only[v]) add(u, d_in - 1);
                for (std::size_t u : nc.bidirectional[v]) add(u, d_in - 1);
                break;
            case 11:
                for (std::size_t u : nc.out_only[v]) add(u, d_bi);
                for (std::size_t u : nc.bidirectional[v]) add(u, (d_out - 1) + (d_bi - 1));
                break;
            case 12:
                for (std::size_t u : nc.in_only[v]) add(u, d_bi);
                for (std::size_t u : nc.bidirectional[v]) add(u, (d_in - 1) + (d_bi - 1));
                break;
            case 13:
                for (std::size_t u : nc.bidirectional[v]) add(u, d_bi - 1);
                break;
        }
    }
    return SparseMatrix::from_unsorted(n, std::move(acc));
}

// ---------------------------------------------------------------------------
// Closed-motif fast path: fixed sums of masked sparse products (X*Y)oZ over
// the unidirectional mask U = A - B, its transpose and the bidirectional mask
// B = A o A^T (self-loops stripped). Term sets were derived from the catalog
// patterns and frozen after oracle matching; node-induced semantics,
// symmetric orientation.
// ---------------------------------------------------------------------------

namespace detail {

enum class Mask : std::uint8_t { U, Ut, B };

struct ClosedTerm {
    Mask x, y, z;
};

inline const std::vector<ClosedTerm>& closed_terms(int motif_id) {
    using M = Mask;
    static const std::array<std::vector<ClosedTerm>, 7> kTerms = {{
        {{M::Ut, M::Ut, M::U}, {M::U, M::U, M::Ut}},                                   // M1
        {{M::Ut, M::Ut, M::B}, {M::B, M::U, M::Ut}, {M::U, M::U, M::B},
         {M::B, M::Ut, M::U}, {M::Ut, M::B, M::U}, {M::U, M::B, M::Ut}},               // M2
        {{M::U, M::B, M::B}, {M::B, M::B, M::U}, {M::B, M::Ut, M::B},
         {M::B, M::U, M::B}, {M::B, M::B, M::Ut}, {M::Ut, M::B, M::B}},                // M3
        {{M::B, M::B, M::B}},                                                          // M4
        {{M::U, M::Ut, M::U}, {M::U, M::U, M::U}, {M::U, M::Ut, M::Ut},
         {M::Ut, M::U, M::U}, {M::Ut, M::Ut, M::Ut}, {M::Ut, M::U, M::Ut}},            // M5
        {{M::Ut, M::U, M::B}, {M::B, M::Ut, M::Ut}, {M::U, M::B, M::U}},               // M6
        {{M::U, M::Ut, M::B}, {M::B, M::U, M::U}, {M::Ut, M::B, M::Ut}},               // M7
    }};
    return kTerms[motif_id - 1];
}

inline std::size_t sorted_intersection_size(const std::vector<std::size_t>& a,
                                            const std::vector<std::size_t>& b) {
    std::size_t i = 0, j = 0, c = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) ++c, ++i, ++j;
        else if (a[i] < b[j]) ++i;
        else ++j;
    }
    return c;
}

} // namespace detail

inline SparseMatrix closed_motif_adjacency_fast(const DirectedGraph& g, int motif_id) {
    if (is_open_motif(motif_id))
        throw WrongPathError("closed_motif_adjacency_fast called for open motif M" +
                             std::to_string(motif_id));
    const std::size_t n = g.node_count();

    // adjacency rows of the three masks, plus reverse rows for column access
    std::vector<std::vector<std::size_t>> rows_u(n), rows_ut(n), rows_b(n);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& out = g.out_neighbors(v);
        for (std::size_t u : out) {
            if (u == v) continue;
            if (g.has_edge(u, v)) {
                rows_b[v].push_back(u);
            } else {
                rows_u[v].push_back(u);
            }
        }
        for (std::size_t u : g.in_neighbors(v))
            if (u != v && !g.has_edge(v, u)) rows_ut[v].push_back(u);
    }

    auto rows_of = [&](detail::Mask m) -> const std::vector<std::vector<std::size_t>>& {
        switch (m) {
            case detail::Mask::U: return rows_u;
            case detail::Mask::Ut: return rows_ut;
            default: return rows_b;
        }
    };
    auto transpose_of = [](detail::Mask m) {
        switch (m) {
            case detail::Mask::U: return detail::Mask::Ut;
            case detail::Mask::Ut: return detail::Mask::U;
            default: return detail::Mask::B;
        }
    };

    std::vector<CooEntry> acc;
    for (const detail::ClosedTerm& term : detail::closed_terms(motif_id)) {
        const auto& zr = rows_of(term.z);
        const auto& xr = rows_of(term.x);
        const auto& ycols = rows_of(transpose_of(term.y));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j : zr[i]) {
                std::size_t c = detail::sorted_intersection_size(xr[i], ycols[j]);
                if (c > 0) acc.push_back({i, j, static_cast<double>(c)});
            }
    }
    return SparseMatrix::from_unsorted(n, std::move(acc));
}

// ---------------------------------------------------------------------------
// Full census: all 13 matrices with per-motif construction metadata/timings.
// ---------------------------------------------------------------------------

struct MotifMatrixInfo {
    Semantics semantics = Semantics::EdgeSubset;
    Orientation orientation = Orientation::Symmetric;
    std::string method; // "degree-rules", "matmul" or "oracle"
    double seconds = 0.0;
};

struct MotifAdjacencySet {
    std::size_t dim = 0;
    CensusConfig config;
    std::array<SparseMatrix, 13> matrices;
    std::array<MotifMatrixInfo, 13> info;

    const SparseMatrix& matrix(int motif_id) const { return matrices.at(motif_id - 1); }
};

inline MotifAdjacencySet build_all(const DirectedGraph& g, const CensusConfig& config,
                                   unsigned threads = 1) {
    MotifAdjacencySet set;
    set.dim = g.node_count();
    set.config = config;

    auto build_one = [&](int k) {
        Semantics eff = resolve_semantics(config.semantics, k);
        bool fast_ok = config.orientation == Orientation::Symmetric &&
                       ((is_open_motif(k) && eff == Semantics::EdgeSubset) ||
                        (!is_open_motif(k) && eff == Semantics::NodeInduced));
        auto t0 = std::chrono::steady_clock::now();
        SparseMatrix m;
        std::string method;
        if (fast_ok) {
            m = is_open_motif(k) ? open_motif_adjacency_fast(g, k)
                                 : closed_motif_adjacency_fast(g, k);
            method = is_open_motif(k) ? "degree-rules" : "matmul";
        } else {
            CensusConfig oc = config;
            oc.semantics = eff;
            m = motif_adjacency_oracle(g, k, oc);
            method = "oracle";
        }
        auto t1 = std::chrono::steady_clock::now();
        set.matrices[k - 1] = std::move(m);
        set.info[k - 1] = {eff, config.orientation, method,
                           std::chrono::duration<double>(t1 - t0).count()};
    };

    if (threads <= 1) {
        for (int k = 1; k <= 13; ++k) build_one(k);
    } else {
        std::atomic<int> next{1};
        auto worker = [&] {
            for (int k = next.fetch_add(1); k <= 13; k = next.fetch_add(1)) build_one(k);
        };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < std::min(threads, 13u); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (config.verify_with_oracle && g.node_count() <= config.oracle_cap) {
        for (int k = 1; k <= 13; ++k) {
            CensusConfig oc = config;
            oc.semantics = set.info[k - 1].semantics;
            SparseMatrix want = motif_adjacency_oracle(g, k, oc);
            if (!(set.matrices[k - 1] == want)) {
                Matrix a = set.matrices[k - 1].to_dense();
                Matrix b = want.to_dense();
                for (std::size_t i = 0; i < a.rows; ++i)
                    for (std::size_t j = 0; j < a.cols; ++j)
                        if (a(i, j) != b(i, j))
                            throw CensusMismatchError(k, i, j, a(i, j), b(i, j));
                throw CensusMismatchError(k, 0, 0, 0.0, 0.0); // size mismatch
            }
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// COO text serialization:
//   #dim=N #motif=Mk #semantics=... #orientation=...
//   row<TAB>col<TAB>count
// Counts are integers in every census mode; written exactly.
// ---------------------------------------------------------------------------

inline void save_count_matrix(std::ostream& out, const SparseMatrix& m, int motif_id,
                              Semantics semantics, Orientation orientation) {
    out << "#dim=" << m.dim << " #motif=M" << motif_id << " #semantics="
        << semantics_name(semantics) << " #orientation=" << orientation_name(orientation)
        << "\n";
    out.precision(17);
    for (const CooEntry& e : m.entries) {
        out << e.row << "\t" << e.col << "\t";
        if (e.value == static_cast<double>(static_cast<long long>(e.value)))
            out << static_cast<long long>(e.value);
        else
            out << e.value;
        out << "\n";
    }
}

inline void save_count_matrix(const std::string& path, const SparseMatrix& m, int motif_id,
                              Semantics semantics, Orientation orientation) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write count matrix: " + path);
    save_count_matrix(out, m, motif_id, semantics, orientation);
}

struct LoadedCountMatrix {
    SparseMatrix matrix;
    int motif_id = 0;
    Semantics semantics = Semantics::EdgeSubset;
    Orientation orientation = Orientation::Symmetric;
};

inline LoadedCountMatrix load_count_matrix(std::istream& in, const std::string& origin = "<coo>") {
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error(origin + ": empty count matrix file");
    LoadedCountMatrix out;
    std::size_t dim = 0;
    {
        std::istringstream hs(header);
        std::string tok;
        bool have_dim = false, have_motif = false;
        while (hs >> tok) {
            if (tok.rfind("#dim=", 0) == 0) {
                dim = std::stoull(tok.substr(5));
                have_dim = true;
            } else if (tok.rfind("#motif=M", 0) == 0) {
                out.motif_id = std::stoi(tok.substr(8));
                have_motif = true;
            } else if (tok.rfind("#semantics=", 0) == 0) {
                out.semantics = semantics_from_name(tok.substr(11));
            } else if (tok.rfind("#orientation=", 0) == 0) {
                out.orientation = orientation_from_name(tok.substr(13));
            }
        }
        if (!have_dim || !have_motif)
            throw std::runtime_error(origin + ": malformed count matrix header: " + header);
    }
    std::vector<CooEntry> entries;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        CooEntry e;
        if (!(ls >> e.row >> e.col >> e.value))
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": malformed COO line");
        entries.push_back(e);
    }
    out.matrix = SparseMatrix::from_unsorted(dim, std::move(entries), false);
    return out;
}

inline LoadedCountMatrix load_count_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open count matrix: " + path);
    return load_count_matrix(in, path);
}

} // namespace mgnn::census
