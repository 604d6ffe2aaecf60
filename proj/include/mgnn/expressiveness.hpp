#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mgnn/graph.hpp"
#include "mgnn/matrix.hpp"
#include "mgnn/model.hpp"
#include "mgnn/rng.hpp"

namespace mgnn {

/// Two graphs with identical uniform features, built to probe what a model
/// can tell apart.
struct GraphPair {
    DirectedGraph first;
    DirectedGraph second;
    Matrix features; // shared by both graphs (equal node counts)
    std::string provenance;
};

namespace detail {

inline DirectedGraph bidirected_cycle(std::size_t n, bool self_loops) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = (i + 1) % n;
        edges.emplace_back(i, j);
        edges.emplace_back(j, i);
        if (self_loops) edges.emplace_back(i, i);
    }
    return DirectedGraph(n, std::move(edges), self_loops);
}

inline DirectedGraph two_bidirected_triangles(bool self_loops) {
    std::vector<Edge> edges;
    for (std::size_t base : {std::size_t{0}, std::size_t{3}})
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < 3; ++b)
                if (a != b) edges.emplace_back(base + a, base + b);
    if (self_loops)
        for (std::size_t i = 0; i < 6; ++i) edges.emplace_back(i, i);
    return DirectedGraph(6, std::move(edges), self_loops);
}

} // namespace detail

/// Lemma-2 pair: a bidirected 6-cycle vs two disjoint bidirected triangles,
/// self-loops everywhere, constant features. Every node of the cycle sits
/// only in open motifs; every triangle node also sits in closed ones. Both
/// graphs are 2-regular, so 1-WL with uniform colors never separates them.
inline GraphPair build_lemma2_pair() {
    GraphPair p;
    p.first = detail::bidirected_cycle(6, true);
    p.second = detail::two_bidirected_triangles(true);
    p.features = Matrix(6, 1, 1.0);
    p.provenance = "lemma2";
    return p;
}

/// Fig.-1 style pair: the same topologies without self-loops. The rooted
/// neighborhoods of node 0 differ only by the edge between its two
/// neighbors (open wedge vs closed triangle) while the root degrees match.
inline GraphPair build_fig1_pair() {
    GraphPair p;
    p.first = detail::bidirected_cycle(6, false);
    p.second = detail::two_bidirected_triangles(false);
    p.features = Matrix(6, 1, 1.0);
    p.provenance = "fig1";
    return p;
}

// ---------------------------------------------------------------------------
// 1-WL color refinement. Color ids are assigned by the sorted rank of the
// round's signatures, so two separately refined graphs are comparable: their
// histograms coincide exactly as long as their signature multisets coincide.
// ---------------------------------------------------------------------------

struct WlResult {
    std::vector<int> colors;
    std::vector<std::vector<std::size_t>> histograms; // per round: count per color id
    std::size_t rounds = 0;
    bool stable = false;
};

inline WlResult wl1_refine(const DirectedGraph& g, std::size_t max_rounds = 64,
                           const std::vector<int>* initial_colors = nullptr) {
    const std::size_t n = g.node_count();
    WlResult res;
    res.colors.assign(n, 0);
    if (initial_colors) {
        if (initial_colors->size() != n)
            throw std::invalid_argument("wl1_refine: initial color count mismatch");
        res.colors = *initial_colors;
    }
    std::size_t prev_classes =
        std::set<int>(res.colors.begin(), res.colors.end()).size();

    for (std::size_t round = 0; round < max_rounds; ++round) {
        std::vector<std::string> sig(n);
        for (std::size_t v = 0; v < n; ++v) {
            std::vector<int> in, out;
            for (std::size_t u : g.in_neighbors(v)) in.push_back(res.colors[u]);
            for (std::size_t u : g.out_neighbors(v)) out.push_back(res.colors[u]);
            std::sort(in.begin(), in.end());
            std::sort(out.begin(), out.end());
            std::ostringstream ss;
            ss << res.colors[v] << "|";
            for (int c : in) ss << c << ",";
            ss << "|";
            for (int c : out) ss << c << ",";
            sig[v] = ss.str();
        }
        std::vector<std::string> uniq = sig;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        std::map<std::string, int> rank;
        for (std::size_t i = 0; i < uniq.size(); ++i) rank[uniq[i]] = static_cast<int>(i);
        for (std::size_t v = 0; v < n; ++v) res.colors[v] = rank[sig[v]];

        std::vector<std::size_t> hist(uniq.size(), 0);
        for (int c : res.colors) hist[static_cast<std::size_t>(c)]++;
        res.histograms.push_back(hist);
        res.rounds = round + 1;
        if (uniq.size() == prev_classes) { // refinement only ever splits classes
            res.stable = true;
            break;
        }
        prev_classes = uniq.size();
    }
    return res;
}

// ---------------------------------------------------------------------------
// Distinguishability tester: sorted node-embedding multisets of both graphs
// under randomly initialized weights, compared in L-infinity.
// ---------------------------------------------------------------------------

enum class ExModel { Gcn, Mgnn };

enum class Verdict { Distinguishable, Indistinguishable, Inconclusive };

struct DistinguishReport {
    std::string model;
    std::string pair;
    double tol = 0.0;
    std::vector<double> distances; // one per seed
    double max_distance = 0.0;
    Verdict verdict = Verdict::Inconclusive;

    std::string verdict_name() const {
        switch (verdict) {
            case Verdict::Distinguishable: return "distinguishable";
            case Verdict::Indistinguishable: return "indistinguishable";
            default: return "inconclusive";
        }
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"model", model},
                              {"pair", pair},
                              {"tol", tol},
                              {"distances", distances},
                              {"max_distance", max_distance},
                              {"verdict", verdict_name()}};
    }
};

namespace detail {

inline std::vector<std::vector<double>> sorted_rows(const Matrix& m) {
    std::vector<std::vector<double>> rows(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        rows[i].assign(m.data.begin() + static_cast<std::ptrdiff_t>(i * m.cols),
                       m.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * m.cols));
    std::sort(rows.begin(), rows.end());
    return rows;
}

/// L-infinity distance between sorted embedding multisets.
inline double multiset_distance(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument("multiset_distance: shape mismatch");
    auto ra = sorted_rows(a), rb = sorted_rows(b);
    double d = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i)
        for (std::size_t j = 0; j < ra[i].size(); ++j)
            d = std::max(d, std::abs(ra[i][j] - rb[i][j]));
    return d;
}

inline double max_abs(const Matrix& m) {
    double v = 0.0;
    for (double x : m.data) v = std::max(v, std::abs(x));
    return v;
}

inline Matrix mgnn_embed(const GraphPair& pair, bool second, std::uint64_t seed) {
    const DirectedGraph& g = second ? pair.second : pair.first;
    MotifMatrixStore store(g);
    PreparedGraph prep = prepare_graph(store, VariantSpec{});
    MgnnModelConfig cfg;
    cfg.task = Task::LinkPrediction; // headless: embeddings only
    cfg.input_dim = pair.features.cols;
    cfg.d_gcn = {8};
    cfg.d_prime = 4;
    MgnnModel model(cfg, VariantSpec{}, seed);
    Tape tape;
    auto bound = model.params().bind(tape);
    return model.embed(tape, bound, prep, tape.constant(pair.features)).to_matrix();
}

} // namespace detail

/// Untrained-model separation test. Indistinguishable iff every seed stays
/// within tol; distinguishable iff at least 4 of 5 (80%) of the seeds exceed
/// it. Degenerate all-zero embeddings trigger a seeded re-draw.
inline DistinguishReport distinguish(ExModel model, const GraphPair& pair,
                                     const std::vector<std::uint64_t>& seeds, double tol) {
    DistinguishReport rep;
    rep.model = model == ExModel::Gcn ? "gcn" : "mgnn";
    rep.pair = pair.provenance;
    rep.tol = tol;
    for (std::uint64_t seed : seeds) {
        std::uint64_t s = seed;
        double dist = 0.0;
        for (int attempt = 0; attempt < 8; ++attempt) {
            Matrix e1, e2;
            if (model == ExModel::Gcn) {
                GcnBaseline gcn(pair.features.cols, {8, 8}, s);
                e1 = gcn.embed(pair.first, pair.features);
                e2 = gcn.embed(pair.second, pair.features);
            } else {
                e1 = detail::mgnn_embed(pair, false, s);
                e2 = detail::mgnn_embed(pair, true, s);
            }
            if (std::max(detail::max_abs(e1), detail::max_abs(e2)) < 1e-12) {
                s = derive_seed(s, "redraw"); // degenerate draw
                continue;
            }
            dist = detail::multiset_distance(e1, e2);
            break;
        }
        rep.distances.push_back(dist);
        rep.max_distance = std::max(rep.max_distance, dist);
    }
    std::size_t over = 0;
    for (double d : rep.distances)
        if (d > tol) ++over;
    if (over == 0)
        rep.verdict = Verdict::Indistinguishable;
    else if (5 * over >= 4 * rep.distances.size())
        rep.verdict = Verdict::Distinguishable;
    else
        rep.verdict = Verdict::Inconclusive;
    return rep;
}

} // namespace mgnn
