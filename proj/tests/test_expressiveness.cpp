#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <numeric>
#include <set>

#include "mgnn/census.hpp"
#include "mgnn/expressiveness.hpp"
#include "mgnn/synthetic.hpp"

using namespace mgnn;

namespace {

std::size_t component_count(const DirectedGraph& g) {
    std::vector<std::size_t> parent(g.node_count());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (const auto& [u, v] : g.edges()) parent[find(u)] = find(v);
    std::set<std::size_t> roots;
    for (std::size_t v = 0; v < g.node_count(); ++v) roots.insert(find(v));
    return roots.size();
}

std::size_t triangles_at(const DirectedGraph& g, std::size_t root) {
    std::size_t count = 0;
    for (std::size_t a = 0; a < g.node_count(); ++a)
        for (std::size_t b = a + 1; b < g.node_count(); ++b) {
            if (a == root || b == root) continue;
            auto linked = [&](std::size_t x, std::size_t y) {
                return g.has_edge(x, y) || g.has_edge(y, x);
            };
            if (linked(root, a) && linked(root, b) && linked(a, b)) ++count;
        }
    return count;
}

} // namespace

TEST_CASE("lemma2 pair: closed-motif census separates the graphs") {
    GraphPair p = build_lemma2_pair();
    census::CensusConfig cfg;
    SparseMatrix a4_cycle = census::motif_adjacency_oracle(p.first, 4, cfg);
    SparseMatrix a4_tris = census::motif_adjacency_oracle(p.second, 4, cfg);
    REQUIRE(a4_cycle.nnz() == 0);
    REQUIRE(a4_tris.nnz() > 0);
    // no closed motif at all on the cycle
    for (int k = 1; k <= 7; ++k)
        REQUIRE(census::motif_adjacency_oracle(p.first, k, cfg).nnz() == 0);
}

TEST_CASE("lemma2 pair: identical 1-WL histograms, different component counts") {
    GraphPair p = build_lemma2_pair();
    WlResult r1 = wl1_refine(p.first);
    WlResult r2 = wl1_refine(p.second);
    REQUIRE(r1.rounds == r2.rounds);
    for (std::size_t round = 0; round < r1.rounds; ++round)
        REQUIRE(r1.histograms[round] == r2.histograms[round]);
    REQUIRE(component_count(p.first) == 1);
    REQUIRE(component_count(p.second) == 2);
}

TEST_CASE("fig1 pair: equal root degrees, open vs closed root neighborhood") {
    GraphPair p = build_fig1_pair();
    REQUIRE(p.first.out_neighbors(0).size() == p.second.out_neighbors(0).size());
    REQUIRE(p.first.in_neighbors(0).size() == p.second.in_neighbors(0).size());
    REQUIRE(triangles_at(p.first, 0) == 0);
    REQUIRE(triangles_at(p.second, 0) == 1);
}

TEST_CASE("fig1 pair: one-layer GCN root embeddings agree for any weights") {
    GraphPair p = build_fig1_pair();
    for (std::uint64_t seed : {11, 22, 33}) {
        GcnBaseline gcn(p.features.cols, {6}, seed);
        Matrix e1 = gcn.embed(p.first, p.features);
        Matrix e2 = gcn.embed(p.second, p.features);
        for (std::size_t c = 0; c < e1.cols; ++c)
            REQUIRE(e1(0, c) == Catch::Approx(e2(0, c)).margin(1e-9));
    }
}

TEST_CASE("wl1: uniform cycle stabilizes to one color after one round") {
    DirectedGraph cyc = [&] {
        std::vector<Edge> e;
        for (std::size_t i = 0; i < 5; ++i) {
            e.emplace_back(i, (i + 1) % 5);
            e.emplace_back((i + 1) % 5, i);
        }
        return DirectedGraph(5, e);
    }();
    WlResult r = wl1_refine(cyc);
    REQUIRE(r.stable);
    REQUIRE(r.rounds == 1);
    REQUIRE(std::set<int>(r.colors.begin(), r.colors.end()).size() == 1);
}

TEST_CASE("wl1: 3-path endpoints share a color distinct from the center") {
    DirectedGraph path(3, {{0, 1}, {1, 0}, {1, 2}, {2, 1}});
    WlResult r = wl1_refine(path);
    REQUIRE(r.colors[0] == r.colors[2]);
    REQUIRE(r.colors[0] != r.colors[1]);
}

TEST_CASE("wl1: isomorphic random graphs keep identical histograms") {
    DirectedGraph g = random_digraph(12, 0.25, 5);
    std::vector<std::size_t> perm = {7, 3, 11, 0, 9, 5, 1, 10, 2, 8, 4, 6};
    DirectedGraph pg = g.permuted(perm);
    WlResult r1 = wl1_refine(g);
    WlResult r2 = wl1_refine(pg);
    REQUIRE(r1.rounds == r2.rounds);
    for (std::size_t round = 0; round < r1.rounds; ++round)
        REQUIRE(r1.histograms[round] == r2.histograms[round]);
}

TEST_CASE("wl1: color classes never shrink between rounds") {
    DirectedGraph g = random_digraph(15, 0.2, 8);
    WlResult r = wl1_refine(g);
    for (std::size_t round = 1; round < r.histograms.size(); ++round)
        REQUIRE(r.histograms[round].size() >= r.histograms[round - 1].size());
}

TEST_CASE("distinguish: gcn cannot separate the lemma2 pair, mgnn can") {
    GraphPair p = build_lemma2_pair();
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    DistinguishReport gcn = distinguish(ExModel::Gcn, p, seeds, 1e-9);
    REQUIRE(gcn.verdict == Verdict::Indistinguishable);
    for (double d : gcn.distances) REQUIRE(d <= 1e-9);
    DistinguishReport mgnn = distinguish(ExModel::Mgnn, p, seeds, 1e-6);
    REQUIRE(mgnn.verdict == Verdict::Distinguishable);
}

TEST_CASE("distinguish: fig1 pair matches the theory table too") {
    GraphPair p = build_fig1_pair();
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    REQUIRE(distinguish(ExModel::Gcn, p, seeds, 1e-9).verdict == Verdict::Indistinguishable);
    REQUIRE(distinguish(ExModel::Mgnn, p, seeds, 1e-6).verdict == Verdict::Distinguishable);
}

TEST_CASE("distinguish: a graph against itself is always indistinguishable") {
    GraphPair p = build_lemma2_pair();
    p.second = p.first;
    p.provenance = "custom";
    REQUIRE(distinguish(ExModel::Gcn, p, {1, 2, 3}, 1e-9).verdict ==
            Verdict::Indistinguishable);
    REQUIRE(distinguish(ExModel::Mgnn, p, {1, 2, 3}, 1e-6).verdict ==
            Verdict::Indistinguishable);
}

TEST_CASE("distinguish report serializes the envelope") {
    GraphPair p = build_lemma2_pair();
    DistinguishReport rep = distinguish(ExModel::Gcn, p, {1, 2}, 1e-9);
    auto j = rep.to_json();
    REQUIRE(j["model"] == "gcn");
    REQUIRE(j["pair"] == "lemma2");
    REQUIRE(j["verdict"] == "indistinguishable");
    REQUIRE(j["distances"].size() == 2);
}
