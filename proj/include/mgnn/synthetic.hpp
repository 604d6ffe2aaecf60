#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "mgnn/graph.hpp"
#include "mgnn/matrix.hpp"
#include "mgnn/rng.hpp"

namespace mgnn {

/// Erdos-Renyi digraph: every ordered non-self pair kept with edge_prob.
inline DirectedGraph random_digraph(std::size_t n, double edge_prob, std::uint64_t seed) {
    auto rng = make_rng(seed, "er-digraph");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Edge> edges;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            if (a != b && u(rng) < edge_prob) edges.emplace_back(a, b);
    return DirectedGraph(n, std::move(edges));
}

/// Random digraph with exactly round(n * avg_out_degree) distinct directed
/// edges.
inline DirectedGraph random_digraph_avg_degree(std::size_t n, double avg_out_degree,
                                               std::uint64_t seed) {
    const std::size_t m = static_cast<std::size_t>(avg_out_degree * static_cast<double>(n));
    if (m > n * (n - 1)) throw std::invalid_argument("average degree too high");
    auto rng = make_rng(seed, "deg-digraph");
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::set<Edge> edges;
    while (edges.size() < m) {
        std::size_t a = pick(rng), b = pick(rng);
        if (a != b) edges.insert({a, b});
    }
    return DirectedGraph(n, {edges.begin(), edges.end()});
}

/// Bidirected graph in which every node has at least two bidirectional
/// neighbors (a ring plus random chords), the premise of the Lemma-1
/// emulation construction.
inline DirectedGraph random_bidirected_min_bidegree2(std::size_t n, double extra_prob,
                                                     std::uint64_t seed) {
    if (n < 3) throw std::invalid_argument("need at least 3 nodes");
    auto rng = make_rng(seed, "bidirected");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::set<std::pair<std::size_t, std::size_t>> und;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = (i + 1) % n;
        und.insert({std::min(i, j), std::max(i, j)});
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (u(rng) < extra_prob) und.insert({a, b});
    std::vector<Edge> edges;
    for (const auto& [a, b] : und) {
        edges.emplace_back(a, b);
        edges.emplace_back(b, a);
    }
    return DirectedGraph(n, std::move(edges));
}

/// The planted-triangle benchmark: a disjoint mixture of bidirected 6-cycles
/// and pairs of bidirected triangles, constant features, node label = member
/// of a triangle. Every node is 2-regular with identical features, so the
/// classes are 1-WL-indistinguishable; only closed-motif structure separates
/// them.
struct PlantedDataset {
    DirectedGraph graph;
    Matrix features; // constant single column
    LabelSet labels;
    SplitSpec split; // stratified 60/20/20
};

inline PlantedDataset make_planted_triangle_dataset(std::size_t components = 40,
                                                    std::uint64_t seed = 1) {
    if (components < 2) throw std::invalid_argument("need at least 2 components");
    PlantedDataset ds;
    std::vector<Edge> edges;
    std::vector<int> labels;
    std::size_t base = 0;
    for (std::size_t c = 0; c < components; ++c) {
        bool triangles = c % 2 == 1; // alternate cycle / triangle-pair components
        if (triangles) {
            for (std::size_t off : {std::size_t{0}, std::size_t{3}})
                for (std::size_t a = 0; a < 3; ++a)
                    for (std::size_t b = 0; b < 3; ++b)
                        if (a != b) edges.emplace_back(base + off + a, base + off + b);
        } else {
            for (std::size_t i = 0; i < 6; ++i) {
                std::size_t j = (i + 1) % 6;
                edges.emplace_back(base + i, base + j);
                edges.emplace_back(base + j, base + i);
            }
        }
        for (int i = 0; i < 6; ++i) labels.push_back(triangles ? 1 : 0);
        base += 6;
    }
    ds.graph = DirectedGraph(base, std::move(edges));
    ds.features = Matrix(base, 1, 1.0);
    ds.labels = LabelSet{LabelKind::Node, std::move(labels), 2};

    // stratified 60/20/20 split
    auto rng = make_rng(seed, "planted-split");
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.labels.labels.size(); ++i)
            if (ds.labels.labels[i] == cls) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::size_t n_test = idx.size() / 5;
        std::size_t n_val = idx.size() / 5;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (i < n_test) ds.split.test.push_back(idx[i]);
            else if (i < n_test + n_val) ds.split.val.push_back(idx[i]);
            else ds.split.train.push_back(idx[i]);
        }
    }
    std::sort(ds.split.train.begin(), ds.split.train.end());
    std::sort(ds.split.val.begin(), ds.split.val.end());
    std::sort(ds.split.test.begin(), ds.split.test.end());
    return ds;
}

} // namespace mgnn
