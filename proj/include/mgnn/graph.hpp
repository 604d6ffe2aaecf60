#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mgnn/matrix.hpp"
#include "mgnn/sparse.hpp"

namespace mgnn {

using Edge = std::pair<std::size_t, std::size_t>;

enum class LoadMode { Directed, UndirectedAsBidirected };

/// Immutable directed graph: dense 0-based node ids, sorted unique edge list,
/// self-loops only when allow_self_loops is set.
class DirectedGraph {
public:
    DirectedGraph() = default;

    DirectedGraph(std::size_t node_count, std::vector<Edge> edges, bool allow_self_loops = false)
        : node_count_(node_count), allow_self_loops_(allow_self_loops) {
        std::sort(edges.begin(), edges.end());
        for (std::size_t i = 0; i < edges.size(); ++i) {
            const auto& [u, v] = edges[i];
            if (u >= node_count_ || v >= node_count_)
                throw std::invalid_argument("edge endpoint out of range: (" + std::to_string(u) +
                                            "," + std::to_string(v) + ")");
            if (u == v && !allow_self_loops_)
                throw std::invalid_argument("self-loop (" + std::to_string(u) +
                                            ") without allow_self_loops");
            if (i > 0 && edges[i] == edges[i - 1])
                throw std::invalid_argument("duplicate directed edge (" + std::to_string(u) + "," +
                                            std::to_string(v) + ")");
        }
        edges_ = std::move(edges);
        build_adjacency();
    }

    std::size_t node_count() const { return node_count_; }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    bool allow_self_loops() const { return allow_self_loops_; }

    const std::vector<std::size_t>& out_neighbors(std::size_t v) const { return out_[v]; }
    const std::vector<std::size_t>& in_neighbors(std::size_t v) const { return in_[v]; }

    bool has_edge(std::size_t u, std::size_t v) const {
        const auto& nb = out_[u];
        return std::binary_search(nb.begin(), nb.end(), v);
    }

    /// Binary adjacency as a sparse matrix; self-loops included by default
    /// (they participate in normalization, never in motif instances).
    SparseMatrix adjacency(bool include_self_loops = true) const {
        std::vector<CooEntry> ent;
        ent.reserve(edges_.size());
        for (const auto& [u, v] : edges_)
            if (include_self_loops || u != v) ent.push_back({u, v, 1.0});
        return SparseMatrix::from_unsorted(node_count_, std::move(ent));
    }

    /// Relabeled copy: node i becomes perm[i].
    DirectedGraph permuted(const std::vector<std::size_t>& perm) const {
        std::vector<Edge> es;
        es.reserve(edges_.size());
        for (const auto& [u, v] : edges_) es.emplace_back(perm[u], perm[v]);
        return DirectedGraph(node_count_, std::move(es), allow_self_loops_);
    }

private:
    void build_adjacency() {
        out_.assign(node_count_, {});
        in_.assign(node_count_, {});
        for (const auto& [u, v] : edges_) {
            out_[u].push_back(v);
            in_[v].push_back(u);
        }
        for (auto& nb : in_) std::sort(nb.begin(), nb.end());
        // out_ is already sorted because edges_ is sorted by (src, dst)
    }

    std::size_t node_count_ = 0;
    std::vector<Edge> edges_;
    bool allow_self_loops_ = false;
    std::vector<std::vector<std::size_t>> out_;
    std::vector<std::vector<std::size_t>> in_;
};

namespace detail {

inline bool parse_index(const std::string& tok, std::size_t& out) {
    if (tok.empty()) return false;
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
        return false;
    }
    if (pos != tok.size()) return false;
    out = static_cast<std::size_t>(v);
    return true;
}

} // namespace detail

/// Parses "src<TAB>dst" lines (any run of blanks accepted as separator) with
/// an optional first line "#nodes=N". In bidirected mode every input line is
/// an undirected edge and yields both directions; a line repeating an already
/// seen (un)directed edge is an error, as is a self-loop unless allowed.
inline DirectedGraph load_edge_list(const std::string& path, LoadMode mode,
                                    bool allow_self_loops = false) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list: " + path);

    std::string line;
    std::size_t line_no = 0;
    std::size_t header_nodes = 0;
    bool has_header = false;
    std::set<Edge> seen;
    std::vector<Edge> edges;
    std::size_t max_id = 0;
    bool any_node = false;

    auto fail = [&](const std::string& msg) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("#nodes=", 0) == 0) {
            if (!detail::parse_index(line.substr(7), header_nodes))
                fail("malformed #nodes header");
            has_header = true;
            continue;
        }
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b, extra;
        if (!(ss >> a >> b) || (ss >> extra))
            fail("expected 'src<TAB>dst'");
        std::size_t u = 0, v = 0;
        if (!detail::parse_index(a, u) || !detail::parse_index(b, v))
            fail("node ids must be nonnegative integers (got '" + a + "', '" + b + "')");
        if (u == v && !allow_self_loops) fail("self-loop not allowed");
        any_node = true;
        max_id = std::max({max_id, u, v});
        if (mode == LoadMode::UndirectedAsBidirected) {
            Edge canon{std::min(u, v), std::max(u, v)};
            if (!seen.insert(canon).second) fail("duplicate undirected edge");
            edges.emplace_back(u, v);
            if (u != v) edges.emplace_back(v, u);
        } else {
            if (!seen.insert({u, v}).second) fail("duplicate directed edge");
            edges.emplace_back(u, v);
        }
    }
    std::size_t n = has_header ? header_nodes : (any_node ? max_id + 1 : 0);
    if (any_node && max_id >= n)
        throw std::runtime_error(path + ": node id " + std::to_string(max_id) +
                                 " exceeds #nodes=" + std::to_string(n));
    return DirectedGraph(n, std::move(edges), allow_self_loops);
}

inline void save_edge_list(const DirectedGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write edge list: " + path);
    out << "#nodes=" << g.node_count() << "\n";
    for (const auto& [u, v] : g.edges()) out << u << "\t" << v << "\n";
}

/// Rewrites an edge list with arbitrary string ids into dense 0-based ids,
/// emitting "token<TAB>id" map lines (ids assigned in lexicographic token
/// order). Returns the number of distinct nodes.
inline std::size_t remap_edge_list(const std::string& in_path, const std::string& out_path,
                                   const std::string& map_path) {
    std::ifstream in(in_path);
    if (!in) throw std::runtime_error("cannot open edge list: " + in_path);
    std::vector<std::pair<std::string, std::string>> raw;
    std::map<std::string, std::size_t> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (line_no == 1 && line.rfind("#nodes=", 0) == 0)) continue;
        std::istringstream ss(line);
        std::string a, b, extra;
        if (!(ss >> a >> b) || (ss >> extra))
            throw std::runtime_error(in_path + ":" + std::to_string(line_no) +
                                     ": expected 'src<TAB>dst'");
        ids.emplace(a, 0);
        ids.emplace(b, 0);
        raw.emplace_back(std::move(a), std::move(b));
    }
    std::size_t next = 0;
    for (auto& [tok, id] : ids) id = next++; // std::map iterates in sorted order
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write edge list: " + out_path);
    out << "#nodes=" << ids.size() << "\n";
    for (const auto& [a, b] : raw) out << ids.at(a) << "\t" << ids.at(b) << "\n";
    std::ofstream mp(map_path);
    if (!mp) throw std::runtime_error("cannot write id map: " + map_path);
    for (const auto& [tok, id] : ids) mp << tok << "\t" << id << "\n";
    return ids.size();
}

/// 5-dimensional local degree profile per node: own degree plus min/max/mean/
/// population-std of neighbor degrees, in the underlying undirected simple
/// graph (self-loops ignored). Isolated nodes get all zeros.
inline Matrix degree_stat_features(const DirectedGraph& g) {
    const std::size_t n = g.node_count();
    std::vector<std::vector<std::size_t>> und(n);
    for (std::size_t v = 0; v < n; ++v) {
        std::vector<std::size_t> nb;
        for (std::size_t u : g.out_neighbors(v))
            if (u != v) nb.push_back(u);
        for (std::size_t u : g.in_neighbors(v))
            if (u != v) nb.push_back(u);
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        und[v] = std::move(nb);
    }
    Matrix f(n, 5);
    for (std::size_t v = 0; v < n; ++v) {
        double deg = static_cast<double>(und[v].size());
        f(v, 0) = deg;
        if (und[v].empty()) continue;
        double mn = 1e300, mx = 0.0, sum = 0.0, sumsq = 0.0;
        for (std::size_t u : und[v]) {
            double d = static_cast<double>(und[u].size());
            mn = std::min(mn, d);
            mx = std::max(mx, d);
            sum += d;
            sumsq += d * d;
        }
        double mean = sum / deg;
        double var = std::max(0.0, sumsq / deg - mean * mean);
        f(v, 1) = mn;
        f(v, 2) = mx;
        f(v, 3) = mean;
        f(v, 4) = std::sqrt(var);
    }
    return f;
}

/// CSV with one row per node/graph, comma separated, no header.
inline Matrix load_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": bad number '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": ragged row width");
        rows.push_back(std::move(row));
    }
    Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
    if (!m.all_finite()) throw std::runtime_error(path + ": non-finite feature value");
    return m;
}

enum class LabelKind { Node, Graph };

struct LabelSet {
    LabelKind kind = LabelKind::Node;
    std::vector<int> labels;
    int n_classes = 0;

    void validate() const {
        if (n_classes < 2) throw std::invalid_argument("LabelSet: n_classes must be >= 2");
        for (int l : labels)
            if (l < 0 || l >= n_classes)
                throw std::invalid_argument("LabelSet: label " + std::to_string(l) +
                                            " outside [0," + std::to_string(n_classes) + ")");
    }
};

inline LabelSet load_labels_csv(const std::string& path, LabelKind kind) {
    Matrix m = load_csv_matrix(path);
    if (m.cols != 1) throw std::runtime_error(path + ": labels csv must have one column");
    LabelSet ls;
    ls.kind = kind;
    ls.labels.reserve(m.rows);
    int mx = 0;
    for (std::size_t i = 0; i < m.rows; ++i) {
        double v = m(i, 0);
        int l = static_cast<int>(v);
        if (static_cast<double>(l) != v || l < 0)
            throw std::runtime_error(path + ": label row " + std::to_string(i + 1) +
                                     " is not a nonnegative integer");
        ls.labels.push_back(l);
        mx = std::max(mx, l);
    }
    ls.n_classes = mx + 1;
    return ls;
}

struct SplitSpec {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;

    void validate(std::size_t item_count) const {
        std::set<std::size_t> seen;
        for (const auto* part : {&train, &val, &test})
            for (std::size_t i : *part) {
                if (i >= item_count)
                    throw std::invalid_argument("split index " + std::to_string(i) +
                                                " out of range");
                if (!seen.insert(i).second)
                    throw std::invalid_argument("split sets are not disjoint at index " +
                                                std::to_string(i));
            }
    }
};

inline SplitSpec load_splits_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open splits: " + path);
    nlohmann::json j;
    in >> j;
    SplitSpec s;
    for (auto [name, dst] :
         {std::pair{"train", &s.train}, std::pair{"val", &s.val}, std::pair{"test", &s.test}}) {
        if (!j.contains(name))
            throw std::runtime_error(path + ": missing '" + std::string(name) + "' array");
        for (const auto& v : j.at(name)) dst->push_back(v.get<std::size_t>());
    }
    return s;
}

/// One or more graphs with aligned features, labels and a split.
struct DatasetBundle {
    std::vector<DirectedGraph> graphs;
    std::vector<Matrix> features;
    LabelSet labels;
    SplitSpec split;

    void validate() const {
        if (graphs.size() != features.size())
            throw std::invalid_argument("DatasetBundle: one feature matrix per graph required");
        for (std::size_t i = 0; i < graphs.size(); ++i)
            if (features[i].rows != graphs[i].node_count())
                throw std::invalid_argument("DatasetBundle: feature rows != node count in graph " +
                                            std::to_string(i));
        labels.validate();
        std::size_t items =
            labels.kind == LabelKind::Node ? graphs.at(0).node_count() : graphs.size();
        if (labels.labels.size() != items)
            throw std::invalid_argument("DatasetBundle: label count mismatch");
        split.validate(items);
    }
};

} // namespace mgnn
