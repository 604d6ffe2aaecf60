#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mgnn/graph.hpp"
#include "mgnn/kvconfig.hpp"
#include "mgnn/model.hpp"
#include "mgnn/rng.hpp"
#include "mgnn/tensor.hpp"

namespace mgnn {

struct TrainConfig {
    double learning_rate = 0.011;
    std::size_t max_epochs = 3000;
    std::uint64_t seed = 1;
    std::size_t patience = 100; // early stop on the validation metric
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0; // off by default, exposed as a knob
    double dropout = 0.0;      // off by default, exposed as a knob

    static TrainConfig from_kv(const KvConfig& kv) {
        TrainConfig c;
        c.learning_rate = kv_get_double(kv, "lr", c.learning_rate);
        c.max_epochs = static_cast<std::size_t>(kv_get_long(kv, "max_epochs", 3000));
        c.seed = static_cast<std::uint64_t>(kv_get_long(kv, "seed", 1));
        c.patience = static_cast<std::size_t>(kv_get_long(kv, "patience", 100));
        c.weight_decay = kv_get_double(kv, "weight_decay", 0.0);
        c.dropout = kv_get_double(kv, "dropout", 0.0);
        return c;
    }

    void validate() const {
        if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
        if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// Adam with bias correction.
// ---------------------------------------------------------------------------

struct AdamState {
    std::vector<Matrix> m, v;
    std::size_t t = 0;
};

inline void adam_step(ParameterStore& params, AdamState& state, const TrainConfig& cfg) {
    if (state.m.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Matrix& val = params.at(i).value;
            state.m.emplace_back(val.rows, val.cols, 0.0);
            state.v.emplace_back(val.rows, val.cols, 0.0);
        }
    }
    state.t++;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = params.at(i);
        if (p.grad.data.size() != p.value.data.size())
            throw std::invalid_argument("adam_step: missing gradient for " + p.name);
        for (std::size_t j = 0; j < p.value.data.size(); ++j) {
            double g = p.grad.data[j];
            if (!std::isfinite(g))
                throw std::runtime_error("adam_step: non-finite gradient in " + p.name);
            if (cfg.weight_decay != 0.0) g += cfg.weight_decay * p.value.data[j];
            double& m = state.m[i].data[j];
            double& v = state.v[i].data[j];
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            p.value.data[j] -= cfg.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + cfg.epsilon);
        }
    }
}

// ---------------------------------------------------------------------------
// Losses and metrics.
// ---------------------------------------------------------------------------

/// Eq. (12): -sum over training nodes of log p[i, label_i].
inline Tensor cross_entropy_loss(const Tensor& probs, const std::vector<int>& labels,
                                 const std::vector<std::size_t>& idx) {
    if (idx.empty()) throw std::invalid_argument("cross_entropy_loss: empty training set");
    std::vector<int> cls;
    cls.reserve(idx.size());
    for (std::size_t i : idx) cls.push_back(labels.at(i));
    return ops::gather_nll(probs, idx, cls);
}

/// -sum [y log s + (1-y) log(1-s)] over an n x 1 score column.
inline Tensor binary_cross_entropy(const Tensor& scores, const std::vector<double>& targets) {
    if (scores.cols() != 1 || scores.rows() != targets.size())
        throw std::invalid_argument("binary_cross_entropy: scores must be n x 1 matching targets");
    Tape& tp = *scores.tape();
    Matrix y(targets.size(), 1), ny(targets.size(), 1);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        y(i, 0) = targets[i];
        ny(i, 0) = 1.0 - targets[i];
    }
    Tensor pos = ops::mul(tp.constant(y), ops::log_t(scores));
    Tensor neg = ops::mul(tp.constant(ny), ops::log_t(ops::affine(scores, -1.0, 1.0)));
    return ops::scale(ops::sum_all(ops::add(pos, neg)), -1.0);
}

/// Same loss computed from pre-sigmoid logits: sum [softplus(z) - y z].
/// Stays finite for any finite logit, unlike log(sigmoid(z)) once the
/// sigmoid saturates.
inline Tensor binary_cross_entropy_with_logits(const Tensor& logits,
                                               const std::vector<double>& targets) {
    if (logits.cols() != 1 || logits.rows() != targets.size())
        throw std::invalid_argument(
            "binary_cross_entropy_with_logits: logits must be n x 1 matching targets");
    Tape& tp = *logits.tape();
    Matrix y(targets.size(), 1);
    for (std::size_t i = 0; i < targets.size(); ++i) y(i, 0) = targets[i];
    return ops::sum_all(ops::sub(ops::softplus(logits), ops::mul(tp.constant(y), logits)));
}

/// Argmax class per row (ties broken by lowest index) vs labels over idx.
inline double accuracy(const Matrix& probs, const std::vector<int>& labels,
                       const std::vector<std::size_t>& idx) {
    if (idx.empty()) throw std::invalid_argument("accuracy: empty split");
    std::size_t hits = 0;
    for (std::size_t i : idx) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < probs.cols; ++j)
            if (probs(i, j) > probs(i, best)) best = j;
        if (static_cast<int>(best) == labels.at(i)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(idx.size());
}

/// Rank-based AUROC with 0.5 credit for ties.
inline double auroc(const std::vector<double>& scores, const std::vector<int>& positives) {
    if (scores.size() != positives.size())
        throw std::invalid_argument("auroc: scores/labels size mismatch");
    std::size_t p = 0, n = 0;
    for (int f : positives) (f ? p : n)++;
    if (p == 0 || n == 0) throw std::invalid_argument("auroc: needs both classes");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // average ranks over tie groups
    std::vector<double> rank(scores.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
        i = j + 1;
    }
    double pos_rank_sum = 0.0;
    for (std::size_t t = 0; t < scores.size(); ++t)
        if (positives[t]) pos_rank_sum += rank[t];
    double pd = static_cast<double>(p), nd = static_cast<double>(n);
    return (pos_rank_sum - pd * (pd + 1.0) / 2.0) / (pd * nd);
}

// ---------------------------------------------------------------------------
// Edge splits and negative sampling for link prediction.
// ---------------------------------------------------------------------------

/// n uniform distinct ordered non-self-loop non-edges, deterministic per seed.
inline std::vector<Edge> negative_sample(const DirectedGraph& g, std::size_t n,
                                         std::uint64_t seed) {
    const std::size_t nodes = g.node_count();
    std::size_t loops = 0;
    for (const auto& [u, v] : g.edges())
        if (u == v) ++loops;
    const std::size_t non_edges =
        nodes * (nodes - 1) - (g.edge_count() - loops);
    if (n > non_edges)
        throw std::invalid_argument("negative_sample: requested " + std::to_string(n) +
                                    " but only " + std::to_string(non_edges) + " non-edges exist");
    auto rng = make_rng(seed, "negative-sample");
    std::set<Edge> out;
    if (n * 2 > non_edges) {
        // dense case: enumerate and draw without replacement
        std::vector<Edge> all;
        all.reserve(non_edges);
        for (std::size_t u = 0; u < nodes; ++u)
            for (std::size_t v = 0; v < nodes; ++v)
                if (u != v && !g.has_edge(u, v)) all.emplace_back(u, v);
        for (std::size_t k = 0; k < n; ++k) {
            std::uniform_int_distribution<std::size_t> dist(0, all.size() - 1);
            std::size_t j = dist(rng);
            out.insert(all[j]);
            all.erase(all.begin() + static_cast<std::ptrdiff_t>(j));
        }
    } else {
        std::uniform_int_distribution<std::size_t> dist(0, nodes - 1);
        while (out.size() < n) {
            std::size_t u = dist(rng), v = dist(rng);
            if (u == v || g.has_edge(u, v)) continue;
            out.insert({u, v});
        }
    }
    return {out.begin(), out.end()};
}

struct EdgeSplit {
    std::vector<Edge> train, val, test;
};

/// Disjoint partition of the edge list (S6.3.2's 85/5/10 protocol);
/// deterministic per seed. Ratios must sum to 1.
inline EdgeSplit edge_split(const DirectedGraph& g, double train_r, double val_r, double test_r,
                            std::uint64_t seed) {
    if (std::abs(train_r + val_r + test_r - 1.0) > 1e-9)
        throw std::invalid_argument("edge_split: ratios must sum to 1");
    std::vector<Edge> edges = g.edges();
    auto rng = make_rng(seed, "edge-split");
    std::shuffle(edges.begin(), edges.end(), rng);
    const std::size_t e = edges.size();
    std::size_t n_val = static_cast<std::size_t>(std::llround(val_r * static_cast<double>(e)));
    std::size_t n_test = static_cast<std::size_t>(std::llround(test_r * static_cast<double>(e)));
    if (n_val + n_test > e) throw std::invalid_argument("edge_split: too few edges");
    std::size_t n_train = e - n_val - n_test;
    auto nonempty_ok = [&](double r, std::size_t sz) { return r == 0.0 || sz > 0; };
    if (!nonempty_ok(train_r, n_train) || !nonempty_ok(val_r, n_val) ||
        !nonempty_ok(test_r, n_test))
        throw std::invalid_argument("edge_split: too few edges for nonempty parts");
    EdgeSplit s;
    s.train.assign(edges.begin(), edges.begin() + n_train);
    s.val.assign(edges.begin() + n_train, edges.begin() + n_train + n_val);
    s.test.assign(edges.begin() + n_train + n_val, edges.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

/// Seeded stratified k-fold splits for graph classification; fold f is the
/// test set, fold (f+1) mod k the validation set, the rest trains.
inline std::vector<SplitSpec> stratified_folds(const std::vector<int>& labels, std::size_t k,
                                               std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("stratified_folds: k must be >= 2");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::vector<std::vector<std::size_t>> folds(k);
    auto rng = make_rng(seed, "folds");
    std::size_t next = 0;
    for (auto& [cls, idx] : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i : idx) folds[next++ % k].push_back(i);
    }
    std::vector<SplitSpec> out;
    for (std::size_t f = 0; f < k; ++f) {
        SplitSpec s;
        s.test = folds[f];
        s.val = folds[(f + 1) % k];
        for (std::size_t o = 0; o < k; ++o)
            if (o != f && o != (f + 1) % k)
                s.train.insert(s.train.end(), folds[o].begin(), folds[o].end());
        std::sort(s.train.begin(), s.train.end());
        std::sort(s.val.begin(), s.val.end());
        std::sort(s.test.begin(), s.test.end());
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------

struct MetricReport {
    std::string task;
    std::string variant;
    std::uint64_t seed = 0;
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    double auroc = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> loss_curve;
    std::size_t epochs_run = 0;
    double wall_clock_s = 0.0;
    KvConfig config_echo;

    /// Timings are excluded from the deterministic (per-seed) serialization
    /// and carried by the aggregate only.
    nlohmann::json to_json(bool include_timing) const {
        nlohmann::json j{{"task", task},       {"variant", variant},
                         {"seed", seed},       {"epochs_run", epochs_run},
                         {"loss_curve", loss_curve}};
        if (std::isfinite(accuracy)) j["accuracy"] = accuracy;
        if (std::isfinite(auroc)) j["auroc"] = auroc;
        if (include_timing) j["wall_clock_s"] = wall_clock_s;
        j["config"] = config_echo;
        return j;
    }
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch)
        : std::runtime_error("training diverged (non-finite loss) at epoch " +
                             std::to_string(epoch)),
          epoch(epoch) {}
    std::size_t epoch;
};

namespace detail {

template <typename F>
double guarded_loss(F&& forward, std::size_t epoch) {
    double lv;
    try {
        lv = forward();
    } catch (const std::runtime_error& e) {
        if (std::string(e.what()).find("non-finite") != std::string::npos)
            throw DivergenceError(epoch);
        throw;
    }
    if (!std::isfinite(lv)) throw DivergenceError(epoch);
    return lv;
}

struct BestTracker {
    double best_metric = -1.0;
    std::size_t best_epoch = 0;
    std::vector<Matrix> best_values;

    void consider(double metric, std::size_t epoch, const ParameterStore& params) {
        if (best_values.empty() || metric > best_metric) {
            best_metric = metric;
            best_epoch = epoch;
            best_values.clear();
            for (std::size_t i = 0; i < params.size(); ++i)
                best_values.push_back(params.at(i).value);
        }
    }

    void restore(ParameterStore& params) const {
        if (best_values.empty()) return;
        for (std::size_t i = 0; i < params.size(); ++i) params.at(i).value = best_values[i];
    }

    bool out_of_patience(std::size_t epoch, std::size_t patience) const {
        return !best_values.empty() && epoch >= best_epoch + patience;
    }
};

inline Matrix apply_dropout(const Matrix& x, double p, std::mt19937_64& rng) {
    if (p <= 0.0) return x;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix out = x;
    const double keep = 1.0 - p;
    for (double& v : out.data) v = u(rng) < p ? 0.0 : v / keep;
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Training loops: full batch, Adam, early stopping on the validation metric,
// best-validation parameters restored at the end. Deterministic per seed.
// ---------------------------------------------------------------------------

inline MetricReport train_node(MgnnModel& model, const PreparedGraph& g, const Matrix& features,
                               const LabelSet& labels, const SplitSpec& split,
                               const TrainConfig& cfg) {
    cfg.validate();
    if (labels.kind != LabelKind::Node)
        throw std::invalid_argument("train_node: node labels required");
    if (split.train.empty()) throw std::invalid_argument("train_node: empty train split");
    auto t0 = std::chrono::steady_clock::now();
    AdamState adam;
    detail::BestTracker best;
    MetricReport rep;
    rep.task = "node";
    rep.variant = model.variant().name();
    rep.seed = cfg.seed;
    auto drop_rng = make_rng(cfg.seed, "dropout");

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Matrix x = detail::apply_dropout(features, cfg.dropout, drop_rng);
        Tape tape;
        auto bound = model.params().bind(tape);
        Tensor loss;
        double lv = detail::guarded_loss(
            [&] {
                Tensor probs = model.predict_node(tape, bound, g, tape.constant(x));
                loss = cross_entropy_loss(probs, labels.labels, split.train);
                return loss.scalar();
            },
            epoch);
        rep.loss_curve.push_back(lv);
        tape.backward(loss);
        model.params().collect_grads(tape, bound);
        adam_step(model.params(), adam, cfg);
        rep.epochs_run = epoch + 1;

        if (!split.val.empty()) {
            Matrix p = [&] {
                Tape t2;
                auto b2 = model.params().bind(t2);
                return model.predict_node(t2, b2, g, t2.constant(features)).to_matrix();
            }();
            best.consider(accuracy(p, labels.labels, split.val), epoch, model.params());
            if (best.out_of_patience(epoch, cfg.patience)) break;
        }
    }
    best.restore(model.params());

    Tape tape;
    auto bound = model.params().bind(tape);
    Matrix probs = model.predict_node(tape, bound, g, tape.constant(features)).to_matrix();
    rep.accuracy = accuracy(probs, labels.labels, split.test.empty() ? split.train : split.test);
    rep.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

inline MetricReport train_graph(MgnnModel& model, const std::vector<PreparedGraph>& graphs,
                                const std::vector<Matrix>& features, const LabelSet& labels,
                                const SplitSpec& split, const TrainConfig& cfg) {
    cfg.validate();
    if (labels.kind != LabelKind::Graph)
        throw std::invalid_argument("train_graph: graph labels required");
    if (split.train.empty()) throw std::invalid_argument("train_graph: empty train split");
    auto t0 = std::chrono::steady_clock::now();
    AdamState adam;
    detail::BestTracker best;
    MetricReport rep;
    rep.task = "graph";
    rep.variant = model.variant().name();
    rep.seed = cfg.seed;

    auto forward_subset = [&](Tape& tape, const std::vector<Tensor>& bound,
                              const std::vector<std::size_t>& idx) {
        std::vector<const PreparedGraph*> gs;
        std::vector<Tensor> xs;
        for (std::size_t i : idx) {
            gs.push_back(&graphs.at(i));
            xs.push_back(tape.constant(features.at(i)));
        }
        return model.predict_graph(tape, bound, gs, xs);
    };
    auto eval_subset = [&](const std::vector<std::size_t>& idx) {
        Tape tape;
        auto bound = model.params().bind(tape);
        Matrix probs = forward_subset(tape, bound, idx).to_matrix();
        std::size_t hits = 0;
        for (std::size_t r = 0; r < idx.size(); ++r) {
            std::size_t bestc = 0;
            for (std::size_t j = 1; j < probs.cols; ++j)
                if (probs(r, j) > probs(r, bestc)) bestc = j;
            if (static_cast<int>(bestc) == labels.labels.at(idx[r])) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(idx.size());
    };

    std::vector<int> train_cls;
    for (std::size_t i : split.train) train_cls.push_back(labels.labels.at(i));
    std::vector<std::size_t> rows(split.train.size());
    std::iota(rows.begin(), rows.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Tape tape;
        auto bound = model.params().bind(tape);
        Tensor loss;
        double lv = detail::guarded_loss(
            [&] {
                Tensor probs = forward_subset(tape, bound, split.train);
                loss = ops::gather_nll(probs, rows, train_cls);
                return loss.scalar();
            },
            epoch);
        rep.loss_curve.push_back(lv);
        tape.backward(loss);
        model.params().collect_grads(tape, bound);
        adam_step(model.params(), adam, cfg);
        rep.epochs_run = epoch + 1;

        if (!split.val.empty()) {
            best.consider(eval_subset(split.val), epoch, model.params());
            if (best.out_of_patience(epoch, cfg.patience)) break;
        }
    }
    best.restore(model.params());
    rep.accuracy = eval_subset(split.test.empty() ? split.train : split.test);
    rep.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

/// Link-prediction data: message passing runs on the train-edge graph; the
/// evaluation negatives are fixed per seed and exclude every true edge.
struct LinkData {
    PreparedGraph message_graph;
    std::vector<Edge> train_pos, val_pos, test_pos;
    std::vector<Edge> val_neg, test_neg;
    const DirectedGraph* full_graph = nullptr; // negative-sampling exclusion set
};

inline LinkData make_link_data(const DirectedGraph& g, const VariantSpec& variant, double train_r,
                               double val_r, double test_r, std::uint64_t seed,
                               census::CensusConfig census_config = {}) {
    EdgeSplit es = edge_split(g, train_r, val_r, test_r, seed);
    LinkData data;
    data.train_pos = es.train;
    data.val_pos = es.val;
    data.test_pos = es.test;
    data.full_graph = &g;
    DirectedGraph train_graph(g.node_count(), es.train, g.allow_self_loops());
    MotifMatrixStore store(train_graph, census_config);
    data.message_graph = prepare_graph(store, variant); // owns csr copies
    if (!es.val.empty())
        data.val_neg = negative_sample(g, es.val.size(), derive_seed(seed, "val-neg"));
    if (!es.test.empty())
        data.test_neg = negative_sample(g, es.test.size(), derive_seed(seed, "test-neg"));
    return data;
}

inline double link_auroc(MgnnModel& model, const LinkData& data, const Matrix& features,
                         const std::vector<Edge>& pos, const std::vector<Edge>& neg) {
    Tape tape;
    auto bound = model.params().bind(tape);
    std::vector<Edge> pairs = pos;
    pairs.insert(pairs.end(), neg.begin(), neg.end());
    Matrix s =
        model.predict_link(tape, bound, data.message_graph, tape.constant(features), pairs)
            .to_matrix();
    std::vector<double> scores(s.data);
    std::vector<int> flags(pairs.size(), 0);
    std::fill(flags.begin(), flags.begin() + static_cast<std::ptrdiff_t>(pos.size()), 1);
    return auroc(scores, flags);
}

inline MetricReport train_link(MgnnModel& model, const LinkData& data, const Matrix& features,
                               const TrainConfig& cfg) {
    cfg.validate();
    if (data.train_pos.empty()) throw std::invalid_argument("train_link: no training edges");
    auto t0 = std::chrono::steady_clock::now();
    AdamState adam;
    detail::BestTracker best;
    MetricReport rep;
    rep.task = "link";
    rep.variant = model.variant().name();
    rep.seed = cfg.seed;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::vector<Edge> neg = negative_sample(
            *data.full_graph, data.train_pos.size(),
            derive_seed(cfg.seed, "train-neg/" + std::to_string(epoch)));
        std::vector<Edge> pairs = data.train_pos;
        pairs.insert(pairs.end(), neg.begin(), neg.end());
        std::vector<double> targets(pairs.size(), 0.0);
        std::fill(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(data.train_pos.size()),
                  1.0);

        Tape tape;
        auto bound = model.params().bind(tape);
        Tensor loss;
        double lv = detail::guarded_loss(
            [&] {
                Tensor logits = model.predict_link_logits(tape, bound, data.message_graph,
                                                          tape.constant(features), pairs);
                loss = binary_cross_entropy_with_logits(logits, targets);
                return loss.scalar();
            },
            epoch);
        rep.loss_curve.push_back(lv);
        tape.backward(loss);
        model.params().collect_grads(tape, bound);
        adam_step(model.params(), adam, cfg);
        rep.epochs_run = epoch + 1;

        if (!data.val_pos.empty()) {
            best.consider(link_auroc(model, data, features, data.val_pos, data.val_neg), epoch,
                          model.params());
            if (best.out_of_patience(epoch, cfg.patience)) break;
        }
    }
    best.restore(model.params());
    if (!data.test_pos.empty())
        rep.auroc = link_auroc(model, data, features, data.test_pos, data.test_neg);
    rep.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

/// Pure evaluation of a trained node/graph model on a split.
inline MetricReport evaluate_node(const MgnnModel& model, const PreparedGraph& g,
                                  const Matrix& features, const LabelSet& labels,
                                  const std::vector<std::size_t>& idx) {
    if (idx.empty()) throw std::invalid_argument("evaluate: empty split");
    Tape tape;
    auto bound = model.params().bind(tape);
    Matrix probs = model.predict_node(tape, bound, g, tape.constant(features)).to_matrix();
    MetricReport rep;
    rep.task = "node";
    rep.variant = model.variant().name();
    rep.accuracy = accuracy(probs, labels.labels, idx);
    return rep;
}

} // namespace mgnn
