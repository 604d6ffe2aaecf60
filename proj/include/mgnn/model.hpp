#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgnn/census.hpp"
#include "mgnn/graph.hpp"
#include "mgnn/kvconfig.hpp"
#include "mgnn/matrix.hpp"
#include "mgnn/rng.hpp"
#include "mgnn/sparse.hpp"
#include "mgnn/tensor.hpp"

namespace mgnn {

enum class Aggregator { Sum, Mean, Max };
enum class AlphaMode { ConstantOne, Attention };
enum class BetaActivation { Sigmoid, Tanh };
enum class Task { NodeClassification, GraphClassification, LinkPrediction };
enum class PlainActivation { Relu, Tanh, Identity };

inline Aggregator aggregator_from_name(const std::string& s) {
    if (s == "sum") return Aggregator::Sum;
    if (s == "mean") return Aggregator::Mean;
    if (s == "max") return Aggregator::Max;
    throw std::invalid_argument("unknown aggregator: " + s);
}

inline std::string aggregator_name(Aggregator a) {
    switch (a) {
        case Aggregator::Sum: return "sum";
        case Aggregator::Mean: return "mean";
        default: return "max";
    }
}

inline Task task_from_name(const std::string& s) {
    if (s == "node") return Task::NodeClassification;
    if (s == "graph") return Task::GraphClassification;
    if (s == "link") return Task::LinkPrediction;
    throw std::invalid_argument("unknown task: " + s);
}

inline std::string task_name(Task t) {
    switch (t) {
        case Task::NodeClassification: return "node";
        case Task::GraphClassification: return "graph";
        default: return "link";
    }
}

// ---------------------------------------------------------------------------
// Ablation variants (S6.2.2): full model, the GCN-equivalent "MGNNw/oM",
// "MGNNw/oDelta", non-injective block combiners, and single-motif runs.
// ---------------------------------------------------------------------------

enum class VariantKind { Full, NoMotif, NoDelta, CombineSum, CombineMean, CombineMax, SingleMotif };

struct VariantSpec {
    VariantKind kind = VariantKind::Full;
    int single_motif = 0; // 1..13 for SingleMotif

    static VariantSpec parse(const std::string& s) {
        VariantSpec v;
        if (s == "full") {
            v.kind = VariantKind::Full;
        } else if (s == "no-motif") {
            v.kind = VariantKind::NoMotif;
        } else if (s == "no-delta") {
            v.kind = VariantKind::NoDelta;
        } else if (s == "combiner:concat") {
            v.kind = VariantKind::Full; // concat is the full model
        } else if (s == "combiner:sum") {
            v.kind = VariantKind::CombineSum;
        } else if (s == "combiner:mean") {
            v.kind = VariantKind::CombineMean;
        } else if (s == "combiner:max") {
            v.kind = VariantKind::CombineMax;
        } else if (s.rfind("single-motif:", 0) == 0) {
            v.kind = VariantKind::SingleMotif;
            std::string id = s.substr(13);
            if (!id.empty() && (id[0] == 'M' || id[0] == 'm')) id = id.substr(1);
            v.single_motif = std::stoi(id);
            if (v.single_motif < 1 || v.single_motif > 13)
                throw std::invalid_argument("single-motif id must be 1..13");
        } else {
            throw std::invalid_argument("unknown variant: " + s);
        }
        return v;
    }

    std::string name() const {
        switch (kind) {
            case VariantKind::Full: return "full";
            case VariantKind::NoMotif: return "no-motif";
            case VariantKind::NoDelta: return "no-delta";
            case VariantKind::CombineSum: return "combiner-sum";
            case VariantKind::CombineMean: return "combiner-mean";
            case VariantKind::CombineMax: return "combiner-max";
            default: return "single-motif(M" + std::to_string(single_motif) + ")";
        }
    }
};

// ---------------------------------------------------------------------------
// Normalized matrices for one graph, with per-motif access instrumentation.
// ---------------------------------------------------------------------------

/// Census + normalization inputs the model consumes. Motif accesses are
/// counted so ablation runs can prove which matrices they touched.
class MotifMatrixStore {
public:
    MotifMatrixStore(const DirectedGraph& g, census::CensusConfig census_config = {},
                     double tol = 1e-6, std::size_t max_iter = 1000)
        : n_(g.node_count()) {
        base_ = normalize_adjacency(g.adjacency(true), tol, max_iter);
        census::MotifAdjacencySet counts = census::build_all(g, census_config);
        for (int k = 1; k <= 13; ++k)
            motifs_[k - 1] = normalize_adjacency(counts.matrix(k), tol, max_iter);
    }

    std::size_t node_count() const { return n_; }
    const NormalizedAdjacency& base() const { return base_; }

    const NormalizedAdjacency& motif(int k) const {
        accesses_[k - 1]++;
        return motifs_[k - 1];
    }

    std::uint64_t access_count(int k) const { return accesses_[k - 1]; }
    void reset_access_counts() const { accesses_.fill(0); }

private:
    std::size_t n_ = 0;
    NormalizedAdjacency base_;
    std::array<NormalizedAdjacency, 13> motifs_;
    mutable std::array<std::uint64_t, 13> accesses_{};
};

/// Matrices actually fed to the layers, after variant rewiring.
struct PreparedGraph {
    std::size_t n = 0;
    Csr base;
    std::array<Csr, 13> motif;      // zero matrices for motifs a variant drops
    std::array<Csr, 13> motif_mean; // row values divided by |N(v)|, for mean agg
};

namespace detail {

inline Csr zero_csr(std::size_t n) {
    Csr c;
    c.dim = n;
    c.row_ptr.assign(n + 1, 0);
    return c;
}

inline Csr row_mean_scaled(const Csr& c) {
    Csr out = c;
    for (std::size_t i = 0; i < c.dim; ++i) {
        std::size_t deg = c.row_end(i) - c.row_begin(i);
        if (deg == 0) continue;
        for (std::size_t k = c.row_begin(i); k < c.row_end(i); ++k)
            out.val[k] /= static_cast<double>(deg);
    }
    return out;
}

} // namespace detail

inline PreparedGraph prepare_graph(const MotifMatrixStore& store, const VariantSpec& variant) {
    PreparedGraph p;
    p.n = store.node_count();
    p.base = store.base().matrix;
    for (int k = 1; k <= 13; ++k) {
        bool used = variant.kind != VariantKind::NoMotif &&
                    (variant.kind != VariantKind::SingleMotif || variant.single_motif == k);
        p.motif[k - 1] = used ? store.motif(k).matrix : detail::zero_csr(p.n);
        p.motif_mean[k - 1] = detail::row_mean_scaled(p.motif[k - 1]);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Model configuration and parameters.
// ---------------------------------------------------------------------------

struct MgnnModelConfig {
    Task task = Task::NodeClassification;
    int n_classes = 2;
    std::size_t input_dim = 1;
    std::vector<std::size_t> d_gcn = {16}; // GCN sublayer width per layer
    std::size_t d_prime = 6;               // redundancy-minimized block width
    Aggregator agg = Aggregator::Sum;
    AlphaMode alpha_mode = AlphaMode::ConstantOne;
    BetaActivation sigma_beta = BetaActivation::Sigmoid;
    std::size_t graph_head_hidden = 16;

    static MgnnModelConfig from_kv(const KvConfig& kv) {
        MgnnModelConfig c;
        c.task = task_from_name(kv_get(kv, "task", "node"));
        c.n_classes = static_cast<int>(kv_get_long(kv, "n_c", 2));
        c.d_gcn = kv_get_size_list(kv, "d_gcn", {16});
        long layers = kv_get_long(kv, "layers", static_cast<long>(c.d_gcn.size()));
        if (layers != static_cast<long>(c.d_gcn.size())) {
            if (c.d_gcn.size() == 1)
                c.d_gcn.assign(static_cast<std::size_t>(layers), c.d_gcn[0]);
            else
                throw std::invalid_argument("layers does not match d_gcn list length");
        }
        c.d_prime = static_cast<std::size_t>(kv_get_long(kv, "d_prime", 6));
        c.agg = aggregator_from_name(kv_get(kv, "agg", "sum"));
        std::string am = kv_get(kv, "alpha_mode", "constant-1");
        if (am == "constant-1") c.alpha_mode = AlphaMode::ConstantOne;
        else if (am == "attention") c.alpha_mode = AlphaMode::Attention;
        else throw std::invalid_argument("unknown alpha_mode: " + am);
        std::string sb = kv_get(kv, "sigma_beta", "sigmoid");
        if (sb == "sigmoid") c.sigma_beta = BetaActivation::Sigmoid;
        else if (sb == "tanh") c.sigma_beta = BetaActivation::Tanh;
        else throw std::invalid_argument("unknown sigma_beta: " + sb);
        c.graph_head_hidden = static_cast<std::size_t>(kv_get_long(kv, "graph_head_hidden", 16));
        return c;
    }
};

inline Matrix xavier_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (double& v : m.data) v = dist(rng);
    return m;
}

/// Eq. (3): Z = A~ H W.
inline Tensor gcn_sublayer(const Csr& normalized_adjacency, const Tensor& h, const Tensor& w) {
    return ops::spmm(normalized_adjacency, ops::matmul(h, w));
}

/// Eq. (2) with constant alpha: aggregate (A~_k)_{vi} Z_i over the support of
/// row v. Sum coincides with the sparse product; mean divides by |N(v)| via
/// the pre-scaled matrix; max is per-dimension with recorded argmax.
inline Tensor motif_aggregate(const Csr& motif, const Csr& motif_mean, const Tensor& z,
                              Aggregator agg) {
    switch (agg) {
        case Aggregator::Sum: return ops::spmm(motif, z);
        case Aggregator::Mean: return ops::spmm(motif_mean, z);
        default: return ops::spmax(motif, z);
    }
}

/// Eqs. (4)-(8) for motif k (1-based) given all 13 aggregates and z:
/// f = W_f h_k + b_f, f_k = W_fk [||_{i != k} h_i || z] + b_fk,
/// beta = sigma(f . f_k), output relu(beta * (f - f_k)).
inline Tensor redundancy_minimize(const std::vector<Tensor>& hk, const Tensor& z, int k,
                                  const Tensor& w_f, const Tensor& b_f, const Tensor& w_fk,
                                  const Tensor& b_fk, BetaActivation beta_act) {
    if (hk.size() != 13) throw std::invalid_argument("redundancy_minimize needs 13 aggregates");
    Tensor f = ops::add_row_broadcast(ops::matmul(hk[k - 1], w_f), b_f); // Eq. (5)
    std::vector<Tensor> rest;
    rest.reserve(13);
    for (int i = 1; i <= 13; ++i)
        if (i != k) rest.push_back(hk[i - 1]);
    rest.push_back(z);
    Tensor hbar = ops::concat_cols(rest);
    Tensor fk = ops::add_row_broadcast(ops::matmul(hbar, w_fk), b_fk); // Eq. (6)
    Tensor sim = ops::rowwise_dot(f, fk);
    Tensor beta =
        beta_act == BetaActivation::Sigmoid ? ops::sigmoid(sim) : ops::tanh_t(sim); // Eq. (8)
    return ops::relu(ops::scale_rows(ops::sub(f, fk), beta));                       // Eq. (4)
}

/// The MGNN model: stacked layers executing Eq. (3) -> Eq. (2) -> Eqs. (4)-(8)
/// -> Eq. (9), plus the task head. Variants rewire the combination step.
class MgnnModel {
    struct LayerIds {
        std::size_t W = 0, Wf = 0, bf = 0;
        std::array<std::size_t, 13> Wfk{}, bfk{}, Watt{};
    };

public:
    MgnnModel(MgnnModelConfig config, VariantSpec variant, std::uint64_t seed)
        : config_(std::move(config)), variant_(variant) {
        if (config_.d_gcn.empty()) throw std::invalid_argument("at least one layer required");
        std::size_t in = config_.input_dim;
        for (std::size_t l = 0; l < config_.d_gcn.size(); ++l) {
            LayerIds ids;
            std::size_t dg = config_.d_gcn[l];
            ids.W = add_param("layer" + std::to_string(l) + ".W", in, dg, seed);
            if (uses_delta()) {
                ids.Wf = add_param("layer" + std::to_string(l) + ".Wf", dg, config_.d_prime, seed);
                ids.bf = add_zero_param("layer" + std::to_string(l) + ".bf", 1, config_.d_prime);
                for (int k = 1; k <= 13; ++k) {
                    ids.Wfk[k - 1] = add_param("layer" + std::to_string(l) + ".Wf" +
                                                   std::to_string(k),
                                               13 * dg, config_.d_prime, seed);
                    ids.bfk[k - 1] = add_zero_param("layer" + std::to_string(l) + ".bf" +
                                                        std::to_string(k),
                                                    1, config_.d_prime);
                }
            }
            if (config_.alpha_mode == AlphaMode::Attention &&
                variant_.kind != VariantKind::NoMotif)
                for (int k = 1; k <= 13; ++k)
                    ids.Watt[k - 1] = add_param("layer" + std::to_string(l) + ".Watt" +
                                                    std::to_string(k),
                                                dg, dg, seed);
            layers_.push_back(ids);
            in = layer_output_dim(l);
        }
        embedding_dim_ = in;
        switch (config_.task) {
            case Task::NodeClassification:
                head_W_.push_back(add_param("head.W", in, config_.n_classes, seed));
                head_b_.push_back(add_zero_param("head.b", 1, config_.n_classes));
                break;
            case Task::GraphClassification: {
                std::size_t h = config_.graph_head_hidden;
                std::size_t dims[4] = {in, h, h, static_cast<std::size_t>(config_.n_classes)};
                for (int i = 0; i < 3; ++i) {
                    head_W_.push_back(add_param("head.W" + std::to_string(i + 1), dims[i],
                                                dims[i + 1], seed));
                    head_b_.push_back(
                        add_zero_param("head.b" + std::to_string(i + 1), 1, dims[i + 1]));
                }
                break;
            }
            case Task::LinkPrediction: break; // inner-product decoder has no parameters
        }
    }

    const MgnnModelConfig& config() const { return config_; }
    const VariantSpec& variant() const { return variant_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }
    std::size_t embedding_dim() const { return embedding_dim_; }

    std::size_t layer_output_dim(std::size_t l) const {
        switch (variant_.kind) {
            case VariantKind::NoMotif: return config_.d_gcn[l];
            case VariantKind::NoDelta: return 13 * config_.d_gcn[l];
            case VariantKind::CombineSum:
            case VariantKind::CombineMean:
            case VariantKind::CombineMax: return config_.d_prime;
            default: return 13 * config_.d_prime;
        }
    }

    /// Node embeddings H^{(L)}.
    Tensor embed(Tape& tape, const std::vector<Tensor>& bound, const PreparedGraph& g,
                 const Tensor& features) const {
        Tensor h = features;
        for (std::size_t l = 0; l < layers_.size(); ++l) h = layer_forward(tape, bound, g, h, l);
        return h;
    }

    /// One MGNN layer (Algorithm-1 lines 3-16 for one l).
    Tensor layer_forward(Tape& tape, const std::vector<Tensor>& bound, const PreparedGraph& g,
                         const Tensor& h_prev, std::size_t l) const {
        const LayerIds& ids = layers_[l];
        Tensor z = gcn_sublayer(g.base, h_prev, bound[ids.W]); // Eq. (3)
        if (variant_.kind == VariantKind::NoMotif) return ops::relu(z);

        std::vector<Tensor> hk;
        hk.reserve(13);
        for (int k = 1; k <= 13; ++k)
            hk.push_back(aggregate_motif(tape, bound, g, z, l, k)); // Eq. (2)

        if (variant_.kind == VariantKind::NoDelta) return ops::concat_cols(hk);

        std::vector<Tensor> blocks;
        blocks.reserve(13);
        for (int k = 1; k <= 13; ++k)
            blocks.push_back(redundancy_minimize(hk, z, k, bound[ids.Wf], bound[ids.bf],
                                                 bound[ids.Wfk[k - 1]], bound[ids.bfk[k - 1]],
                                                 config_.sigma_beta)); // Eqs. (4)-(8)

        switch (variant_.kind) { // Eq. (9) or its ablation replacement
            case VariantKind::CombineSum:
            case VariantKind::CombineMean: {
                Tensor acc = blocks[0];
                for (int k = 1; k < 13; ++k) acc = ops::add(acc, blocks[k]);
                return variant_.kind == VariantKind::CombineMean ? ops::scale(acc, 1.0 / 13.0)
                                                                 : acc;
            }
            case VariantKind::CombineMax: {
                Tensor acc = blocks[0];
                for (int k = 1; k < 13; ++k) acc = ops::maximum(acc, blocks[k]);
                return acc;
            }
            default: return ops::concat_cols(blocks);
        }
    }

    /// Eq. (2) for one motif, honoring the alpha mode.
    Tensor aggregate_motif(Tape& tape, const std::vector<Tensor>& bound, const PreparedGraph& g,
                           const Tensor& z, std::size_t l, int k) const {
        const Csr& m = g.motif[k - 1];
        if (config_.alpha_mode == AlphaMode::Attention) {
            if (config_.agg != Aggregator::Sum)
                throw std::invalid_argument("attention alpha requires sum aggregation");
            // dense bilinear scores row-softmaxed over the motif support
            Matrix mask(g.n, g.n);
            Matrix dense(g.n, g.n);
            for (std::size_t i = 0; i < g.n; ++i)
                for (std::size_t e = m.row_begin(i); e < m.row_end(i); ++e) {
                    mask(i, m.col[e]) = 1.0;
                    dense(i, m.col[e]) = m.val[e];
                }
            Tensor scores = ops::matmul(ops::matmul(z, bound[layers_[l].Watt[k - 1]]),
                                        ops::transpose(z));
            Tensor alpha = ops::masked_row_softmax(scores, mask);
            Tensor weighted = ops::mul(alpha, tape.constant(dense));
            return ops::matmul(weighted, z);
        }
        return motif_aggregate(m, g.motif_mean[k - 1], z, config_.agg);
    }

    Tensor predict_node(Tape& tape, const std::vector<Tensor>& bound, const PreparedGraph& g,
                        const Tensor& features) const {
        require_task(Task::NodeClassification);
        Tensor h = embed(tape, bound, g, features);
        Tensor logits =
            ops::add_row_broadcast(ops::matmul(h, bound[head_W_[0]]), bound[head_b_[0]]);
        return ops::row_softmax(logits);
    }

    /// Graph task: per-graph sum readout, three fully connected layers, softmax.
    Tensor predict_graph(Tape& tape, const std::vector<Tensor>& bound,
                         const std::vector<const PreparedGraph*>& graphs,
                         const std::vector<Tensor>& features) const {
        require_task(Task::GraphClassification);
        if (graphs.size() != features.size())
            throw std::invalid_argument("predict_graph: graphs/features mismatch");
        std::vector<Tensor> embeddings;
        embeddings.reserve(graphs.size());
        for (std::size_t i = 0; i < graphs.size(); ++i)
            embeddings.push_back(ops::col_sum(embed(tape, bound, *graphs[i], features[i])));
        Tensor x = ops::concat_rows(embeddings);
        for (std::size_t i = 0; i < head_W_.size(); ++i) {
            x = ops::add_row_broadcast(ops::matmul(x, bound[head_W_[i]]), bound[head_b_[i]]);
            if (i + 1 < head_W_.size()) x = ops::relu(x);
        }
        return ops::row_softmax(x);
    }

    /// Inner-product decoder logits: h_u . h_v per (u, v) pair.
    Tensor predict_link_logits(Tape& tape, const std::vector<Tensor>& bound,
                               const PreparedGraph& g, const Tensor& features,
                               const std::vector<Edge>& pairs) const {
        require_task(Task::LinkPrediction);
        Tensor h = embed(tape, bound, g, features);
        std::vector<std::size_t> src, dst;
        src.reserve(pairs.size());
        dst.reserve(pairs.size());
        for (const auto& [u, v] : pairs) {
            src.push_back(u);
            dst.push_back(v);
        }
        return ops::rowwise_dot(ops::select_rows(h, src), ops::select_rows(h, dst));
    }

    /// Inner-product decoder scores: sigmoid(h_u . h_v).
    Tensor predict_link(Tape& tape, const std::vector<Tensor>& bound, const PreparedGraph& g,
                        const Tensor& features, const std::vector<Edge>& pairs) const {
        return ops::sigmoid(predict_link_logits(tape, bound, g, features, pairs));
    }

private:
    bool uses_delta() const {
        return variant_.kind != VariantKind::NoMotif && variant_.kind != VariantKind::NoDelta;
    }

    void require_task(Task t) const {
        if (config_.task != t)
            throw std::invalid_argument("model head does not match requested task");
    }

    std::size_t add_param(const std::string& name, std::size_t rows, std::size_t cols,
                          std::uint64_t seed) {
        auto rng = make_rng(seed, "init/" + name);
        return params_.add(name, xavier_uniform(rows, cols, rng));
    }

    std::size_t add_zero_param(const std::string& name, std::size_t rows, std::size_t cols) {
        return params_.add(name, Matrix(rows, cols, 0.0));
    }

    MgnnModelConfig config_;
    VariantSpec variant_;
    ParameterStore params_;
    std::vector<LayerIds> layers_;
    std::vector<std::size_t> head_W_, head_b_;
    std::size_t embedding_dim_ = 0;
};

// ---------------------------------------------------------------------------
// Plain-matrix reference models for the theory tests: the Table-1 abstract
// standard GNN (raw adjacency weights) and the simplified MGNN layer of
// Eqs. (13)-(14) (raw motif counts). Kept free of the autodiff machinery so
// the emulation comparisons run on independent code paths.
// ---------------------------------------------------------------------------

inline Matrix plain_activation(Matrix m, PlainActivation act) {
    if (act == PlainActivation::Relu)
        for (double& v : m.data) v = v > 0.0 ? v : 0.0;
    else if (act == PlainActivation::Tanh)
        for (double& v : m.data) v = std::tanh(v);
    return m;
}

/// One Table-1 standard-GNN layer: h_v = act(omega({A_vi * W * h_i})) over the
/// support of row v of the raw adjacency (self-loops included).
inline Matrix standard_gnn_layer(const DirectedGraph& g, const Matrix& h_prev, const Matrix& w,
                                 Aggregator agg, PlainActivation act) {
    Matrix hw = matmul(h_prev, w);
    const std::size_t n = g.node_count(), d = hw.cols;
    Matrix out(n, d);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& nb = g.out_neighbors(v);
        if (nb.empty()) continue;
        for (std::size_t c = 0; c < d; ++c) {
            double acc = 0.0;
            bool first = true;
            for (std::size_t i : nb) {
                double m = hw(i, c); // A_vi = 1 on the support
                if (agg == Aggregator::Max) {
                    acc = first ? m : std::max(acc, m);
                } else {
                    acc += m;
                }
                first = false;
            }
            if (agg == Aggregator::Mean) acc /= static_cast<double>(nb.size());
            out(v, c) = acc;
        }
    }
    return plain_activation(std::move(out), act);
}

/// Stacked standard-GNN reference used by the expressiveness lab.
class GcnBaseline {
public:
    GcnBaseline(std::size_t input_dim, std::vector<std::size_t> dims, std::uint64_t seed,
                Aggregator agg = Aggregator::Sum, PlainActivation act = PlainActivation::Relu)
        : agg_(agg), act_(act) {
        std::size_t in = input_dim;
        for (std::size_t l = 0; l < dims.size(); ++l) {
            auto rng = make_rng(seed, "init/gcn.W" + std::to_string(l));
            weights_.push_back(xavier_uniform(in, dims[l], rng));
            in = dims[l];
        }
    }

    const std::vector<Matrix>& weights() const { return weights_; }
    Matrix& weight(std::size_t l) { return weights_[l]; }

    Matrix embed(const DirectedGraph& g, const Matrix& features) const {
        Matrix h = features;
        for (const Matrix& w : weights_) h = standard_gnn_layer(g, h, w, agg_, act_);
        return h;
    }

private:
    Aggregator agg_;
    PlainActivation act_;
    std::vector<Matrix> weights_;
};

/// Simplified MGNN layer (Eqs. 13-14): raw motif counts, per-edge alpha
/// coefficients, one shared weight matrix; output is the 13-block
/// concatenation of act(h_{v,k}). N(v) is the raw-adjacency row support,
/// matching the Table-1 abstraction.
inline Matrix simplified_layer_forward(const DirectedGraph& g,
                                       const std::array<Matrix, 13>& motif_counts,
                                       const std::array<Matrix, 13>& alpha, const Matrix& h_prev,
                                       const Matrix& w_m, Aggregator agg, PlainActivation act) {
    Matrix hw = matmul(h_prev, w_m);
    const std::size_t n = g.node_count(), d = hw.cols;
    Matrix out(n, 13 * d);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& nb = g.out_neighbors(v);
        for (int k = 0; k < 13; ++k) {
            for (std::size_t c = 0; c < d; ++c) {
                double acc = 0.0;
                bool first = true;
                for (std::size_t i : nb) {
                    double m = alpha[k](v, i) * motif_counts[k](v, i) * hw(i, c);
                    if (agg == Aggregator::Max) {
                        acc = first ? m : std::max(acc, m);
                    } else {
                        acc += m;
                    }
                    first = false;
                }
                if (agg == Aggregator::Mean && !nb.empty())
                    acc /= static_cast<double>(nb.size());
                out(v, k * d + c) = acc;
            }
        }
    }
    return plain_activation(std::move(out), act);
}

// ---------------------------------------------------------------------------
// Readout and representation statistics.
// ---------------------------------------------------------------------------

/// Column-wise sum over nodes (plain-matrix readout).
inline Matrix readout_sum(const Matrix& h) {
    Matrix out(1, h.cols);
    for (std::size_t i = 0; i < h.rows; ++i)
        for (std::size_t j = 0; j < h.cols; ++j) out(0, j) += h(i, j);
    return out;
}

struct BlockStats {
    Matrix l2;           // n x 13
    Matrix nonzero_dims; // n x 13
};

/// L2 norm and nonzero-dimension count of each of the 13 blocks per node
/// (heatmap-ready, Fig.-9 style).
inline BlockStats per_motif_block_stats(const Matrix& h_last) {
    if (h_last.cols % 13 != 0)
        throw std::invalid_argument("per_motif_block_stats: width " +
                                    std::to_string(h_last.cols) + " not divisible by 13");
    const std::size_t w = h_last.cols / 13;
    BlockStats s{Matrix(h_last.rows, 13), Matrix(h_last.rows, 13)};
    for (std::size_t i = 0; i < h_last.rows; ++i)
        for (int k = 0; k < 13; ++k) {
            double sq = 0.0;
            double nz = 0.0;
            for (std::size_t j = 0; j < w; ++j) {
                double v = h_last(i, k * w + j);
                sq += v * v;
                if (v != 0.0) nz += 1.0;
            }
            s.l2(i, k) = std::sqrt(sq);
            s.nonzero_dims(i, k) = nz;
        }
    return s;
}

} // namespace mgnn
