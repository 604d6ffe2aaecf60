#include <catch2/catch_amalgamated.hpp>

#include "mgnn/census.hpp"
#include "mgnn/model.hpp"
#include "mgnn/rng.hpp"
#include "mgnn/synthetic.hpp"

using namespace mgnn;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t i = 0;
    for (const auto& r : rows) {
        std::size_t j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

Csr csr_of(std::initializer_list<CooEntry> entries, std::size_t dim) {
    return Csr::from_coo(SparseMatrix::from_unsorted(dim, entries));
}

Matrix rand_mat(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix m(r, c);
    for (double& v : m.data) v = u(rng);
    return m;
}

} // namespace

TEST_CASE("gcn_sublayer: pinned 2-node arithmetic") {
    Csr atil = csr_of({{0, 0, -0.5}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, -0.5}}, 2);
    Tape tape;
    Tensor h = tape.leaf(mat({{1}, {2}}));
    Tensor w = tape.leaf(mat({{1}}));
    Matrix z = gcn_sublayer(atil, h, w).to_matrix();
    REQUIRE(z(0, 0) == Catch::Approx(1.5));
    REQUIRE(z(1, 0) == Catch::Approx(0.0));

    Tensor w0 = tape.leaf(mat({{0}}));
    Matrix z0 = gcn_sublayer(atil, h, w0).to_matrix();
    REQUIRE(z0.data == std::vector<double>{0, 0});
}

TEST_CASE("gcn_sublayer: random instance matches a dense triple-loop oracle") {
    auto rng = make_rng(12, "gcn-oracle");
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = 8, din = 4, dout = 3;
    std::vector<CooEntry> entries;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (u(rng) > 0.2) entries.push_back({i, j, u(rng)});
    SparseMatrix sm = SparseMatrix::from_unsorted(n, std::move(entries));
    Csr a = Csr::from_coo(sm);
    Matrix h = rand_mat(n, din, rng), w = rand_mat(din, dout, rng);

    Tape tape;
    Matrix z = gcn_sublayer(a, tape.leaf(h), tape.leaf(w)).to_matrix();

    Matrix ad = sm.to_dense();
    Matrix want(n, dout);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dout; ++j)
            for (std::size_t t = 0; t < n; ++t)
                for (std::size_t c = 0; c < din; ++c)
                    want(i, j) += ad(i, t) * h(t, c) * w(c, j);
    REQUIRE(max_abs_diff(z, want) < 1e-10);
}

TEST_CASE("motif_aggregate: zero matrix, single entry, mean vs sum") {
    Tape tape;
    Tensor z = tape.leaf(mat({{1}, {3}}));
    Csr zero = csr_of({}, 2);
    REQUIRE(motif_aggregate(zero, zero, z, Aggregator::Sum).to_matrix().data ==
            std::vector<double>{0, 0});

    Csr single = csr_of({{0, 1, 2.0}}, 2);
    REQUIRE(motif_aggregate(single, single, z, Aggregator::Sum).at(0, 0) == 6.0);

    Csr two = csr_of({{0, 0, 1.0}, {0, 1, 1.0}}, 2);
    Csr two_mean = csr_of({{0, 0, 0.5}, {0, 1, 0.5}}, 2);
    double sum = motif_aggregate(two, two_mean, z, Aggregator::Sum).at(0, 0);
    double mean = motif_aggregate(two, two_mean, z, Aggregator::Mean).at(0, 0);
    REQUIRE(mean == sum / 2.0);
}

TEST_CASE("redundancy_minimize: pinned Eq.-4 arithmetic") {
    // all parameters and inputs zero, sigmoid beta: beta = 0.5, output 0
    Tape tape;
    std::vector<Tensor> hk;
    for (int k = 0; k < 13; ++k) hk.push_back(tape.leaf(Matrix(1, 1, 0.0)));
    Tensor z = tape.leaf(Matrix(1, 1, 0.0));
    Tensor wf = tape.leaf(Matrix(1, 1, 0.0));
    Tensor bf = tape.leaf(Matrix(1, 1, 0.0));
    Tensor wfk = tape.leaf(Matrix(13, 1, 0.0));
    Tensor bfk = tape.leaf(Matrix(1, 1, 0.0));
    Tensor out = redundancy_minimize(hk, z, 1, wf, bf, wfk, bfk, BetaActivation::Sigmoid);
    REQUIRE(out.at(0, 0) == 0.0);

    // d' = 1, f(h_k) = 1, f_k(Hbar) = 0.5: beta = sigmoid(0.5) = 0.622459,
    // output relu(0.622459 * 0.5) = 0.311230
    Tensor bf1 = tape.leaf(Matrix(1, 1, 1.0));
    Tensor bfk5 = tape.leaf(Matrix(1, 1, 0.5));
    Tensor out2 = redundancy_minimize(hk, z, 1, wf, bf1, wfk, bfk5, BetaActivation::Sigmoid);
    REQUIRE(out2.at(0, 0) == Catch::Approx(0.311230).margin(1e-6));
}

TEST_CASE("redundancy_minimize: gradients match finite differences") {
    auto rng = make_rng(3, "delta-grad");
    const std::size_t n = 3, dg = 2, dp = 2;
    std::vector<Matrix> hkm;
    for (int k = 0; k < 13; ++k) hkm.push_back(rand_mat(n, dg, rng));
    Matrix zm = rand_mat(n, dg, rng);

    ParameterStore params;
    params.add("Wf", rand_mat(dg, dp, rng));
    params.add("bf", rand_mat(1, dp, rng));
    params.add("Wfk", rand_mat(13 * dg, dp, rng));
    params.add("bfk", rand_mat(1, dp, rng));
    auto f = [&](Tape& tape, const std::vector<Tensor>& p) {
        std::vector<Tensor> hk;
        for (int k = 0; k < 13; ++k) hk.push_back(tape.constant(hkm[k]));
        Tensor out = redundancy_minimize(hk, tape.constant(zm), 4, p[0], p[1], p[2], p[3],
                                         BetaActivation::Sigmoid);
        return ops::sum_all(ops::mul(out, out));
    };
    REQUIRE(grad_check(f, params).max_rel_error < 1e-4);
}

namespace {

struct SmallSetup {
    DirectedGraph graph;
    MotifMatrixStore store;
    PreparedGraph prep;
    Matrix features;

    explicit SmallSetup(std::uint64_t seed, std::size_t n = 5, double p = 0.45)
        : graph(random_digraph(n, p, seed)), store(graph),
          prep(prepare_graph(store, VariantSpec{})), features(Matrix(n, 2, 0.0)) {
        auto rng = make_rng(seed, "features");
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (double& v : features.data) v = u(rng);
    }
};

Matrix dense_of(const Csr& c) {
    Matrix d(c.dim, c.dim);
    for (std::size_t i = 0; i < c.dim; ++i)
        for (std::size_t k = c.row_begin(i); k < c.row_end(i); ++k) d(i, c.col[k]) = c.val[k];
    return d;
}

// Straight-line plain-matrix reimplementation of Eqs. (2)-(9) for one layer,
// sum aggregation and constant alpha, independent of the tape machinery.
Matrix straight_line_layer(const PreparedGraph& g, const Matrix& x, const ParameterStore& ps,
                           std::size_t dg, std::size_t dp, BetaActivation beta_act) {
    const std::size_t n = g.n;
    Matrix z = matmul(matmul(dense_of(g.base), x), ps.by_name("layer0.W").value);
    std::array<Matrix, 13> hk;
    for (int k = 0; k < 13; ++k) hk[k] = matmul(dense_of(g.motif[k]), z);
    Matrix out(n, 13 * dp);
    for (int k = 1; k <= 13; ++k) {
        Matrix f = matmul(hk[k - 1], ps.by_name("layer0.Wf").value);
        const Matrix& bf = ps.by_name("layer0.bf").value;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < dp; ++j) f(i, j) += bf(0, j);
        Matrix hbar(n, 13 * dg);
        std::size_t off = 0;
        for (int i = 1; i <= 13; ++i) {
            if (i == k) continue;
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < dg; ++c) hbar(r, off + c) = hk[i - 1](r, c);
            off += dg;
        }
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < dg; ++c) hbar(r, off + c) = z(r, c);
        Matrix fk = matmul(hbar, ps.by_name("layer0.Wf" + std::to_string(k)).value);
        const Matrix& bfk = ps.by_name("layer0.bf" + std::to_string(k)).value;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < dp; ++j) fk(i, j) += bfk(0, j);
        for (std::size_t i = 0; i < n; ++i) {
            double sim = 0.0;
            for (std::size_t j = 0; j < dp; ++j) sim += f(i, j) * fk(i, j);
            double beta = beta_act == BetaActivation::Sigmoid ? 1.0 / (1.0 + std::exp(-sim))
                                                              : std::tanh(sim);
            for (std::size_t j = 0; j < dp; ++j) {
                double v = beta * (f(i, j) - fk(i, j));
                out(i, (k - 1) * dp + j) = v > 0.0 ? v : 0.0;
            }
        }
    }
    return out;
}

} // namespace

TEST_CASE("layer_forward: zero parameters give zero output") {
    SmallSetup s(41);
    MgnnModelConfig cfg;
    cfg.task = Task::LinkPrediction;
    cfg.input_dim = 2;
    cfg.d_gcn = {3};
    cfg.d_prime = 2;
    MgnnModel model(cfg, VariantSpec{}, 1);
    for (std::size_t i = 0; i < model.params().size(); ++i)
        for (double& v : model.params().at(i).value.data) v = 0.0;
    Tape tape;
    auto bound = model.params().bind(tape);
    Matrix out = model.embed(tape, bound, s.prep, tape.constant(s.features)).to_matrix();
    for (double v : out.data) REQUIRE(v == 0.0);
}

TEST_CASE("layer_forward: equals the straight-line Eq. 2-9 recomputation") {
    SmallSetup s(42);
    MgnnModelConfig cfg;
    cfg.task = Task::LinkPrediction;
    cfg.input_dim = 2;
    cfg.d_gcn = {3};
    cfg.d_prime = 2;
    cfg.sigma_beta = BetaActivation::Tanh;
    MgnnModel model(cfg, VariantSpec{}, 7);

    Tape tape;
    auto bound = model.params().bind(tape);
    Matrix got = model.embed(tape, bound, s.prep, tape.constant(s.features)).to_matrix();
    Matrix want = straight_line_layer(s.prep, s.features, model.params(), 3, 2,
                                      BetaActivation::Tanh);
    REQUIRE(max_abs_diff(got, want) < 1e-11);
}

TEST_CASE("layer_forward: blocks follow a motif-id transposition of matrices and params") {
    SmallSetup s(43);
    MgnnModelConfig cfg;
    cfg.task = Task::LinkPrediction;
    cfg.input_dim = 2;
    cfg.d_gcn = {2};
    cfg.d_prime = 2;
    MgnnModel model(cfg, VariantSpec{}, 11);

    // swap motifs a <-> b everywhere: matrices, Wf_k/bf_k pairs, and the
    // block layout inside every Wf_k input
    const int a = 2, b = 9;
    PreparedGraph swapped = s.prep;
    std::swap(swapped.motif[a - 1], swapped.motif[b - 1]);
    std::swap(swapped.motif_mean[a - 1], swapped.motif_mean[b - 1]);

    MgnnModel model2(cfg, VariantSpec{}, 11);
    auto pi = [&](int k) { return k == a ? b : k == b ? a : k; };
    const std::size_t dg = 2;
    for (int k = 1; k <= 13; ++k) {
        model2.params().by_name("layer0.Wf" + std::to_string(pi(k))).value = [&] {
            // permute the "other motifs" block rows of W_fk to the new order
            const Matrix& src = model.params().by_name("layer0.Wf" + std::to_string(k)).value;
            Matrix dst(src.rows, src.cols);
            std::vector<int> old_order, new_order;
            for (int i = 1; i <= 13; ++i)
                if (i != k) old_order.push_back(i);
            for (int i = 1; i <= 13; ++i)
                if (i != pi(k)) new_order.push_back(i);
            for (std::size_t blk = 0; blk < 12; ++blk) {
                int motif_id = old_order[blk];
                auto it = std::find(new_order.begin(), new_order.end(), pi(motif_id));
                std::size_t nblk = static_cast<std::size_t>(it - new_order.begin());
                for (std::size_t r = 0; r < dg; ++r)
                    for (std::size_t c = 0; c < src.cols; ++c)
                        dst(nblk * dg + r, c) = src(blk * dg + r, c);
            }
            for (std::size_t r = 12 * dg; r < src.rows; ++r) // trailing z block
                for (std::size_t c = 0; c < src.cols; ++c) dst(r, c) = src(r, c);
            return dst;
        }();
        model2.params().by_name("layer0.bf" + std::to_string(pi(k))).value =
            model.params().by_name("layer0.bf" + std::to_string(k)).value;
    }
    model2.params().by_name("layer0.W").value = model.params().by_name("layer0.W").value;
    model2.params().by_name("layer0.Wf").value = model.params().by_name("layer0.Wf").value;
    model2.params().by_name("layer0.bf").value = model.params().by_name("layer0.bf").value;

    Tape t1, t2;
    auto b1 = model.params().bind(t1);
    auto b2 = model2.params().bind(t2);
    Matrix out1 = model.embed(t1, b1, s.prep, t1.constant(s.features)).to_matrix();
    Matrix out2 = model2.embed(t2, b2, swapped, t2.constant(s.features)).to_matrix();

    const std::size_t dp = 2;
    for (std::size_t i = 0; i < out1.rows; ++i)
        for (int k = 1; k <= 13; ++k)
            for (std::size_t j = 0; j < dp; ++j)
                REQUIRE(out1(i, (k - 1) * dp + j) ==
                        Catch::Approx(out2(i, (pi(k) - 1) * dp + j)).margin(1e-12));
}

TEST_CASE("layer_forward: node relabeling permutes output rows") {
    SmallSetup s(44, 6, 0.5);
    std::vector<std::size_t> perm = {2, 5, 0, 4, 1, 3};
    DirectedGraph pg = s.graph.permuted(perm);
    MotifMatrixStore pstore(pg);
    PreparedGraph pprep = prepare_graph(pstore, VariantSpec{});
    Matrix pf(6, 2);
    for (std::size_t v = 0; v < 6; ++v)
        for (std::size_t c = 0; c < 2; ++c) pf(perm[v], c) = s.features(v, c);

    MgnnModelConfig cfg;
    cfg.task = Task::LinkPrediction;
    cfg.input_dim = 2;
    cfg.d_gcn = {3};
    cfg.d_prime = 2;
    MgnnModel model(cfg, VariantSpec{}, 5);

    Tape t1, t2;
    auto b1 = model.params().bind(t1);
    auto b2 = model.params().bind(t2);
    Matrix out = model.embed(t1, b1, s.prep, t1.constant(s.features)).to_matrix();
    Matrix pout = model.embed(t2, b2, pprep, t2.constant(pf)).to_matrix();
    for (std::size_t v = 0; v < 6; ++v)
        for (std::size_t c = 0; c < out.cols; ++c)
            REQUIRE(out(v, c) == Catch::Approx(pout(perm[v], c)).margin(1e-9));
}

TEST_CASE("missing-motif contract: absent motifs aggregate to exact zeros") {
    // one bidirected triangle and one bidirected 4-cycle: the cycle nodes
    // have no M4 instance while the triangle keeps lambda(M4) > 0
    std::vector<Edge> edges;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
            if (a != b) edges.emplace_back(a, b);
    for (std::size_t i = 0; i < 4; ++i) {
        std::size_t j = 3 + ((i + 1) % 4);
        edges.emplace_back(3 + i, j);
        edges.emplace_back(j, 3 + i);
    }
    DirectedGraph g(7, edges);
    MotifMatrixStore store(g);
    REQUIRE(store.motif(4).lambda_max > 0.0);
    PreparedGraph prep = prepare_graph(store, VariantSpec{});

    Tape tape;
    Tensor z = tape.leaf(Matrix(7, 2, 1.0));
    Matrix h4 = motif_aggregate(prep.motif[3], prep.motif_mean[3], z, Aggregator::Sum).to_matrix();
    for (std::size_t v = 3; v < 7; ++v)
        for (std::size_t c = 0; c < 2; ++c) REQUIRE(h4(v, c) == 0.0);
    for (std::size_t c = 0; c < 2; ++c) REQUIRE(h4(0, c) != 0.0);
}

TEST_CASE("full model gradients match finite differences (compact case)") {
    SmallSetup s(45, 4, 0.5);
    MgnnModelConfig cfg;
    cfg.task = Task::NodeClassification;
    cfg.n_classes = 2;
    cfg.input_dim = 2;
    cfg.d_gcn = {2};
    cfg.d_prime = 2;
    MgnnModel model(cfg, VariantSpec{}, 3);
    std::vector<int> labels = {0, 1, 0, 1};
    auto f = [&](Tape& tape, const std::vector<Tensor>& p) {
        Tensor probs = model.predict_node(tape, p, s.prep, tape.constant(s.features));
        return ops::gather_nll(probs, {0, 1, 2, 3}, labels);
    };
    GradCheckResult r = grad_check(f, model.params());
    INFO("worst: " << r.worst_param);
    REQUIRE(r.max_rel_error < 1e-4);
}

TEST_CASE("attention alpha mode stays differentiable") {
    SmallSetup s(46, 4, 0.6);
    MgnnModelConfig cfg;
    cfg.task = Task::NodeClassification;
    cfg.n_classes = 2;
    cfg.input_dim = 2;
    cfg.d_gcn = {2};
    cfg.d_prime = 2;
    cfg.alpha_mode = AlphaMode::Attention;
    MgnnModel model(cfg, VariantSpec{}, 9);
    std::vector<int> labels = {1, 0, 1, 0};
    auto f = [&](Tape& tape, const std::vector<Tensor>& p) {
        Tensor probs = model.predict_node(tape, p, s.prep, tape.constant(s.features));
        return ops::gather_nll(probs, {0, 1, 2, 3}, labels);
    };
    REQUIRE(grad_check(f, model.params()).max_rel_error < 1e-4);
}

// ---------------------------------------------------------------------------
// Simplified layer and the Table-1 standard GNN.
// ---------------------------------------------------------------------------

TEST_CASE("simplified layer: zero alphas give a zero output") {
    DirectedGraph g = random_bidirected_min_bidegree2(6, 0.3, 1);
    census::MotifAdjacencySet counts = census::build_all(g, {});
    std::array<Matrix, 13> motifs, alphas;
    for (int k = 1; k <= 13; ++k) {
        motifs[k - 1] = counts.matrix(k).to_dense();
        alphas[k - 1] = Matrix(6, 6, 0.0);
    }
    auto rng = make_rng(2, "simple");
    Matrix h = rand_mat(6, 3, rng), w = rand_mat(3, 2, rng);
    Matrix out = simplified_layer_forward(g, motifs, alphas, h, w, Aggregator::Sum,
                                          PlainActivation::Relu);
    for (double v : out.data) REQUIRE(v == 0.0);
}

TEST_CASE("simplified layer: Lemma-1 emulation reproduces the standard GNN in block 13") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        DirectedGraph g = random_bidirected_min_bidegree2(8, 0.25, seed);
        census::MotifAdjacencySet counts = census::build_all(g, {});
        std::array<Matrix, 13> motifs, alphas;
        for (int k = 1; k <= 13; ++k) {
            motifs[k - 1] = counts.matrix(k).to_dense();
            alphas[k - 1] = Matrix(8, 8, 0.0);
        }
        // alpha_{13,vi} = A_vi / (A13)_vi on edges; zero elsewhere
        for (const auto& [u, v] : g.edges()) {
            REQUIRE(motifs[12](u, v) > 0.0); // premise: every edge in an M13 instance
            alphas[12](u, v) = 1.0 / motifs[12](u, v);
        }
        auto rng = make_rng(seed, "lemma1");
        Matrix h = rand_mat(8, 3, rng), w = rand_mat(3, 2, rng);
        for (Aggregator agg : {Aggregator::Sum, Aggregator::Mean, Aggregator::Max}) {
            Matrix simp = simplified_layer_forward(g, motifs, alphas, h, w, agg,
                                                   PlainActivation::Relu);
            Matrix std_out = standard_gnn_layer(g, h, w, agg, PlainActivation::Relu);
            for (std::size_t v = 0; v < 8; ++v)
                for (std::size_t c = 0; c < 2; ++c) {
                    REQUIRE(simp(v, 12 * 2 + c) ==
                            Catch::Approx(std_out(v, c)).margin(1e-9));
                }
            for (std::size_t v = 0; v < 8; ++v)
                for (std::size_t c = 0; c < 24; ++c) REQUIRE(simp(v, c) == 0.0);
        }
    }
}

TEST_CASE("interchange: concat-then-aggregate equals aggregate-then-concat") {
    auto rng = make_rng(10, "interchange");
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<std::size_t> nj(1, 7), nd(1, 5);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t j = nj(rng), d = nd(rng);
        // j tuples of 13 blocks of width d
        std::vector<std::vector<std::vector<double>>> tuples(
            j, std::vector<std::vector<double>>(13, std::vector<double>(d)));
        for (auto& t : tuples)
            for (auto& blk : t)
                for (double& v : blk) v = u(rng);
        for (Aggregator agg : {Aggregator::Sum, Aggregator::Mean, Aggregator::Max}) {
            auto aggregate = [&](const std::vector<std::vector<double>>& items) {
                std::vector<double> out(items[0].size(), 0.0);
                for (std::size_t c = 0; c < out.size(); ++c) {
                    double acc = items[0][c];
                    for (std::size_t i = 1; i < items.size(); ++i) {
                        if (agg == Aggregator::Max) acc = std::max(acc, items[i][c]);
                        else acc += items[i][c];
                    }
                    if (agg == Aggregator::Mean) acc /= static_cast<double>(items.size());
                    out[c] = acc;
                }
                return out;
            };
            // LHS: concatenate each tuple, then aggregate
            std::vector<std::vector<double>> concatenated;
            for (const auto& t : tuples) {
                std::vector<double> row;
                for (const auto& blk : t) row.insert(row.end(), blk.begin(), blk.end());
                concatenated.push_back(std::move(row));
            }
            std::vector<double> lhs = aggregate(concatenated);
            // RHS: aggregate per block, then concatenate
            std::vector<double> rhs;
            for (int k = 0; k < 13; ++k) {
                std::vector<std::vector<double>> blocks;
                for (const auto& t : tuples) blocks.push_back(t[k]);
                auto a = aggregate(blocks);
                rhs.insert(rhs.end(), a.begin(), a.end());
            }
            for (std::size_t c = 0; c < lhs.size(); ++c)
                REQUIRE(std::abs(lhs[c] - rhs[c]) <= 1e-12);
        }
    }
}

TEST_CASE("injectivity: concat preserves blocks; sum/mean/max collide") {
    // Fig. 1(d): node A blocks (6, 0), node B blocks (3, 3)
    std::vector<double> a = {6, 0}, b = {3, 3};
    REQUIRE(a != b);                      // concat keeps them apart
    REQUIRE(a[0] + a[1] == b[0] + b[1]);  // sum collides
    REQUIRE((a[0] + a[1]) / 2 == (b[0] + b[1]) / 2); // mean collides
    std::vector<double> c = {6, 6}, d = {6, 0};
    REQUIRE(std::max(c[0], c[1]) == std::max(d[0], d[1])); // max collides
    REQUIRE(c != d);
}

TEST_CASE("readout_sum: single node, permutation invariance, additivity") {
    Matrix h = mat({{1, 2, 3}});
    REQUIRE(readout_sum(h).data == std::vector<double>{1, 2, 3});

    auto rng = make_rng(8, "readout");
    Matrix big = rand_mat(6, 4, rng);
    Matrix perm(6, 4);
    std::vector<std::size_t> p = {3, 1, 5, 0, 4, 2};
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 4; ++j) perm(p[i], j) = big(i, j);
    REQUIRE(max_abs_diff(readout_sum(big), readout_sum(perm)) < 1e-12);

    Matrix doubled(12, 4);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 4; ++j) doubled(i, j) = big(i % 6, j);
    Matrix r1 = readout_sum(big), r2 = readout_sum(doubled);
    for (std::size_t j = 0; j < 4; ++j) REQUIRE(r2(0, j) == Catch::Approx(2 * r1(0, j)));
}

TEST_CASE("predict: softmax of zero logits and zero-embedding link score") {
    SmallSetup s(47, 4, 0.5);
    MgnnModelConfig cfg;
    cfg.task = Task::NodeClassification;
    cfg.n_classes = 2;
    cfg.input_dim = 2;
    cfg.d_gcn = {2};
    cfg.d_prime = 2;
    MgnnModel model(cfg, VariantSpec{}, 21);
    for (std::size_t i = 0; i < model.params().size(); ++i)
        for (double& v : model.params().at(i).value.data) v = 0.0;
    Tape tape;
    auto bound = model.params().bind(tape);
    Matrix probs = model.predict_node(tape, bound, s.prep, tape.constant(s.features)).to_matrix();
    for (std::size_t i = 0; i < probs.rows; ++i) {
        REQUIRE(probs(i, 0) == Catch::Approx(0.5));
        REQUIRE(probs(i, 1) == Catch::Approx(0.5));
    }

    MgnnModelConfig lcfg = cfg;
    lcfg.task = Task::LinkPrediction;
    MgnnModel lmodel(lcfg, VariantSpec{}, 22);
    for (std::size_t i = 0; i < lmodel.params().size(); ++i)
        for (double& v : lmodel.params().at(i).value.data) v = 0.0;
    Tape t2;
    auto b2 = lmodel.params().bind(t2);
    Matrix score =
        lmodel.predict_link(t2, b2, s.prep, t2.constant(s.features), {{0, 1}}).to_matrix();
    REQUIRE(score(0, 0) == Catch::Approx(0.5));
}

TEST_CASE("predict: softmax rows are normalized") {
    SmallSetup s(48, 5, 0.4);
    MgnnModelConfig cfg;
    cfg.task = Task::NodeClassification;
    cfg.n_classes = 4;
    cfg.input_dim = 2;
    cfg.d_gcn = {3};
    cfg.d_prime = 2;
    MgnnModel model(cfg, VariantSpec{}, 31);
    Tape tape;
    auto bound = model.params().bind(tape);
    Matrix probs = model.predict_node(tape, bound, s.prep, tape.constant(s.features)).to_matrix();
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < probs.cols; ++j) sum += probs(i, j);
        REQUIRE(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("graph head: three fully connected layers after sum readout") {
    DirectedGraph g1 = random_digraph(5, 0.4, 61);
    DirectedGraph g2 = random_digraph(6, 0.4, 62);
    MotifMatrixStore s1(g1), s2(g2);
    PreparedGraph p1 = prepare_graph(s1, VariantSpec{}), p2 = prepare_graph(s2, VariantSpec{});
    auto rng = make_rng(63, "graphf");
    Matrix f1 = rand_mat(5, 2, rng), f2 = rand_mat(6, 2, rng);

    MgnnModelConfig cfg;
    cfg.task = Task::GraphClassification;
    cfg.n_classes = 3;
    cfg.input_dim = 2;
    cfg.d_gcn = {2};
    cfg.d_prime = 2;
    MgnnModel model(cfg, VariantSpec{}, 64);
    REQUIRE(model.params().has("head.W3"));
    Tape tape;
    auto bound = model.params().bind(tape);
    Matrix probs = model.predict_graph(tape, bound, {&p1, &p2},
                                       {tape.constant(f1), tape.constant(f2)})
                       .to_matrix();
    REQUIRE(probs.rows == 2);
    REQUIRE(probs.cols == 3);
    for (std::size_t i = 0; i < 2; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 3; ++j) sum += probs(i, j);
        REQUIRE(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("per_motif_block_stats: pinned cases and a random oracle") {
    Matrix zero(2, 26, 0.0);
    BlockStats s = per_motif_block_stats(zero);
    for (double v : s.l2.data) REQUIRE(v == 0.0);

    Matrix onehot(1, 26, 0.0);
    onehot(0, 4) = 1.0; // block 2 (width 2), second dim
    BlockStats s2 = per_motif_block_stats(onehot);
    REQUIRE(s2.l2(0, 2) == 1.0);
    REQUIRE(s2.nonzero_dims(0, 2) == 1.0);
    REQUIRE(s2.l2(0, 0) == 0.0);

    auto rng = make_rng(70, "blockstats");
    Matrix h = rand_mat(4, 39, rng);
    BlockStats s3 = per_motif_block_stats(h);
    for (std::size_t i = 0; i < 4; ++i)
        for (int k = 0; k < 13; ++k) {
            double sq = 0.0;
            int nz = 0;
            for (int j = 0; j < 3; ++j) {
                double v = h(i, k * 3 + j);
                sq += v * v;
                if (v != 0.0) ++nz;
            }
            REQUIRE(s3.l2(i, k) == Catch::Approx(std::sqrt(sq)));
            REQUIRE(s3.nonzero_dims(i, k) == nz);
        }

    REQUIRE_THROWS_WITH(per_motif_block_stats(Matrix(2, 27, 0.0)),
                        Catch::Matchers::ContainsSubstring("divisible"));
}

TEST_CASE("variant parsing") {
    REQUIRE(VariantSpec::parse("full").kind == VariantKind::Full);
    REQUIRE(VariantSpec::parse("combiner:concat").kind == VariantKind::Full);
    REQUIRE(VariantSpec::parse("no-motif").kind == VariantKind::NoMotif);
    REQUIRE(VariantSpec::parse("no-delta").kind == VariantKind::NoDelta);
    REQUIRE(VariantSpec::parse("combiner:max").kind == VariantKind::CombineMax);
    VariantSpec sm = VariantSpec::parse("single-motif:3");
    REQUIRE(sm.kind == VariantKind::SingleMotif);
    REQUIRE(sm.single_motif == 3);
    REQUIRE(sm.name() == "single-motif(M3)");
    REQUIRE_THROWS(VariantSpec::parse("bogus"));
}

TEST_CASE("variant output dimensions chain across layers") {
    MgnnModelConfig cfg;
    cfg.task = Task::LinkPrediction;
    cfg.input_dim = 3;
    cfg.d_gcn = {4, 5};
    cfg.d_prime = 2;
    REQUIRE(MgnnModel(cfg, VariantSpec{}, 1).embedding_dim() == 26);
    REQUIRE(MgnnModel(cfg, VariantSpec::parse("no-delta"), 1).embedding_dim() == 65);
    REQUIRE(MgnnModel(cfg, VariantSpec::parse("no-motif"), 1).embedding_dim() == 5);
    REQUIRE(MgnnModel(cfg, VariantSpec::parse("combiner:sum"), 1).embedding_dim() == 2);
}

TEST_CASE("model config parses from key=value text") {
    std::istringstream ss("task=graph\nn_c=5\nd_gcn=16,5,5\nd_prime=6\nagg=max\n"
                          "alpha_mode=constant-1\nsigma_beta=tanh\n");
    KvConfig kv = parse_kv(ss);
    MgnnModelConfig cfg = MgnnModelConfig::from_kv(kv);
    REQUIRE(cfg.task == Task::GraphClassification);
    REQUIRE(cfg.n_classes == 5);
    REQUIRE(cfg.d_gcn == std::vector<std::size_t>{16, 5, 5});
    REQUIRE(cfg.d_prime == 6);
    REQUIRE(cfg.agg == Aggregator::Max);
    REQUIRE(cfg.sigma_beta == BetaActivation::Tanh);
}
