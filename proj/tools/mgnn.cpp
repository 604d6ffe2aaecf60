// mgnn: census, training, expressiveness and benchmark runs with JSON reports.
//
// Exit codes: 0 success, 1 verification/assertion failure, 2 usage or IO error.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mgnn/census.hpp"
#include "mgnn/checkpoint.hpp"
#include "mgnn/expressiveness.hpp"
#include "mgnn/graph.hpp"
#include "mgnn/kvconfig.hpp"
#include "mgnn/model.hpp"
#include "mgnn/synthetic.hpp"
#include "mgnn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct VerificationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stoull(tok));
    if (out.empty()) throw std::runtime_error("empty seed list");
    return out;
}

unsigned resolve_threads(unsigned flag_value) {
    if (const char* env = std::getenv("MGNN_THREADS")) return static_cast<unsigned>(std::stoul(env));
    return flag_value;
}

void write_json(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(1) << "\n";
}

mgnn::LoadMode parse_mode(const std::string& s) {
    if (s == "directed") return mgnn::LoadMode::Directed;
    if (s == "bidirected") return mgnn::LoadMode::UndirectedAsBidirected;
    throw std::runtime_error("unknown --mode: " + s);
}

// ---------------------------------------------------------------------------

struct CensusArgs {
    std::string graph_path;
    std::string mode = "directed";
    bool allow_self_loops = false;
    std::string semantics = "hybrid";
    std::string orientation = "symmetric";
    bool verify = false;
    std::size_t verify_cap = 200;
    std::string out = "census-out";
    unsigned threads = 1;
};

int run_census(const CensusArgs& a) {
    if (!fs::exists(a.graph_path)) {
        std::cerr << "error: no such file: " << a.graph_path << "\n";
        return 2;
    }
    mgnn::DirectedGraph g =
        mgnn::load_edge_list(a.graph_path, parse_mode(a.mode), a.allow_self_loops);
    mgnn::census::CensusConfig cfg;
    cfg.semantics = mgnn::census::semantics_from_name(a.semantics);
    cfg.orientation = mgnn::census::orientation_from_name(a.orientation);
    cfg.verify_with_oracle = a.verify;
    cfg.oracle_cap = a.verify_cap;

    mgnn::census::MotifAdjacencySet set;
    try {
        set = mgnn::census::build_all(g, cfg, resolve_threads(a.threads));
    } catch (const mgnn::census::CensusMismatchError& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return 1;
    }

    fs::create_directories(a.out);
    json report;
    report["graph"] = a.graph_path;
    report["nodes"] = g.node_count();
    report["edges"] = g.edge_count();
    report["config"] = {{"mode", a.mode},
                        {"semantics", a.semantics},
                        {"orientation", a.orientation},
                        {"verify", a.verify},
                        {"verify_cap", a.verify_cap},
                        {"allow_self_loops", a.allow_self_loops}};
    json per_motif = json::array();
    for (int k = 1; k <= 13; ++k) {
        char name[16];
        std::snprintf(name, sizeof(name), "A%02d.coo", k);
        fs::path p = fs::path(a.out) / name;
        const auto& info = set.info[k - 1];
        mgnn::census::save_count_matrix(p.string(), set.matrix(k), k, info.semantics,
                                        info.orientation);
        per_motif.push_back({{"motif", "M" + std::to_string(k)},
                             {"method", info.method},
                             {"seconds", info.seconds},
                             {"nnz", set.matrix(k).nnz()},
                             {"semantics", mgnn::census::semantics_name(info.semantics)},
                             {"file", name}});
    }
    report["motifs"] = per_motif;
    report["verified"] = a.verify && g.node_count() <= a.verify_cap;
    write_json(fs::path(a.out) / "census_report.json", report);
    std::cout << "census written to " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string task = "node";
    std::string graph_path;
    std::string manifest_path;
    std::string features_path;
    std::string labels_path;
    std::string splits_path;
    std::string config_path;
    std::string mode = "directed";
    bool allow_self_loops = false;
    std::string variant = "full";
    std::string seeds = "1";
    std::uint64_t split_seed = 0;
    std::size_t folds = 5;
    std::string out = "train-out";
};

mgnn::KvConfig echo_config(const TrainArgs& a, const mgnn::KvConfig& file_kv) {
    mgnn::KvConfig echo = file_kv;
    echo["task"] = a.task;
    echo["variant"] = a.variant;
    echo["mode"] = a.mode;
    if (!a.graph_path.empty()) echo["graph"] = a.graph_path;
    if (!a.manifest_path.empty()) echo["manifest"] = a.manifest_path;
    if (!a.features_path.empty()) echo["features"] = a.features_path;
    if (!a.labels_path.empty()) echo["labels"] = a.labels_path;
    if (!a.splits_path.empty()) echo["splits"] = a.splits_path;
    echo["seeds"] = a.seeds;
    echo["split_seed"] = std::to_string(a.split_seed);
    return echo;
}

json aggregate_reports(const std::vector<mgnn::MetricReport>& reports,
                       const mgnn::KvConfig& echo) {
    auto stats = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size());
        return std::pair{mean, std::sqrt(var)};
    };
    json agg;
    std::vector<double> accs, aucs;
    double wall = 0.0;
    json per_seed = json::array();
    for (const auto& r : reports) {
        if (std::isfinite(r.accuracy)) accs.push_back(r.accuracy);
        if (std::isfinite(r.auroc)) aucs.push_back(r.auroc);
        wall += r.wall_clock_s;
        per_seed.push_back(r.to_json(true));
    }
    if (!accs.empty()) {
        auto [m, s] = stats(accs);
        agg["accuracy_mean"] = m;
        agg["accuracy_std"] = s;
    }
    if (!aucs.empty()) {
        auto [m, s] = stats(aucs);
        agg["auroc_mean"] = m;
        agg["auroc_std"] = s;
    }
    agg["wall_clock_s"] = wall;
    agg["runs"] = per_seed;
    agg["config"] = echo;
    return agg;
}

int run_train(const TrainArgs& a) {
    using namespace mgnn;
    KvConfig file_kv = a.config_path.empty() ? KvConfig{} : load_kv_config(a.config_path);
    TrainConfig tcfg = TrainConfig::from_kv(file_kv);
    VariantSpec variant = VariantSpec::parse(a.variant);
    std::vector<std::uint64_t> seeds = parse_seed_list(a.seeds);
    KvConfig echo = echo_config(a, file_kv);
    fs::create_directories(a.out);

    std::vector<MetricReport> reports;
    Task task = task_from_name(a.task);

    if (task == Task::NodeClassification || task == Task::LinkPrediction) {
        if (a.graph_path.empty()) throw std::runtime_error("--graph is required for this task");
        DirectedGraph g = load_edge_list(a.graph_path, parse_mode(a.mode), a.allow_self_loops);

        if (task == Task::NodeClassification) {
            Matrix features = a.features_path.empty() ? degree_stat_features(g)
                                                      : load_csv_matrix(a.features_path);
            if (a.labels_path.empty()) throw std::runtime_error("--labels is required");
            LabelSet labels = load_labels_csv(a.labels_path, LabelKind::Node);
            SplitSpec split;
            if (!a.splits_path.empty()) {
                split = load_splits_json(a.splits_path);
            } else {
                // stratified 60/20/20 from the split seed
                auto rng = make_rng(a.split_seed, "cli-node-split");
                std::map<int, std::vector<std::size_t>> by_class;
                for (std::size_t i = 0; i < labels.labels.size(); ++i)
                    by_class[labels.labels[i]].push_back(i);
                for (auto& [cls, idx] : by_class) {
                    std::shuffle(idx.begin(), idx.end(), rng);
                    for (std::size_t i = 0; i < idx.size(); ++i) {
                        if (i * 5 < idx.size()) split.test.push_back(idx[i]);
                        else if (i * 5 < 2 * idx.size()) split.val.push_back(idx[i]);
                        else split.train.push_back(idx[i]);
                    }
                }
            }
            MgnnModelConfig mcfg = MgnnModelConfig::from_kv(file_kv);
            mcfg.task = task;
            mcfg.input_dim = features.cols;
            mcfg.n_classes = labels.n_classes;
            MotifMatrixStore store(g);
            PreparedGraph prep = prepare_graph(store, variant);
            for (std::size_t r = 0; r < seeds.size(); ++r) {
                TrainConfig cfg = tcfg;
                cfg.seed = seeds[r];
                MgnnModel model(mcfg, variant, cfg.seed);
                MetricReport rep = train_node(model, prep, features, labels, split, cfg);
                rep.config_echo = echo;
                reports.push_back(rep);
                write_json(fs::path(a.out) / ("report_run" + std::to_string(r) + "_seed" +
                                              std::to_string(cfg.seed) + ".json"),
                           rep.to_json(false));
                save_checkpoint(model.params(), (fs::path(a.out) / ("checkpoint_run" +
                                                                    std::to_string(r) + ".json"))
                                                    .string());
            }
        } else {
            double tr = kv_get_double(file_kv, "edge_train_ratio", 0.85);
            double vr = kv_get_double(file_kv, "edge_val_ratio", 0.05);
            double te = kv_get_double(file_kv, "edge_test_ratio", 0.10);
            LinkData data = make_link_data(g, variant, tr, vr, te, a.split_seed);
            DirectedGraph train_graph(g.node_count(), data.train_pos, g.allow_self_loops());
            Matrix features = a.features_path.empty() ? degree_stat_features(train_graph)
                                                      : load_csv_matrix(a.features_path);
            MgnnModelConfig mcfg = MgnnModelConfig::from_kv(file_kv);
            mcfg.task = task;
            mcfg.input_dim = features.cols;
            for (std::size_t r = 0; r < seeds.size(); ++r) {
                TrainConfig cfg = tcfg;
                cfg.seed = seeds[r];
                MgnnModel model(mcfg, variant, cfg.seed);
                MetricReport rep = train_link(model, data, features, cfg);
                rep.config_echo = echo;
                reports.push_back(rep);
                write_json(fs::path(a.out) / ("report_run" + std::to_string(r) + "_seed" +
                                              std::to_string(cfg.seed) + ".json"),
                           rep.to_json(false));
            }
        }
    } else { // graph classification
        if (a.manifest_path.empty())
            throw std::runtime_error("--manifest is required for the graph task");
        std::ifstream mf(a.manifest_path);
        if (!mf) throw std::runtime_error("cannot open manifest: " + a.manifest_path);
        std::vector<DirectedGraph> graphs;
        std::vector<Matrix> features;
        std::string line;
        while (std::getline(mf, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string gpath, fpath;
            ls >> gpath >> fpath;
            DirectedGraph g = load_edge_list(gpath, parse_mode(a.mode), a.allow_self_loops);
            Matrix f = (fpath.empty() || fpath == "-") ? degree_stat_features(g)
                                                       : load_csv_matrix(fpath);
            graphs.push_back(std::move(g));
            features.push_back(std::move(f));
        }
        if (a.labels_path.empty()) throw std::runtime_error("--labels is required");
        LabelSet labels = load_labels_csv(a.labels_path, LabelKind::Graph);
        if (labels.labels.size() != graphs.size())
            throw std::runtime_error("label count does not match manifest graph count");

        MgnnModelConfig mcfg = MgnnModelConfig::from_kv(file_kv);
        mcfg.task = task;
        mcfg.input_dim = features.at(0).cols;
        mcfg.n_classes = labels.n_classes;

        std::vector<PreparedGraph> prepared;
        for (const auto& g : graphs) {
            MotifMatrixStore store(g);
            prepared.push_back(prepare_graph(store, variant));
        }

        std::vector<SplitSpec> folds;
        if (!a.splits_path.empty())
            folds.push_back(load_splits_json(a.splits_path));
        else
            folds = stratified_folds(labels.labels, a.folds, a.split_seed);

        for (std::size_t r = 0; r < seeds.size(); ++r) {
            TrainConfig cfg = tcfg;
            cfg.seed = seeds[r];
            std::vector<double> fold_acc;
            MetricReport rep;
            for (std::size_t f = 0; f < folds.size(); ++f) {
                MgnnModel model(mcfg, variant, derive_seed(cfg.seed, "fold/" + std::to_string(f)));
                MetricReport fr = train_graph(model, prepared, features, labels, folds[f], cfg);
                fold_acc.push_back(fr.accuracy);
                if (f == 0) rep = fr;
                rep.wall_clock_s += (f == 0 ? 0.0 : fr.wall_clock_s);
            }
            double mean = 0.0;
            for (double x : fold_acc) mean += x;
            rep.accuracy = mean / static_cast<double>(fold_acc.size());
            rep.seed = cfg.seed;
            rep.config_echo = echo;
            rep.config_echo["folds"] = std::to_string(folds.size());
            reports.push_back(rep);
            write_json(fs::path(a.out) / ("report_run" + std::to_string(r) + "_seed" +
                                          std::to_string(cfg.seed) + ".json"),
                       rep.to_json(false));
        }
    }

    write_json(fs::path(a.out) / "aggregate.json", aggregate_reports(reports, echo));
    for (const auto& r : reports)
        std::cout << "seed " << r.seed << ": "
                  << (std::isfinite(r.accuracy) ? "accuracy=" + std::to_string(r.accuracy) : "")
                  << (std::isfinite(r.auroc) ? " auroc=" + std::to_string(r.auroc) : "")
                  << " epochs=" << r.epochs_run << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct ExpressivenessArgs {
    std::string pair = "lemma2";
    std::string model = "gcn";
    std::string seeds = "1,2,3,4,5";
    double tol_gcn = 1e-9;
    double tol_mgnn = 1e-6;
    std::string out = "expressiveness-out";
};

int run_expressiveness(const ExpressivenessArgs& a) {
    using namespace mgnn;
    GraphPair pair = a.pair == "lemma2" ? build_lemma2_pair()
                     : a.pair == "fig1" ? build_fig1_pair()
                                        : throw std::runtime_error("unknown pair: " + a.pair);
    ExModel model = a.model == "gcn"    ? ExModel::Gcn
                    : a.model == "mgnn" ? ExModel::Mgnn
                                        : throw std::runtime_error("unknown model: " + a.model);
    double tol = model == ExModel::Gcn ? a.tol_gcn : a.tol_mgnn;
    DistinguishReport rep = distinguish(model, pair, parse_seed_list(a.seeds), tol);
    json j = rep.to_json();
    j["config"] = {{"pair", a.pair}, {"model", a.model}, {"seeds", a.seeds}, {"tol", tol}};
    write_json(fs::path(a.out) / "distinguish_report.json", j);
    std::cout << a.model << " on " << a.pair << ": " << rep.verdict_name()
              << " (max distance " << rep.max_distance << ")\n";
    Verdict expected = model == ExModel::Gcn ? Verdict::Indistinguishable
                                             : Verdict::Distinguishable;
    return rep.verdict == expected ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
    std::size_t nodes = 2000;
    double avg_degree = 4.0;
    std::uint64_t seed = 1;
    std::string out = "bench-out";
};

int run_bench(const BenchArgs& a) {
    using namespace mgnn;
    if (a.nodes < 10) throw std::runtime_error("--nodes must be >= 10");
    DirectedGraph g = random_digraph_avg_degree(a.nodes, a.avg_degree, a.seed);

    census::CensusConfig oracle_cfg;
    oracle_cfg.semantics = census::Semantics::EdgeSubset;
    auto t0 = std::chrono::steady_clock::now();
    SparseMatrix oracle = census::motif_adjacency_oracle(g, 13, oracle_cfg);
    auto t1 = std::chrono::steady_clock::now();
    SparseMatrix fast = census::open_motif_adjacency_fast(g, 13);
    auto t2 = std::chrono::steady_clock::now();

    double oracle_s = std::chrono::duration<double>(t1 - t0).count();
    double fast_s = std::chrono::duration<double>(t2 - t1).count();
    bool equal = oracle == fast;
    json j{{"nodes", a.nodes},
           {"avg_degree", a.avg_degree},
           {"seed", a.seed},
           {"motif", "M13"},
           {"enumerate_s", oracle_s},
           {"non_enumerate_s", fast_s},
           {"speedup", fast_s > 0.0 ? oracle_s / fast_s : 0.0},
           {"outputs_equal", equal},
           {"config", {{"nodes", a.nodes}, {"avg_degree", a.avg_degree}, {"seed", a.seed}}}};
    write_json(fs::path(a.out) / "bench_report.json", j);
    std::cout << "enumerate " << oracle_s << " s, non-enumerate " << fast_s << " s, speedup "
              << (fast_s > 0.0 ? oracle_s / fast_s : 0.0) << "x\n";
    if (!equal) {
        std::cerr << "bench outputs differ between paths\n";
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct GenPlantedArgs {
    std::size_t components = 40;
    std::uint64_t seed = 1;
    std::string out = "planted";
};

int run_gen_planted(const GenPlantedArgs& a) {
    using namespace mgnn;
    PlantedDataset ds = make_planted_triangle_dataset(a.components, a.seed);
    fs::create_directories(a.out);
    save_edge_list(ds.graph, (fs::path(a.out) / "edges.tsv").string());
    {
        std::ofstream f(fs::path(a.out) / "features.csv");
        for (std::size_t i = 0; i < ds.features.rows; ++i) f << ds.features(i, 0) << "\n";
        std::ofstream l(fs::path(a.out) / "labels.csv");
        for (int lab : ds.labels.labels) l << lab << "\n";
    }
    json splits{{"train", ds.split.train}, {"val", ds.split.val}, {"test", ds.split.test}};
    write_json(fs::path(a.out) / "splits.json", splits);
    json meta{{"components", a.components},
              {"seed", a.seed},
              {"nodes", ds.graph.node_count()},
              {"edges", ds.graph.edge_count()}};
    write_json(fs::path(a.out) / "meta.json", meta);
    std::cout << "planted dataset with " << ds.graph.node_count() << " nodes written to " << a.out
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Motif graph neural network toolkit"};
    app.require_subcommand(1);

    CensusArgs census_args;
    auto* census = app.add_subcommand("census", "Build the 13 motif adjacency matrices");
    census->add_option("graph", census_args.graph_path, "edge list path")->required();
    census->add_option("--mode", census_args.mode, "directed|bidirected");
    census->add_flag("--allow-self-loops", census_args.allow_self_loops);
    census->add_option("--semantics", census_args.semantics, "hybrid|edge-subset|node-induced");
    census->add_option("--orientation", census_args.orientation, "symmetric|directional");
    census->add_flag("--verify", census_args.verify, "check fast paths against the oracle");
    census->add_option("--verify-cap", census_args.verify_cap);
    census->add_option("--out", census_args.out);
    census->add_option("--threads", census_args.threads);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train and evaluate a model");
    train->add_option("--task", train_args.task, "node|graph|link")->required();
    train->add_option("--graph", train_args.graph_path);
    train->add_option("--manifest", train_args.manifest_path);
    train->add_option("--features", train_args.features_path);
    train->add_option("--labels", train_args.labels_path);
    train->add_option("--splits", train_args.splits_path);
    train->add_option("--config", train_args.config_path);
    train->add_option("--mode", train_args.mode, "directed|bidirected");
    train->add_flag("--allow-self-loops", train_args.allow_self_loops);
    train->add_option("--variant", train_args.variant);
    train->add_option("--seeds", train_args.seeds);
    train->add_option("--split-seed", train_args.split_seed);
    train->add_option("--folds", train_args.folds);
    train->add_option("--out", train_args.out);

    ExpressivenessArgs ex_args;
    auto* ex = app.add_subcommand("expressiveness", "Run the distinguishability tester");
    ex->add_option("--pair", ex_args.pair, "fig1|lemma2");
    ex->add_option("--model", ex_args.model, "gcn|mgnn");
    ex->add_option("--seeds", ex_args.seeds);
    ex->add_option("--tol-gcn", ex_args.tol_gcn);
    ex->add_option("--tol-mgnn", ex_args.tol_mgnn);
    ex->add_option("--out", ex_args.out);

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "Enumerate vs non-enumerate M13 timing");
    bench->add_option("--nodes", bench_args.nodes);
    bench->add_option("--avg-degree", bench_args.avg_degree);
    bench->add_option("--seed", bench_args.seed);
    bench->add_option("--out", bench_args.out);

    GenPlantedArgs gen_args;
    auto* gen = app.add_subcommand("gen-planted", "Write the planted-triangle dataset");
    gen->add_option("--components", gen_args.components);
    gen->add_option("--seed", gen_args.seed);
    gen->add_option("--out", gen_args.out);

    std::string remap_in, remap_out, remap_map;
    auto* remap = app.add_subcommand("remap", "Densify arbitrary string node ids");
    remap->add_option("--in", remap_in)->required();
    remap->add_option("--out", remap_out)->required();
    remap->add_option("--map", remap_map)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (census->parsed()) return run_census(census_args);
        if (train->parsed()) return run_train(train_args);
        if (ex->parsed()) return run_expressiveness(ex_args);
        if (bench->parsed()) return run_bench(bench_args);
        if (gen->parsed()) return run_gen_planted(gen_args);
        if (remap->parsed()) {
            mgnn::remap_edge_list(remap_in, remap_out, remap_map);
            return 0;
        }
    } catch (const VerificationFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const mgnn::census::CensusMismatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
