#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "mapcull/config.hpp"
#include "mapcull/eval.hpp"
#include "mapcull/graph_io.hpp"
#include "mapcull/svgplot.hpp"

namespace fs = std::filesystem;
using namespace mapcull;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
};

// Files created by the running command; removed if it throws.
std::vector<std::string> g_outputs;

void track(const std::string& path) { g_outputs.push_back(path); }

void cleanup_outputs() {
    for (const auto& p : g_outputs) {
        std::error_code ec;
        fs::remove(p, ec);
    }
}

PipelineConfig load_config(const CommonOpts& common) {
    PipelineConfig cfg;
    if (!common.config_path.empty()) cfg = PipelineConfig::load(common.config_path);
    for (const auto& kv : common.overrides) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

std::string prov(const PipelineConfig& cfg) {
    return "config " + cfg.hash_hex() + " seed " + std::to_string(cfg.seed);
}

void add_common(CLI::App* cmd, CommonOpts& common) {
    cmd->add_option("--config", common.config_path, "key=value config file");
    cmd->add_option("--set", common.overrides, "config override key=value (repeatable)");
}

std::ofstream open_out(const std::string& path, const PipelineConfig& cfg) {
    track(path);
    std::ofstream out(path);
    if (!out) throw DataError("cannot open output " + path);
    out << "# " << prov(cfg) << "\n";
    return out;
}

Eigen::VectorXd read_scores_csv(const std::string& path, int num_points) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open scores file " + path);
    Eigen::VectorXd scores = Eigen::VectorXd::Zero(num_points);
    std::vector<bool> seen(num_points, false);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("point_id", 0) == 0) continue;
        const size_t c = line.find(',');
        if (c == std::string::npos) throw DataError("bad scores row: " + line);
        const int id = std::stoi(line.substr(0, c));
        if (id < 0 || id >= num_points) throw DataError("score for unknown point " + line);
        scores[id] = std::stod(line.substr(c + 1));
        seen[id] = true;
    }
    for (int i = 0; i < num_points; ++i)
        if (!seen[i]) throw DataError("scores file missing point " + std::to_string(i));
    return scores;
}

std::vector<uint8_t> read_selection_csv(const std::string& path, int num_points) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open selection file " + path);
    std::vector<uint8_t> sel(num_points, 0);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("point_id", 0) == 0) continue;
        const int id = std::stoi(line);
        if (id < 0 || id >= num_points) throw DataError("selection names unknown point " + line);
        sel[id] = 1;
    }
    return sel;
}

void write_selection_csv(const std::string& path, const PipelineConfig& cfg,
                         const std::vector<uint8_t>& sel) {
    auto out = open_out(path, cfg);
    out << "point_id\n";
    for (size_t i = 0; i < sel.size(); ++i)
        if (sel[i]) out << i << "\n";
}

KCoverSolution solve_instance(const KCoverInstance& inst, int exact_cap) {
    if (inst.num_cols <= exact_cap) return solve_exact(inst, exact_cap);
    return solve_greedy(inst);
}

int cmd_generate(const CommonOpts& common, const std::string& out_dir) {
    PipelineConfig cfg = load_config(common);
    SyntheticWorld world = generate_world(cfg.world, cfg.seed);
    fs::create_directories(out_dir);
    {
        auto out = open_out(out_dir + "/config.txt", cfg);
        out << cfg.canonical();
    }
    auto out = open_out(out_dir + "/world_stats.csv", cfg);
    out << "key,value\n";
    int by_class[3] = {0, 0, 0};
    int invalidated = 0;
    for (const auto& p : world.points) {
        by_class[static_cast<int>(p.cls)]++;
        if (!p.validity[cfg.world.map_sessions]) invalidated++;
    }
    out << "points," << world.points.size() << "\n"
        << "stable," << by_class[0] << "\n"
        << "seasonal," << by_class[1] << "\n"
        << "repetitive," << by_class[2] << "\n"
        << "invalidated_at_query," << invalidated << "\n"
        << "map_images," << world.map_images.size() << "\n"
        << "query_images," << world.query_images.size() << "\n";
    return 0;
}

int cmd_build(const CommonOpts& common, const std::string& out_path) {
    PipelineConfig cfg = load_config(common);
    SyntheticWorld world = generate_world(cfg.world, cfg.seed);
    MapGraph graph = build_map_graph(world, cfg.knn_k, cfg.seed);
    apply_training_overlay(graph, world, cfg.seed);
    track(out_path);
    track(out_path + ".meta");
    save_graph(graph, out_path);
    auto out = open_out(out_path + ".prov", cfg);
    return 0;
}

int cmd_label(const CommonOpts& common, const std::string& graph_path,
              const std::string& out_path) {
    PipelineConfig cfg = load_config(common);
    MapGraph graph = load_graph(graph_path);
    generate_labels(graph, cfg.cover_b, cfg.cover_n, cfg.exact_cap);
    track(out_path);
    track(out_path + ".meta");
    save_graph(graph, out_path);
    auto out = open_out(out_path + ".prov", cfg);
    return 0;
}

int cmd_train(const CommonOpts& common, const std::string& graph_path,
              const std::string& out_dir) {
    PipelineConfig cfg = load_config(common);
    MapGraph graph = load_graph(graph_path);
    SyntheticWorld world = generate_world(cfg.world, cfg.seed);
    std::vector<WorldImage> valid_queries;
    {
        int idx = 0;
        for (const auto& im : world.query_images) {
            if (im.camera_id != 0) continue;
            if (cfg.world.valid_every > 0 &&
                idx % cfg.world.valid_every == cfg.world.valid_every - 1)
                valid_queries.push_back(im);
            idx++;
        }
    }

    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.optim = cfg.optim_config();
    tc.loss = cfg.loss_config();
    tc.scorer = cfg.scorer_config();
    tc.seed = cfg.seed;
    tc.out_dir = out_dir;
    const int vb = std::min(cfg.validation_budget, static_cast<int>(graph.points.size()));
    tc.validation = [&](const ScorerModel& m) {
        Eigen::VectorXd scores = predict_scores_full(m, graph);
        auto sel = sparsify_by_scores(scores, vb, cfg.score_threshold, cfg.seed);
        auto rec = evaluate_recall(world, graph, sel, valid_queries,
                                   cfg.seed ^ 0x5851F42D4C957F2DULL);
        return rec.recall[0];
    };
    fs::create_directories(out_dir);
    TrainResult res = train(graph, tc);

    track(out_dir + "/model.bin");
    save_checkpoint(res.best, out_dir + "/model.bin");
    {
        auto out = open_out(out_dir + "/model.bin.prov", cfg);
        out << "best_epoch " << res.best_epoch << "\n";
    }
    auto out = open_out(out_dir + "/metrics.csv", cfg);
    for (const auto& line : res.metrics_csv) out << line << "\n";
    return 0;
}

int cmd_score(const CommonOpts& common, const std::string& graph_path,
              const std::string& model_path, const std::string& out_path) {
    PipelineConfig cfg = load_config(common);
    MapGraph graph = load_graph(graph_path);
    ScorerModel model = load_checkpoint(model_path);
    Eigen::VectorXd scores = predict_scores_full(model, graph);
    auto out = open_out(out_path, cfg);
    out << "point_id,score\n";
    char buf[40];
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", scores[i]);
        out << i << "," << buf << "\n";
    }
    return 0;
}

int cmd_sparsify(const CommonOpts& common, const std::string& graph_path,
                 const std::string& scores_path, const std::string& method, int budget,
                 const std::string& out_path) {
    PipelineConfig cfg = load_config(common);
    MapGraph graph = load_graph(graph_path);
    if (budget <= 0) budget = cfg.budget;
    const int np = static_cast<int>(graph.points.size());
    if (budget > np) throw UsageError("budget exceeds point count");

    std::vector<uint8_t> sel;
    if (method == "gnn") {
        if (scores_path.empty()) throw UsageError("method gnn requires --scores");
        Eigen::VectorXd scores = read_scores_csv(scores_path, np);
        sel = sparsify_by_scores(scores, budget, cfg.score_threshold, cfg.seed);
    } else if (method == "random") {
        sel = sparsify_random(np, budget, cfg.seed);
    } else if (method == "ilp-map") {
        KCoverInstance inst =
            build_instance(graph, Origin::MAP, cfg.cover_b, budget, cfg.slack_penalty);
        KCoverSolution sol = solve_instance(inst, cfg.exact_cap);
        sel = selection_from_solution(sol, inst.col_point_ids, np);
        fill_selection_to_budget(sel, graph, budget);
    } else if (method == "ilp-query") {
        SyntheticWorld world = generate_world(cfg.world, cfg.seed);
        KCoverInstance inst = build_query_oracle_instance(
            world, camera_queries(world, 1), cfg.cover_b, budget,
            cfg.seed ^ 0x94D049BB133111EBULL);
        KCoverSolution sol = solve_instance(inst, cfg.exact_cap);
        sel = selection_from_solution(sol, inst.col_point_ids, np);
        fill_selection_to_budget(sel, graph, budget);
    } else {
        throw UsageError("unknown method '" + method + "' (gnn|random|ilp-map|ilp-query)");
    }
    write_selection_csv(out_path, cfg, sel);
    return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& graph_path,
             const std::string& selection_path, const std::string& method,
             const std::string& scene, const std::string& out_prefix) {
    PipelineConfig cfg = load_config(common);
    MapGraph graph = load_graph(graph_path);
    SyntheticWorld world = generate_world(cfg.world, cfg.seed);
    auto sel = read_selection_csv(selection_path, static_cast<int>(graph.points.size()));
    const long long budget = std::count(sel.begin(), sel.end(), 1);
    auto queries = camera_queries(world, 1);
    RecallResult rec =
        evaluate_recall(world, graph, sel, queries, cfg.seed ^ 0xBF58476D1CE4E5B9ULL);
    {
        auto out = open_out(out_prefix + ".csv", cfg);
        out << "method,scene,budget,kpts,recall_0.25m_2deg,recall_0.5m_5deg,recall_5m_10deg\n";
        out << method << "," << scene << "," << budget << "," << rec.kpts << "," << rec.recall[0]
            << "," << rec.recall[1] << "," << rec.recall[2] << "\n";
    }
    auto out = open_out(out_prefix + "_counts.csv", cfg);
    out << "method,scene,budget,query,matches\n";
    for (size_t q = 0; q < rec.match_counts.size(); ++q)
        out << method << "," << scene << "," << budget << "," << q << ","
            << rec.match_counts[q] << "\n";
    return 0;
}

struct EvalRow {
    std::string method, scene;
    long long budget = 0;
    double kpts = 0;
    double recall[3] = {0, 0, 0};
};

int cmd_report(const CommonOpts& common, const std::string& in_dir,
               const std::string& out_dir) {
    PipelineConfig cfg = load_config(common);
    std::vector<EvalRow> rows;
    std::map<std::string, std::vector<int>> counts_by_method;
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(in_dir))
        if (e.is_regular_file() && e.path().extension() == ".csv")
            files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        std::string line;
        bool counts_file = false, eval_file = false;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (line.rfind("method,scene,budget,query", 0) == 0) {
                counts_file = true;
                continue;
            }
            if (line.rfind("method,scene,budget,kpts", 0) == 0) {
                eval_file = true;
                continue;
            }
            if (!counts_file && !eval_file) break;
            std::stringstream ss(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            if (counts_file && cells.size() == 5) {
                counts_by_method[cells[0]].push_back(std::stoi(cells[4]));
            } else if (eval_file && cells.size() == 7) {
                EvalRow r;
                r.method = cells[0];
                r.scene = cells[1];
                r.budget = std::stoll(cells[2]);
                r.kpts = std::stod(cells[3]);
                for (int t = 0; t < 3; ++t) r.recall[t] = std::stod(cells[4 + t]);
                rows.push_back(r);
            }
        }
    }
    if (rows.empty()) throw DataError("report: no evaluation rows found in " + in_dir);
    fs::create_directories(out_dir);

    // group rows: method -> scene -> curve
    std::set<std::string> methods;
    double kmin = std::numeric_limits<double>::infinity(), kmax = -kmin;
    for (const auto& r : rows) {
        methods.insert(r.method);
        kmin = std::min(kmin, r.kpts);
        kmax = std::max(kmax, r.kpts);
    }
    std::vector<double> grid;
    for (int i = 0; i <= 8; ++i) grid.push_back(kmin + (kmax - kmin) * i / 8.0);

    auto table = open_out(out_dir + "/report.csv", cfg);
    table << "method,kpts,recall_0.25m_2deg,recall_0.5m_5deg,recall_5m_10deg\n";
    std::vector<PlotSeries> series;
    for (const auto& method : methods) {
        std::map<std::string, SceneCurve> scenes[3];
        for (const auto& r : rows) {
            if (r.method != method) continue;
            for (int t = 0; t < 3; ++t) {
                scenes[t][r.scene].points.push_back({r.kpts, r.recall[t]});
                scenes[t][r.scene].num_images = 1;
            }
        }
        std::vector<double> avg[3];
        for (int t = 0; t < 3; ++t) {
            std::vector<SceneCurve> list;
            for (auto& [name, sc] : scenes[t]) {
                std::sort(sc.points.begin(), sc.points.end(),
                          [](const CurvePoint& a, const CurvePoint& b) { return a.kpts < b.kpts; });
                list.push_back(sc);
            }
            avg[t] = aggregate_curves(list, grid);
        }
        for (size_t gi = 0; gi < grid.size(); ++gi)
            table << method << "," << grid[gi] << "," << avg[0][gi] << "," << avg[1][gi] << ","
                  << avg[2][gi] << "\n";
        series.push_back({method, grid, avg[0]});
    }
    track(out_dir + "/recall_curves.svg");
    write_svg_lines(out_dir + "/recall_curves.svg", "Recall (0.25m, 2deg) vs map size",
                    "#kpts", "recall", series, prov(cfg));

    if (!counts_by_method.empty()) {
        int cmax = 1;
        for (const auto& [m, c] : counts_by_method)
            for (int v : c) cmax = std::max(cmax, v);
        std::vector<double> edges;
        for (int i = 0; i <= 10; ++i) edges.push_back(cmax * i / 10.0);
        auto hist = open_out(out_dir + "/match_histogram.csv", cfg);
        hist << "method,bin_low,bin_high,density\n";
        std::vector<PlotSeries> hseries;
        for (const auto& [m, c] : counts_by_method) {
            auto d = match_count_histogram(c, edges);
            PlotSeries s;
            s.label = m;
            for (size_t i = 0; i < d.size(); ++i) {
                hist << m << "," << edges[i] << "," << edges[i + 1] << "," << d[i] << "\n";
                s.x.push_back((edges[i] + edges[i + 1]) / 2.0);
                s.y.push_back(d[i]);
            }
            hseries.push_back(std::move(s));
        }
        track(out_dir + "/match_histogram.svg");
        write_svg_lines(out_dir + "/match_histogram.svg", "Per-query match count density",
                        "matches", "density", hseries, prov(cfg));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mapcull: learned sparsification of visual localization maps"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string out_path, graph_path, scores_path, model_path, selection_path;
    std::string method = "gnn", scene = "scene0", in_dir;
    int budget = 0;

    auto* gen = app.add_subcommand("generate", "generate a synthetic world, write stats");
    add_common(gen, common);
    gen->add_option("--out", out_path, "output directory")->required();

    auto* build = app.add_subcommand("build", "build the map graph with training-query overlay");
    add_common(build, common);
    build->add_option("--out", out_path, "output graph JSON")->required();

    auto* label = app.add_subcommand("label", "solve the K-Cover program, write labels");
    add_common(label, common);
    label->add_option("--graph", graph_path, "input graph JSON")->required();
    label->add_option("--out", out_path, "output labeled graph JSON")->required();

    auto* train = app.add_subcommand("train", "train the point scorer");
    add_common(train, common);
    train->add_option("--graph", graph_path, "labeled graph JSON")->required();
    train->add_option("--out", out_path, "output directory")->required();
    // named shortcuts for the most common sweeps; --set works for everything
    train->add_option_function<int>(
        "--epochs", [&](int v) { common.overrides.push_back("epochs=" + std::to_string(v)); },
        "epoch count (default 20)");
    train->add_option_function<double>(
        "--lr", [&](double v) { common.overrides.push_back("lr=" + std::to_string(v)); },
        "learning rate (default 0.001)");
    train->add_option_function<int>(
        "--K", [&](int v) { common.overrides.push_back("loss_k=" + std::to_string(v)); },
        "coverage target per image (default 30)");
    train->add_option_function<double>(
        "--lambda",
        [&](double v) { common.overrides.push_back("loss_lambda=" + std::to_string(v)); },
        "L1 score penalty (default 0.01)");
    train->add_option_function<std::string>(
        "--g2", [&](std::string v) { common.overrides.push_back("g2=" + v); },
        "aggregation layer: gat|graphconv|sage (default gat)");
    train->add_option_function<int>(
        "--heads", [&](int v) { common.overrides.push_back("heads=" + std::to_string(v)); },
        "attention heads (default 4)");
    train->add_option_function<int>(
        "--seed", [&](int v) { common.overrides.push_back("seed=" + std::to_string(v)); },
        "global seed (default 0)");
    train->add_option_function<std::string>(
        "--loss", [&](std::string v) { common.overrides.push_back("loss=" + v); },
        "loss terms: both|bce|kc (default both)");

    auto* score = app.add_subcommand("score", "score every map point with a trained model");
    add_common(score, common);
    score->add_option("--graph", graph_path, "graph JSON")->required();
    score->add_option("--model", model_path, "model checkpoint")->required();
    score->add_option("--out", out_path, "output scores CSV")->required();

    auto* sparsify = app.add_subcommand("sparsify", "select a point subset under a budget");
    add_common(sparsify, common);
    sparsify->add_option("--graph", graph_path, "graph JSON")->required();
    sparsify->add_option("--scores", scores_path, "scores CSV (gnn method)");
    sparsify->add_option("--method", method, "gnn|random|ilp-map|ilp-query (default gnn)");
    sparsify->add_option("--budget", budget, "points to keep (default: config budget)");
    sparsify->add_option("--out", out_path, "output selection CSV")->required();

    auto* eval = app.add_subcommand("eval", "localize test queries against a sparsified map");
    add_common(eval, common);
    eval->add_option("--graph", graph_path, "graph JSON")->required();
    eval->add_option("--selection", selection_path, "selection CSV")->required();
    eval->add_option("--method", method, "method label for the report (default gnn)");
    eval->add_option("--scene", scene, "scene label for the report (default scene0)");
    eval->add_option("--out", out_path, "output prefix (writes <out>.csv, <out>_counts.csv)")
        ->required();

    auto* report = app.add_subcommand("report", "aggregate eval CSVs into tables and charts");
    add_common(report, common);
    report->add_option("--in", in_dir, "directory of eval CSVs")->required();
    report->add_option("--out", out_path, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_generate(common, out_path);
        if (build->parsed()) return cmd_build(common, out_path);
        if (label->parsed()) return cmd_label(common, graph_path, out_path);
        if (train->parsed()) return cmd_train(common, graph_path, out_path);
        if (score->parsed()) return cmd_score(common, graph_path, model_path, out_path);
        if (sparsify->parsed())
            return cmd_sparsify(common, graph_path, scores_path, method, budget, out_path);
        if (eval->parsed())
            return cmd_eval(common, graph_path, selection_path, method, scene, out_path);
        if (report->parsed()) return cmd_report(common, in_dir, out_path);
    } catch (const UsageError& e) {
        cleanup_outputs();
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        cleanup_outputs();
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        cleanup_outputs();
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
