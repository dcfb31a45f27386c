#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "mapcull/train.hpp"

using namespace mapcull;

namespace {

// Small labeled map: np points, all seen by every one of n_images TRAIN
// images, kNN edges, random descriptors.
MapGraph tiny_graph(std::mt19937_64& rng, int np, int n_images, int k, int dim = 3) {
    MapGraph g;
    g.descriptor_dim = dim;
    g.knn_k = k;
    std::uniform_real_distribution<double> pos(-5.0, 5.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < np; ++i) {
        PointNode p;
        p.id = i;
        p.position = {pos(rng), pos(rng), pos(rng)};
        g.points.push_back(p);
    }
    for (int l = 0; l < n_images; ++l) {
        ImageNode im;
        im.id = l;
        im.intrinsics = {100, 100, 50, 50, 100, 100};
        im.split = Split::TRAIN;
        g.images.push_back(im);
        for (int i = 0; i < np; ++i) {
            KeyPointNode kp;
            kp.id = static_cast<int>(g.keypoints.size());
            kp.descriptor = Eigen::VectorXd::NullaryExpr(dim, [&](int) { return gauss(rng); });
            kp.pixel = {10, 10};
            g.keypoints.push_back(kp);
            g.edges_v.emplace_back(kp.id, i);
            g.edges_c.emplace_back(kp.id, l);
            g.points[i].obs_count_map++;
        }
    }
    g.edges_n = build_knn_edges(g.points, k);
    g.finalize();
    return g;
}

ScorerConfig tiny_scorer_cfg(int dim = 3) {
    ScorerConfig cfg;
    cfg.dim_in = dim;
    cfg.dim_desc = 4;
    cfg.dim_knn = 4;
    cfg.heads = 2;
    return cfg;
}

}  // namespace

TEST_CASE("bce_loss analytic values") {
    bool flag = false;
    Eigen::VectorXd one(1), half(1), y(1);
    y << 1.0;
    one << 1.0;  // clamped to 1-1e-7
    half << 0.5;
    CHECK(bce_loss(one, y) < 1e-6);
    CHECK(bce_loss(half, y) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss(Eigen::VectorXd(), Eigen::VectorXd(), &flag) == 0.0);
    CHECK_FALSE(flag);
}

TEST_CASE("bce_loss matches scalar recomputation on random batch") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    Eigen::VectorXd s(20), y(20);
    for (int i = 0; i < 20; ++i) {
        s[i] = u(rng);
        y[i] = rng() % 2;
    }
    double expect = 0.0;
    for (int i = 0; i < 20; ++i)
        expect += -(y[i] * std::log(s[i]) + (1 - y[i]) * std::log(1 - s[i]));
    CHECK(bce_loss(s, y) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("kcover_loss analytic values") {
    LossConfig cfg;  // K=30, lambda=0.01
    Eigen::VectorXd phi = Eigen::VectorXd::Ones(30);
    CHECK(kcover_loss(phi, phi, cfg) == doctest::Approx(0.3).epsilon(1e-12));
    Eigen::VectorXd phi2 = Eigen::VectorXd::Constant(40, 1.0);  // sum 40
    CHECK(kcover_loss(phi2, phi2, cfg) == doctest::Approx(10.4).epsilon(1e-12));
}

TEST_CASE("kcover_loss matches recomputation on random scores") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LossConfig cfg;
    cfg.K = 5;
    cfg.lambda_l1 = 0.02;
    Eigen::VectorXd all(15);
    for (int i = 0; i < 15; ++i) all[i] = u(rng);
    Eigen::VectorXd phi = all.head(8);
    double expect = std::abs(5.0 - phi.sum()) + 0.02 * all.sum();
    CHECK(kcover_loss(phi, all, cfg) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("total_loss sum and NaN abort") {
    CHECK(total_loss(0.693, 0.3) == doctest::Approx(0.993));
    CHECK(total_loss(0.0, 0.4) == 0.4);  // bce-only disabled -> 0 term
    CHECK(total_loss(0.7, 0.0) == 0.7);
    CHECK_THROWS_AS(total_loss(std::nan(""), 0.0), NumericalError);
}

TEST_CASE("adamw zero gradient, zero decay leaves params unchanged") {
    ScorerModel m = ScorerModel::init(tiny_scorer_cfg(), 1);
    OptimConfig oc;
    oc.weight_decay = 0.0;
    OptimState st = OptimState::init(m, oc);
    auto before = m.tensors;
    auto zero = m.zero_like();
    adamw_step(m.tensors, zero, st);
    CHECK(m.tensors == before);
}

TEST_CASE("adamw first step closed form") {
    ScorerConfig cfg = tiny_scorer_cfg();
    ScorerModel m = ScorerModel::zeros(cfg);
    OptimConfig oc;
    oc.weight_decay = 0.0;
    OptimState st = OptimState::init(m, oc);
    auto g = m.zero_like();
    g[1](0, 0) = 1.0;  // unit gradient on one bias entry
    adamw_step(m.tensors, g, st);
    CHECK(std::abs(m.b1()(0, 0) - (-0.000999999995)) < 1e-11);
}

TEST_CASE("adamw two identical steps match hand-rolled recurrence") {
    ScorerConfig cfg = tiny_scorer_cfg();
    ScorerModel m = ScorerModel::init(cfg, 4);
    OptimConfig oc;
    ScorerModel ref = m;
    OptimState st = OptimState::init(m, oc);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto g = m.zero_like();
    for (auto& t : g)
        t = Eigen::MatrixXd::NullaryExpr(t.rows(), t.cols(), [&](int, int) { return gauss(rng); });
    adamw_step(m.tensors, g, st);
    adamw_step(m.tensors, g, st);

    // hand recurrence on the reference copy
    auto mm = ref.zero_like();
    auto vv = ref.zero_like();
    for (int step = 1; step <= 2; ++step) {
        for (size_t t = 0; t < ref.tensors.size(); ++t) {
            mm[t] = 0.9 * mm[t] + 0.1 * g[t];
            vv[t] = 0.999 * vv[t] + 0.001 * g[t].cwiseProduct(g[t]);
            Eigen::MatrixXd mh = mm[t] / (1.0 - std::pow(0.9, step));
            Eigen::MatrixXd vh = vv[t] / (1.0 - std::pow(0.999, step));
            ref.tensors[t] -= 0.001 * 0.01 * ref.tensors[t];
            ref.tensors[t].array() -= 0.001 * mh.array() / (vh.array().sqrt() + 1e-8);
        }
    }
    for (size_t t = 0; t < ref.tensors.size(); ++t)
        CHECK((m.tensors[t] - ref.tensors[t]).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("adamw rejects shape mismatch") {
    ScorerModel m = ScorerModel::init(tiny_scorer_cfg(), 2);
    OptimState st = OptimState::init(m, {});
    auto g = m.zero_like();
    g[0].resize(1, 1);
    CHECK_THROWS_AS(adamw_step(m.tensors, g, st), UsageError);
}

TEST_CASE("combined loss gradient matches finite differences end to end") {
    std::mt19937_64 rng(21);
    MapGraph g = tiny_graph(rng, 7, 2, 2);
    for (int i = 0; i < 7; ++i) g.points[i].label_gt = i % 2;
    ScorerModel model = ScorerModel::init(tiny_scorer_cfg(), 33);
    LossConfig lc;
    lc.K = 3;

    Subgraph sub = sample_subgraph(g, 0);
    SubgraphBatch batch = make_batch(g, sub);
    auto eval = [&](const ScorerModel& m) {
        auto fwd = forward_batch(m, batch, false);
        std::vector<std::optional<int>> labels(fwd.scores.size());
        for (Eigen::Index c = 0; c < fwd.scores.size(); ++c)
            labels[c] = *g.points[batch.center_point_ids[c]].label_gt;
        std::vector<uint8_t> phi(fwd.scores.size(), 1);
        return compute_step_loss(fwd.scores, labels, phi, lc).total;
    };

    auto fwd = forward_batch(model, batch, true);
    std::vector<std::optional<int>> labels(fwd.scores.size());
    for (Eigen::Index c = 0; c < fwd.scores.size(); ++c)
        labels[c] = *g.points[batch.center_point_ids[c]].label_gt;
    std::vector<uint8_t> phi(fwd.scores.size(), 1);
    StepLoss sl = compute_step_loss(fwd.scores, labels, phi, lc);
    auto grads = model.zero_like();
    backward(*fwd.tape, sl.dscores, grads);

    const double h = 1e-5;
    for (size_t t = 0; t < model.tensors.size(); ++t)
        for (Eigen::Index idx = 0; idx < model.tensors[t].size(); ++idx) {
            ScorerModel mp = model, mm = model;
            mp.tensors[t].data()[idx] += h;
            mm.tensors[t].data()[idx] -= h;
            const double fd = (eval(mp) - eval(mm)) / (2.0 * h);
            const double an = grads[t].data()[idx];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
            CHECK(std::abs(fd - an) / denom < 1e-4);
        }
}

TEST_CASE("ablation wiring: disabled term contributes exactly zero gradient") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    Eigen::VectorXd s(6);
    for (int i = 0; i < 6; ++i) s[i] = u(rng);
    std::vector<std::optional<int>> labels(6);
    for (int i = 0; i < 6; ++i) labels[i] = i % 2;
    std::vector<uint8_t> phi(6, 1);

    LossConfig both, bce_only, kc_only;
    bce_only.use_kc = false;
    kc_only.use_bce = false;
    auto g_both = compute_step_loss(s, labels, phi, both);
    auto g_bce = compute_step_loss(s, labels, phi, bce_only);
    auto g_kc = compute_step_loss(s, labels, phi, kc_only);
    CHECK((g_both.dscores - g_bce.dscores - g_kc.dscores).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(g_bce.kc == 0.0);
    CHECK(g_kc.bce == 0.0);
    CHECK(g_both.total == doctest::Approx(g_bce.total + g_kc.total).epsilon(1e-12));

    LossConfig none;
    none.use_bce = none.use_kc = false;
    CHECK_THROWS_AS(compute_step_loss(s, labels, phi, none), UsageError);
}

TEST_CASE("kc pressure drives per-image score sums toward K") {
    std::mt19937_64 rng(41);
    MapGraph g = tiny_graph(rng, 8, 1, 2);
    ScorerModel model = ScorerModel::init(tiny_scorer_cfg(), 51);
    LossConfig lc;
    lc.K = 3;
    lc.lambda_l1 = 0.0;
    lc.use_bce = false;
    OptimConfig oc;
    oc.lr = 0.01;
    oc.weight_decay = 0.0;
    OptimState st = OptimState::init(model, oc);

    SubgraphBatch batch = make_batch(g, sample_subgraph(g, 0));
    std::vector<std::optional<int>> labels(batch.center_rows.size());
    std::vector<uint8_t> phi(batch.center_rows.size(), 1);
    double last_sum = 0.0;
    for (int step = 0; step < 500; ++step) {
        auto fwd = forward_batch(model, batch, true);
        last_sum = fwd.scores.sum();
        StepLoss sl = compute_step_loss(fwd.scores, labels, phi, lc);
        auto grads = model.zero_like();
        backward(*fwd.tape, sl.dscores, grads);
        adamw_step(model.tensors, grads, st);
    }
    CHECK(std::abs(last_sum - 3.0) < 0.5);
}

TEST_CASE("train determinism: same seed, byte-identical best checkpoint") {
    std::mt19937_64 rng(61);
    MapGraph g = tiny_graph(rng, 10, 3, 2);
    for (int i = 0; i < 10; ++i) g.points[i].label_gt = i < 5 ? 1 : 0;
    TrainConfig tc;
    tc.epochs = 3;
    tc.scorer = tiny_scorer_cfg();
    tc.loss.K = 4;
    tc.seed = 17;
    auto r1 = train(g, tc);
    auto r2 = train(g, tc);
    CHECK(r1.best == r2.best);
    CHECK(r1.best_epoch == r2.best_epoch);
    CHECK(r1.metrics_csv == r2.metrics_csv);
    CHECK(r1.metrics_csv.size() > 1);
}

TEST_CASE("train fits self-consistent labels with bce only") {
    std::mt19937_64 rng(71);
    MapGraph g = tiny_graph(rng, 12, 2, 2);
    ScorerConfig sc = tiny_scorer_cfg();
    // labels = thresholded predictions of the initial model
    ScorerModel init = ScorerModel::init(sc, 5);
    Eigen::VectorXd s0 = predict_scores_full(init, g);
    for (int i = 0; i < 12; ++i) g.points[i].label_gt = s0[i] >= 0.5 ? 1 : 0;

    TrainConfig tc;
    tc.epochs = 150;
    tc.scorer = sc;
    tc.seed = 5;  // start from the same init the labels came from
    tc.loss.use_kc = false;
    tc.optim.lr = 0.01;
    tc.optim.weight_decay = 0.0;
    auto r = train(g, tc);
    // selection metric is -mean epoch loss; best loss (BCE summed over the
    // 12 labeled points) should be near zero
    CHECK(-r.best_metric < 0.5);
}

TEST_CASE("train writes checkpoints and metrics when out_dir set") {
    std::mt19937_64 rng(81);
    MapGraph g = tiny_graph(rng, 6, 2, 2);
    for (int i = 0; i < 6; ++i) g.points[i].label_gt = i % 2;
    TrainConfig tc;
    tc.epochs = 2;
    tc.scorer = tiny_scorer_cfg();
    tc.seed = 3;
    tc.out_dir = "test_train_out";
    auto r = train(g, tc);
    ScorerModel best_on_disk =
        load_checkpoint(tc.out_dir + "/ckpt_epoch" + std::to_string(r.best_epoch) + ".bin");
    CHECK(best_on_disk == r.best);
    std::filesystem::remove_all(tc.out_dir);
}

TEST_CASE("train rejects graph without map images") {
    MapGraph g;
    g.descriptor_dim = 3;
    g.knn_k = 1;
    TrainConfig tc;
    tc.scorer = tiny_scorer_cfg();
    CHECK_THROWS_AS(train(g, tc), DataError);
}
