#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>

#include "mapcull/scorer.hpp"

using namespace mapcull;

namespace {

ScorerConfig tiny_cfg(G2Kind g2, int heads = 2) {
    ScorerConfig cfg;
    cfg.dim_in = 3;
    cfg.dim_desc = 4;
    cfg.dim_knn = 4;
    cfg.heads = heads;
    cfg.g2 = g2;
    return cfg;
}

SubgraphBatch random_tiny_batch(std::mt19937_64& rng, int n_all, int n_center, int dim) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    SubgraphBatch b;
    b.all_point_ids.resize(n_all);
    for (int i = 0; i < n_all; ++i) b.all_point_ids[i] = i;
    b.desc_sums = Eigen::MatrixXd::NullaryExpr(n_all, dim, [&](int, int) { return gauss(rng); });
    b.degrees = Eigen::VectorXi::Constant(n_all, 2);
    for (int c = 0; c < n_center; ++c) {
        b.center_rows.push_back(c);
        b.center_point_ids.push_back(c);
        std::vector<int> nbs;
        for (int j = 0; j < n_all; ++j)
            if (j != c && rng() % 2) nbs.push_back(j);
        b.nb_rows.push_back(nbs);
    }
    return b;
}

double weighted_score_loss(const ScorerModel& m, const SubgraphBatch& b,
                           const Eigen::VectorXd& w) {
    return w.dot(forward_batch(m, b, false).scores);
}

}  // namespace

TEST_CASE("g1 identity passthrough on positive descriptor") {
    ScorerConfig cfg = tiny_cfg(G2Kind::GAT);
    cfg.dim_in = 4;  // D == F so W1 can be identity
    ScorerModel m = ScorerModel::zeros(cfg);
    m.W1() = Eigen::MatrixXd::Identity(4, 4);
    Eigen::MatrixXd sums(1, 4);
    sums << 0.5, 1.0, 2.0, 0.25;
    CHECK((g1_forward(m, sums).row(0).transpose() - sums.row(0).transpose()).norm() == 0.0);
}

TEST_CASE("g1 cancellation of opposite descriptors") {
    ScorerConfig cfg = tiny_cfg(G2Kind::GAT);
    cfg.dim_in = 4;
    ScorerModel m = ScorerModel::init(cfg, 1);
    m.b1().setZero();
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(1, 4);  // d + (-d)
    CHECK(g1_forward(m, sums).row(0).norm() == 0.0);
}

TEST_CASE("g1 matches independent recomputation") {
    std::mt19937_64 rng(5);
    ScorerModel m = ScorerModel::init(tiny_cfg(G2Kind::GAT), 2);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd sums = Eigen::MatrixXd::NullaryExpr(3, 3, [&](int, int) { return gauss(rng); });
    Eigen::MatrixXd out = g1_forward(m, sums);
    for (int r = 0; r < 3; ++r) {
        Eigen::VectorXd z = m.W1() * sums.row(r).transpose() + m.b1().col(0);
        for (int f = 0; f < 4; ++f) {
            double expect = z[f] > 0 ? z[f] : 0.1 * z[f];
            CHECK(out(r, f) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("gat self-only softmax is identity with W=I") {
    ScorerConfig cfg = tiny_cfg(G2Kind::GAT, 1);
    ScorerModel m = ScorerModel::zeros(cfg);
    m.g2t(0) = Eigen::MatrixXd::Identity(4, 4);
    Eigen::MatrixXd feats(1, 4);
    feats << 1.0, -2.0, 0.5, 3.0;
    Eigen::VectorXd out = gat_forward_node(m, feats, 0, {});
    CHECK((out - feats.row(0).transpose()).norm() == 0.0);
}

TEST_CASE("gat attention rows sum to one") {
    std::mt19937_64 rng(9);
    ScorerModel m = ScorerModel::init(tiny_cfg(G2Kind::GAT, 4), 3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd feats = Eigen::MatrixXd::NullaryExpr(6, 4, [&](int, int) { return gauss(rng); });
    Eigen::MatrixXd A = gat_attention_weights(m, feats, 0, {1, 2, 3, 4, 5});
    for (int h = 0; h < A.rows(); ++h)
        CHECK(std::abs(A.row(h).sum() - 1.0) < 1e-9);
}

TEST_CASE("gat single neighbor matches hand computation") {
    ScorerConfig cfg;
    cfg.dim_in = 2;
    cfg.dim_desc = 2;
    cfg.dim_knn = 2;
    cfg.heads = 1;
    cfg.g2 = G2Kind::GAT;
    ScorerModel m = ScorerModel::zeros(cfg);
    Eigen::Matrix2d W;
    W << 1.0, 0.5, -0.25, 2.0;
    m.g2t(0) = W;
    Eigen::VectorXd a(4);
    a << 0.3, -0.2, 0.7, 0.1;
    m.g2t(1).col(0) = a;

    Eigen::MatrixXd feats(2, 2);
    feats << 1.0, 2.0, -1.0, 0.5;
    Eigen::VectorXd out = gat_forward_node(m, feats, 0, {1});

    // hand: u0 = W f0, u1 = W f1; e_j = leaky(a1.u0 + a2.u_j); alpha = softmax
    Eigen::Vector2d u0 = W * feats.row(0).transpose();
    Eigen::Vector2d u1 = W * feats.row(1).transpose();
    auto lk = [](double v) { return v > 0 ? v : 0.1 * v; };
    double gi = 0.3 * u0[0] - 0.2 * u0[1];
    double e1 = lk(gi + 0.7 * u1[0] + 0.1 * u1[1]);  // neighbor first
    double e0 = lk(gi + 0.7 * u0[0] + 0.1 * u0[1]);  // self last
    double mx = std::max(e0, e1);
    double a1 = std::exp(e1 - mx), a0 = std::exp(e0 - mx);
    double Z = a0 + a1;
    Eigen::Vector2d expect = (a1 / Z) * u1 + (a0 / Z) * u0;
    CHECK((out - expect).norm() < 1e-12);
}

TEST_CASE("graphconv and sage degenerate cases") {
    ScorerConfig cfg = tiny_cfg(G2Kind::GRAPHCONV);
    ScorerModel m = ScorerModel::init(cfg, 4);
    Eigen::MatrixXd feats(1, 4);
    feats << 1.0, -1.0, 0.5, 2.0;
    Eigen::VectorXi deg0 = Eigen::VectorXi::Zero(1);
    Eigen::VectorXd out = graphconv_forward_node(m, feats, 0, {}, deg0);
    Eigen::VectorXd z = m.g2t(0) * feats.row(0).transpose();
    for (int f = 0; f < 4; ++f)
        CHECK(out[f] == doctest::Approx(z[f] > 0 ? z[f] : 0.1 * z[f]).epsilon(1e-12));

    ScorerConfig scfg = tiny_cfg(G2Kind::SAGE);
    ScorerModel sm = ScorerModel::init(scfg, 5);
    Eigen::VectorXd sout = sageconv_forward_node(sm, feats, 0, {});
    Eigen::VectorXd sz = sm.g2t(0) * feats.row(0).transpose();  // empty mean contributes zero
    for (int f = 0; f < 4; ++f)
        CHECK(sout[f] == doctest::Approx(sz[f] > 0 ? sz[f] : 0.1 * sz[f]).epsilon(1e-12));
}

TEST_CASE("graphconv random neighborhood matches recomputation") {
    std::mt19937_64 rng(11);
    ScorerModel m = ScorerModel::init(tiny_cfg(G2Kind::GRAPHCONV), 6);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd feats = Eigen::MatrixXd::NullaryExpr(4, 4, [&](int, int) { return gauss(rng); });
    Eigen::VectorXi deg(4);
    deg << 3, 1, 2, 2;
    Eigen::VectorXd out = graphconv_forward_node(m, feats, 0, {1, 2, 3}, deg);
    Eigen::VectorXd msum = feats.row(0).transpose() / std::sqrt(4.0 * 4.0);
    msum += feats.row(1).transpose() / std::sqrt(4.0 * 2.0);
    msum += feats.row(2).transpose() / std::sqrt(4.0 * 3.0);
    msum += feats.row(3).transpose() / std::sqrt(4.0 * 3.0);
    Eigen::VectorXd z = m.g2t(0) * msum;
    for (int f = 0; f < 4; ++f)
        CHECK(out[f] == doctest::Approx(z[f] > 0 ? z[f] : 0.1 * z[f]).epsilon(1e-12));
}

TEST_CASE("sage random neighborhood matches recomputation") {
    std::mt19937_64 rng(13);
    ScorerModel m = ScorerModel::init(tiny_cfg(G2Kind::SAGE), 7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd feats = Eigen::MatrixXd::NullaryExpr(4, 4, [&](int, int) { return gauss(rng); });
    Eigen::VectorXd out = sageconv_forward_node(m, feats, 0, {1, 3});
    Eigen::VectorXd mean = (feats.row(1) + feats.row(3)).transpose() / 2.0;
    Eigen::VectorXd z = m.g2t(0) * feats.row(0).transpose() + m.g2t(1) * mean;
    for (int f = 0; f < 4; ++f)
        CHECK(out[f] == doctest::Approx(z[f] > 0 ? z[f] : 0.1 * z[f]).epsilon(1e-12));
}

TEST_CASE("gat mean-merge variant") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SUBCASE("H=1: mean variant = LeakyReLU(sum variant)") {
        ScorerConfig cfg = tiny_cfg(G2Kind::GAT, 1);
        ScorerModel m = ScorerModel::init(cfg, 8);
        Eigen::MatrixXd feats =
            Eigen::MatrixXd::NullaryExpr(3, 4, [&](int, int) { return gauss(rng); });
        Eigen::VectorXd sum_out = gat_forward_node(m, feats, 0, {1, 2});
        m.cfg.head_merge = HeadMerge::MEAN;
        Eigen::VectorXd mean_out = gat_forward_node(m, feats, 0, {1, 2});
        for (int f = 0; f < 4; ++f) {
            double expect = sum_out[f] > 0 ? sum_out[f] : 0.1 * sum_out[f];
            CHECK(mean_out[f] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("H=2 identical heads: mean = sum/2 before nonlinearity") {
        ScorerConfig cfg = tiny_cfg(G2Kind::GAT, 2);
        ScorerModel m = ScorerModel::init(cfg, 9);
        m.g2t(2) = m.g2t(0);
        m.g2t(3) = m.g2t(1);
        Eigen::MatrixXd feats =
            Eigen::MatrixXd::NullaryExpr(3, 4, [&](int, int) { return gauss(rng); });
        Eigen::VectorXd sum_out = gat_forward_node(m, feats, 0, {1, 2});
        m.cfg.head_merge = HeadMerge::MEAN;
        Eigen::VectorXd mean_out = gat_forward_node(m, feats, 0, {1, 2});
        for (int f = 0; f < 4; ++f) {
            double pre = sum_out[f] / 2.0;
            CHECK(mean_out[f] == doctest::Approx(pre > 0 ? pre : 0.1 * pre).epsilon(1e-12));
        }
    }
    SUBCASE("H=4 random case matches recomputation") {
        ScorerConfig cfg = tiny_cfg(G2Kind::GAT, 4);
        cfg.head_merge = HeadMerge::MEAN;
        ScorerModel m = ScorerModel::init(cfg, 10);
        Eigen::MatrixXd feats =
            Eigen::MatrixXd::NullaryExpr(4, 4, [&](int, int) { return gauss(rng); });
        Eigen::VectorXd out = gat_forward_node(m, feats, 1, {0, 2});
        // recompute head by head
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(4);
        std::vector<int> rows = {0, 2, 1};
        for (int h = 0; h < 4; ++h) {
            Eigen::MatrixXd W = m.g2t(2 * h);
            Eigen::VectorXd a = m.g2t(2 * h + 1).col(0);
            auto lk = [](double v) { return v > 0 ? v : 0.1 * v; };
            double gi = a.head(4).dot((W * feats.row(1).transpose()).eval());
            Eigen::VectorXd e(3);
            for (int p = 0; p < 3; ++p)
                e[p] = lk(gi + a.tail(4).dot((W * feats.row(rows[p]).transpose()).eval()));
            Eigen::VectorXd al = (e.array() - e.maxCoeff()).exp();
            al /= al.sum();
            for (int p = 0; p < 3; ++p) acc += al[p] * (W * feats.row(rows[p]).transpose());
        }
        acc /= 4.0;
        for (int f = 0; f < 4; ++f) {
            double expect = acc[f] > 0 ? acc[f] : 0.1 * acc[f];
            CHECK(out[f] == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("predict scores range and determinism") {
    std::mt19937_64 rng(19);
    SubgraphBatch b = random_tiny_batch(rng, 8, 5, 3);

    SUBCASE("all-zero parameters give 0.5 everywhere") {
        ScorerModel m = ScorerModel::zeros(tiny_cfg(G2Kind::GAT));
        auto r = forward_batch(m, b, false);
        for (int c = 0; c < r.scores.size(); ++c) CHECK(r.scores[c] == 0.5);
    }
    SUBCASE("scores strictly in (0,1)") {
        ScorerModel m = ScorerModel::init(tiny_cfg(G2Kind::SAGE), 21);
        auto r = forward_batch(m, b, false);
        for (int c = 0; c < r.scores.size(); ++c) {
            CHECK(r.scores[c] > 0.0);
            CHECK(r.scores[c] < 1.0);
        }
    }
    SUBCASE("two runs are byte-identical") {
        ScorerModel m = ScorerModel::init(tiny_cfg(G2Kind::GAT), 22);
        auto r1 = forward_batch(m, b, false);
        auto r2 = forward_batch(m, b, false);
        CHECK(std::memcmp(r1.scores.data(), r2.scores.data(),
                          sizeof(double) * r1.scores.size()) == 0);
    }
    SUBCASE("dimension mismatch rejected") {
        ScorerConfig cfg = tiny_cfg(G2Kind::GAT);
        cfg.dim_in = 7;
        ScorerModel m = ScorerModel::init(cfg, 23);
        CHECK_THROWS_AS(forward_batch(m, b, false), UsageError);
    }
}

TEST_CASE("backward: d(sum s)/d(g3 bias) = sum s(1-s)") {
    std::mt19937_64 rng(29);
    SubgraphBatch b = random_tiny_batch(rng, 6, 4, 3);
    ScorerModel m = ScorerModel::init(tiny_cfg(G2Kind::GAT), 31);
    auto r = forward_batch(m, b, true);
    auto grads = m.zero_like();
    backward(*r.tape, Eigen::VectorXd::Ones(r.scores.size()), grads);
    double expect = 0.0;
    for (int c = 0; c < r.scores.size(); ++c) expect += r.scores[c] * (1.0 - r.scores[c]);
    const int bias_idx = static_cast<int>(grads.size()) - 1;
    CHECK(grads[bias_idx](0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("backward: tape reuse rejected") {
    std::mt19937_64 rng(37);
    SubgraphBatch b = random_tiny_batch(rng, 5, 3, 3);
    ScorerModel m = ScorerModel::init(tiny_cfg(G2Kind::SAGE), 41);
    auto r = forward_batch(m, b, true);
    auto grads = m.zero_like();
    backward(*r.tape, Eigen::VectorXd::Ones(3), grads);
    CHECK_THROWS_AS(backward(*r.tape, Eigen::VectorXd::Ones(3), grads), UsageError);
}

TEST_CASE("gradients match central finite differences for all g2 variants") {
    for (auto [g2, merge] : std::vector<std::pair<G2Kind, HeadMerge>>{
             {G2Kind::GAT, HeadMerge::SUM},
             {G2Kind::GAT, HeadMerge::MEAN},
             {G2Kind::GRAPHCONV, HeadMerge::SUM},
             {G2Kind::SAGE, HeadMerge::SUM}}) {
        for (uint64_t seed = 0; seed < 3; ++seed) {
            std::mt19937_64 rng(100 + seed);
            SubgraphBatch b = random_tiny_batch(rng, 7, 4, 3);
            ScorerConfig cfg = tiny_cfg(g2);
            cfg.head_merge = merge;
            ScorerModel m = ScorerModel::init(cfg, 200 + seed);
            Eigen::VectorXd w(4);
            std::normal_distribution<double> gauss(0.0, 1.0);
            for (int i = 0; i < 4; ++i) w[i] = gauss(rng);

            auto r = forward_batch(m, b, true);
            auto grads = m.zero_like();
            backward(*r.tape, w, grads);

            const double h = 1e-5;
            for (size_t t = 0; t < m.tensors.size(); ++t) {
                for (Eigen::Index idx = 0; idx < m.tensors[t].size(); ++idx) {
                    ScorerModel mp = m, mm = m;
                    mp.tensors[t].data()[idx] += h;
                    mm.tensors[t].data()[idx] -= h;
                    const double fd =
                        (weighted_score_loss(mp, b, w) - weighted_score_loss(mm, b, w)) /
                        (2.0 * h);
                    const double an = grads[t].data()[idx];
                    const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
                    CHECK(std::abs(fd - an) / denom < 1e-4);
                }
            }
        }
    }
}

TEST_CASE("checkpoint round-trip is exact") {
    ScorerConfig cfg;
    cfg.g2 = G2Kind::GAT;
    cfg.heads = 4;
    ScorerModel m = ScorerModel::init(cfg, 99);
    const std::string path = "test_scorer_ckpt.bin";
    save_checkpoint(m, path);
    ScorerModel m2 = load_checkpoint(path);
    CHECK(m == m2);
    std::remove(path.c_str());
}
