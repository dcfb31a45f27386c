#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>
#include <set>

#include "mapcull/graph.hpp"
#include "mapcull/graph_io.hpp"

using namespace mapcull;

namespace {

PointNode make_point(int id, double x, double y = 0.0, double z = 0.0) {
    PointNode p;
    p.id = id;
    p.position = {x, y, z};
    return p;
}

// Small random graph: points, one map image seeing a random subset through
// keypoints, kNN edges.
MapGraph random_graph(std::mt19937_64& rng, int np, int n_images, int k, int dim = 4) {
    MapGraph g;
    g.descriptor_dim = dim;
    g.knn_k = k;
    std::uniform_real_distribution<double> pos(-10.0, 10.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < np; ++i) g.points.push_back(make_point(i, pos(rng), pos(rng), pos(rng)));
    for (int l = 0; l < n_images; ++l) {
        ImageNode im;
        im.id = l;
        im.intrinsics = {100, 100, 50, 50, 100, 100};
        im.split = l % 2 ? Split::TEST : Split::TRAIN;
        g.images.push_back(im);
        for (int i = 0; i < np; ++i) {
            if (rng() % 3 != 0) continue;
            KeyPointNode kp;
            kp.id = static_cast<int>(g.keypoints.size());
            kp.descriptor = Eigen::VectorXd::NullaryExpr(dim, [&](int) { return gauss(rng); });
            kp.pixel = {10.0 + double(rng() % 80), 10.0 + double(rng() % 80)};
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

}  // namespace

TEST_CASE("knn edges on collinear points, k=1") {
    std::vector<PointNode> pts = {make_point(0, 0.0), make_point(1, 1.0), make_point(2, 3.0)};
    auto edges = build_knn_edges(pts, 1);
    // nearest of 0 is 1, of 1 is 0, of 2 is 1
    CHECK(edges == std::vector<Edge>{{1, 0}, {0, 1}, {1, 2}});
}

TEST_CASE("knn k clamped to N_p-1") {
    std::mt19937_64 rng(7);
    std::vector<PointNode> pts;
    std::uniform_real_distribution<double> pos(-1.0, 1.0);
    for (int i = 0; i < 5; ++i) pts.push_back(make_point(i, pos(rng), pos(rng), pos(rng)));
    auto edges = build_knn_edges(pts, 9);
    std::vector<int> indeg(5, 0);
    for (auto& [j, i] : edges) indeg[i]++;
    for (int d : indeg) CHECK(d == 4);
}

TEST_CASE("knn equidistant tie broken by lower id") {
    // points 1 and 2 both at distance 1 from point 0
    std::vector<PointNode> pts = {make_point(0, 0.0), make_point(1, 1.0), make_point(2, -1.0)};
    auto edges = build_knn_edges(pts, 1);
    CHECK(edges[0] == Edge{1, 0});
}

TEST_CASE("knn rejects fewer than 2 points") {
    std::vector<PointNode> pts = {make_point(0, 0.0)};
    CHECK_THROWS_AS(build_knn_edges(pts, 1), DataError);
}

TEST_CASE("knn grid path matches brute force") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pos(-30.0, 30.0);
    std::vector<PointNode> pts;
    for (int i = 0; i < 800; ++i) pts.push_back(make_point(i, pos(rng), pos(rng), pos(rng)));
    auto brute = build_knn_edges(pts, 9);
    auto grid = build_knn_edges(pts, 9, /*brute_force_cap=*/10);
    CHECK(brute == grid);
}

TEST_CASE("knn determinism") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(-5.0, 5.0);
    std::vector<PointNode> pts;
    for (int i = 0; i < 50; ++i) pts.push_back(make_point(i, pos(rng), pos(rng), pos(rng)));
    CHECK(build_knn_edges(pts, 4) == build_knn_edges(pts, 4));
}

TEST_CASE("subgraph hand-traced closure") {
    // image 0 has keypoints w0,w1 seeing p0,p1; kNN chain p0<->p1<->p2;
    // p2 seen by w2 in image 1.
    MapGraph g;
    g.descriptor_dim = 2;
    g.knn_k = 1;
    g.points = {make_point(0, 0.0), make_point(1, 1.0), make_point(2, 1.6)};
    for (int w = 0; w < 3; ++w) {
        KeyPointNode kp;
        kp.id = w;
        kp.descriptor = Eigen::Vector2d(1.0, 2.0);
        kp.pixel = {5, 5};
        g.keypoints.push_back(kp);
    }
    for (int l = 0; l < 2; ++l) {
        ImageNode im;
        im.id = l;
        im.intrinsics = {10, 10, 5, 5, 10, 10};
        g.images.push_back(im);
    }
    g.edges_v = {{0, 0}, {1, 1}, {2, 2}};
    g.edges_c = {{0, 0}, {1, 0}, {2, 1}};
    g.edges_n = build_knn_edges(g.points, 1);  // 1->0, 0->1? nearest of 1 is 2 (0.6 < 1.0)
    g.finalize();

    Subgraph sg = sample_subgraph(g, 0);
    CHECK(sg.center_points == std::vector<int>{0, 1});
    // nearest of 0 is 1; nearest of 1 is 2
    CHECK(sg.neighbor_points == std::vector<int>{1, 2});
    CHECK(sg.all_points == std::vector<int>{0, 1, 2});
    CHECK(sg.keypoints_needed == std::vector<int>{0, 1, 2});
}

TEST_CASE("subgraph of empty image fails") {
    std::mt19937_64 rng(5);
    MapGraph g = random_graph(rng, 10, 2, 3);
    ImageNode im;
    im.id = static_cast<int>(g.images.size());
    im.intrinsics = g.images[0].intrinsics;
    g.images.push_back(im);
    g.finalize();
    CHECK_THROWS_AS(sample_subgraph(g, im.id), DataError);
}

TEST_CASE("disjoint images share no subgraph nodes unless linked by knn") {
    std::mt19937_64 rng(17);
    MapGraph g = random_graph(rng, 40, 4, 3);
    auto s0 = sample_subgraph(g, 0);
    auto s1 = sample_subgraph(g, 1);
    // closure locality: shared points must come from centers or their knn
    std::set<int> allowed(s0.all_points.begin(), s0.all_points.end());
    for (int p : s1.all_points) {
        if (allowed.count(p)) {
            bool in_either_center_or_knn =
                std::count(s0.all_points.begin(), s0.all_points.end(), p) > 0;
            CHECK(in_either_center_or_knn);
        }
    }
}

TEST_CASE("graph save/load round-trip") {
    std::mt19937_64 rng(23);
    MapGraph g = random_graph(rng, 100, 6, 5);
    g.seed = 23;
    g.points[3].label_gt = 1;
    g.points[4].score = 0.25;
    const std::string path = "test_graph_roundtrip.json";
    save_graph(g, path);
    MapGraph g2 = load_graph(path);
    CHECK(g == g2);
    // serialization determinism: identical bytes on re-save
    save_graph(g2, path + "2");
    auto slurp = [](const std::string& p) {
        FILE* f = fopen(p.c_str(), "rb");
        REQUIRE(f);
        std::string s;
        char buf[4096];
        size_t n;
        while ((n = fread(buf, 1, sizeof(buf), f)) > 0) s.append(buf, n);
        fclose(f);
        return s;
    };
    CHECK(slurp(path) == slurp(path + "2"));
    std::remove(path.c_str());
    std::remove((path + "2").c_str());
    std::remove((path + ".meta").c_str());
    std::remove((path + "2.meta").c_str());
}

TEST_CASE("empty graph round-trips") {
    MapGraph g;
    g.descriptor_dim = 8;
    g.knn_k = 9;
    const std::string path = "test_graph_empty.json";
    save_graph(g, path);
    MapGraph g2 = load_graph(path);
    CHECK(g == g2);
    std::remove(path.c_str());
    std::remove((path + ".meta").c_str());
}

TEST_CASE("dangling visibility edge rejected on load") {
    MapGraph g;
    g.descriptor_dim = 2;
    g.knn_k = 1;
    g.points = {make_point(0, 0.0), make_point(1, 1.0)};
    KeyPointNode kp;
    kp.id = 0;
    kp.descriptor = Eigen::Vector2d(0, 0);
    g.keypoints.push_back(kp);
    ImageNode im;
    im.id = 0;
    g.images.push_back(im);
    g.edges_c = {{0, 0}};
    g.edges_v = {{0, 7}};  // missing point id
    const std::string path = "test_graph_bad.json";
    save_graph(g, path);
    CHECK_THROWS_AS(load_graph(path), DataError);
    std::remove(path.c_str());
    std::remove((path + ".meta").c_str());
}

TEST_CASE("query overlay bookkeeping") {
    std::mt19937_64 rng(31);
    MapGraph g = random_graph(rng, 20, 3, 3);
    const size_t n_img = g.images.size();
    const size_t n_kpt = g.keypoints.size();
    const size_t n_ev = g.edges_v.size();

    ImageNode q;
    q.intrinsics = g.images[0].intrinsics;
    q.split = Split::TRAIN;
    q.session = 6;

    SUBCASE("zero matches leaves counts untouched") {
        query_overlay(g, {}, {q});
        CHECK(g.images.size() == n_img + 1);
        CHECK(g.keypoints.size() == n_kpt);
        for (auto& p : g.points) CHECK(p.obs_count_query == 0);
    }
    SUBCASE("one match increments obs_count_query") {
        KeyPointNode kp;
        kp.descriptor = Eigen::VectorXd::Zero(4);
        kp.pixel = {1, 1};
        query_overlay(g, {{kp, 0, 5}}, {q});
        CHECK(g.points[5].obs_count_query == 1);
        CHECK(g.edges_v.size() == n_ev + 1);
        CHECK(g.keypoints.back().origin == Origin::QUERY);
    }
    SUBCASE("three queries matching the same point") {
        KeyPointNode kp;
        kp.descriptor = Eigen::VectorXd::Zero(4);
        kp.pixel = {1, 1};
        query_overlay(g, {{kp, 0, 5}, {kp, 1, 5}, {kp, 2, 5}}, {q, q, q});
        CHECK(g.points[5].obs_count_query == 3);
    }
    SUBCASE("test-split query image rejected") {
        ImageNode bad = q;
        bad.split = Split::TEST;
        CHECK_THROWS_AS(query_overlay(g, {}, {bad}), DataError);
    }
}

TEST_CASE("map-origin sets untouched by overlay") {
    std::mt19937_64 rng(37);
    MapGraph g = random_graph(rng, 15, 2, 3);
    MapGraph before = g;
    ImageNode q;
    q.intrinsics = g.images[0].intrinsics;
    q.split = Split::TRAIN;
    KeyPointNode kp;
    kp.descriptor = Eigen::VectorXd::Zero(4);
    query_overlay(g, {{kp, 0, 1}}, {q});
    // all original nodes/edges unchanged
    for (size_t i = 0; i < before.keypoints.size(); ++i)
        CHECK(g.keypoints[i].origin == Origin::MAP);
    for (size_t i = 0; i < before.images.size(); ++i) CHECK(g.images[i].origin == Origin::MAP);
    CHECK(std::equal(before.edges_v.begin(), before.edges_v.end(), g.edges_v.begin()));
}
