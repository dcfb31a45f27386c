#include "mapcull/world.hpp"

#include <limits>
#include <random>

namespace mapcull {

namespace {

constexpr double kInlierPx = 4.0;

Eigen::Matrix3d camera_rotation(int camera_id) {
    // camera 0 looks along +y, camera 1 along -y; image y axis points down.
    Eigen::Matrix3d R;
    if (camera_id == 0) {
        R << 1, 0, 0,   // cam x = world x
             0, 0, -1,  // cam y = world -z
             0, 1, 0;   // cam z = world y
    } else {
        R << -1, 0, 0,
              0, 0, -1,
              0, -1, 0;
    }
    return R;
}

Eigen::VectorXd random_direction(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(dim, [&](int) { return gauss(rng); });
    return v / v.norm();
}

}  // namespace

bool SyntheticWorld::in_frustum(const WorldImage& im, const Eigen::Vector3d& p) const {
    const Eigen::Vector3d cam = im.pose.apply(p);
    if (cam.z() < cfg.min_depth || cam.z() > cfg.max_depth) return false;
    return cfg.intrinsics.inside(cfg.intrinsics.project(cam));
}

SyntheticWorld generate_world(const WorldConfig& cfg, uint64_t seed) {
    if (cfg.num_points <= 0 || cfg.map_sessions <= 0 || cfg.query_sessions <= 0 ||
        cfg.images_per_session <= 0 || cfg.descriptor_dim <= 0)
        throw UsageError("generate_world: degenerate config");
    if (cfg.seasonal_fraction < 0 || cfg.repetitive_fraction < 0 ||
        cfg.seasonal_fraction + cfg.repetitive_fraction > 1.0)
        throw UsageError("generate_world: invalid class fractions");

    SyntheticWorld w;
    w.cfg = cfg;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Eigen::VectorXd> stable_protos, seasonal_protos, rep_centers;
    for (int i = 0; i < cfg.class_prototypes; ++i)
        stable_protos.push_back(cfg.prototype_radius * random_direction(cfg.descriptor_dim, rng));
    for (int i = 0; i < cfg.class_prototypes; ++i)
        seasonal_protos.push_back(cfg.prototype_radius *
                                  random_direction(cfg.descriptor_dim, rng));
    for (int i = 0; i < cfg.repetitive_clusters; ++i)
        rep_centers.push_back(cfg.prototype_radius * random_direction(cfg.descriptor_dim, rng));

    const int total = cfg.map_sessions + cfg.query_sessions;
    for (int i = 0; i < cfg.num_points; ++i) {
        WorldPoint p;
        const double side = (rng() % 2 == 0) ? 1.0 : -1.0;
        p.position = {u01(rng) * cfg.road_length,
                      side * (cfg.lateral_min + u01(rng) * (cfg.lateral_max - cfg.lateral_min)),
                      u01(rng) * cfg.height_max};
        const double cls = u01(rng);
        if (cls < cfg.seasonal_fraction)
            p.cls = PointClass::SEASONAL;
        else if (cls < cfg.seasonal_fraction + cfg.repetitive_fraction)
            p.cls = PointClass::REPETITIVE;
        else
            p.cls = PointClass::STABLE;

        switch (p.cls) {
            case PointClass::STABLE:
                p.canonical = stable_protos[rng() % stable_protos.size()] +
                              cfg.point_desc_spread *
                                  Eigen::VectorXd::NullaryExpr(cfg.descriptor_dim,
                                                               [&](int) { return gauss(rng); });
                break;
            case PointClass::SEASONAL:
                p.canonical = seasonal_protos[rng() % seasonal_protos.size()] +
                              cfg.point_desc_spread *
                                  Eigen::VectorXd::NullaryExpr(cfg.descriptor_dim,
                                                               [&](int) { return gauss(rng); });
                break;
            case PointClass::REPETITIVE:
                p.canonical = rep_centers[rng() % rep_centers.size()] +
                              cfg.repetitive_spread *
                                  Eigen::VectorXd::NullaryExpr(cfg.descriptor_dim,
                                                               [&](int) { return gauss(rng); });
                break;
        }

        p.validity.assign(total, 1);
        if (p.cls == PointClass::SEASONAL && u01(rng) < cfg.seasonal_change_prob)
            for (int s = cfg.map_sessions; s < total; ++s) p.validity[s] = 0;
        w.points.push_back(std::move(p));
    }

    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    for (int s = 0; s < total; ++s)
        for (int cam = 0; cam < 2; ++cam)
            for (int i = 0; i < cfg.images_per_session; ++i) {
                WorldImage im;
                im.session = s;
                im.camera_id = cam;
                const double x =
                    (i + 0.5) * cfg.road_length / cfg.images_per_session + jitter(rng);
                const Eigen::Vector3d C(x, 0.0, cfg.camera_height);
                im.pose.R = camera_rotation(cam);
                im.pose.t = -im.pose.R * C;
                (s < cfg.map_sessions ? w.map_images : w.query_images).push_back(im);
            }
    return w;
}

MapGraph build_map_graph(const SyntheticWorld& world, int knn_k, uint64_t seed) {
    const auto& cfg = world.cfg;
    MapGraph g;
    g.descriptor_dim = cfg.descriptor_dim;
    g.knn_k = knn_k;
    g.seed = seed;
    std::mt19937_64 rng(seed ^ 0xB5297A4D3F8C2E1FULL);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (int i = 0; i < cfg.num_points; ++i) {
        PointNode p;
        p.id = i;
        p.position = world.points[i].position;
        g.points.push_back(p);
    }
    for (size_t m = 0; m < world.map_images.size(); ++m) {
        const WorldImage& wim = world.map_images[m];
        ImageNode im;
        im.id = static_cast<int>(m);
        im.pose = wim.pose;
        im.intrinsics = cfg.intrinsics;
        im.session = wim.session;
        im.camera_id = wim.camera_id;
        im.split = wim.camera_id == 0 ? Split::TRAIN : Split::TEST;
        g.images.push_back(im);
        for (int i = 0; i < cfg.num_points; ++i) {
            if (!world.valid_at(i, wim.session) ||
                !world.in_frustum(wim, world.points[i].position))
                continue;
            KeyPointNode kp;
            kp.id = static_cast<int>(g.keypoints.size());
            kp.descriptor =
                world.points[i].canonical +
                cfg.obs_desc_noise * Eigen::VectorXd::NullaryExpr(cfg.descriptor_dim,
                                                                  [&](int) { return gauss(rng); });
            kp.pixel = cfg.intrinsics.project(wim.pose.apply(world.points[i].position)) +
                       cfg.pixel_noise * Eigen::Vector2d(gauss(rng), gauss(rng));
            g.keypoints.push_back(kp);
            g.edges_v.emplace_back(kp.id, i);
            g.edges_c.emplace_back(kp.id, im.id);
            g.points[i].obs_count_map++;
        }
    }
    g.edges_n = build_knn_edges(g.points, knn_k);
    g.finalize();
    return g;
}

MatchSet simulate_matches(const SyntheticWorld& world, const std::vector<uint8_t>& selection,
                          const std::vector<WorldImage>& queries, uint64_t seed) {
    const auto& cfg = world.cfg;
    if (selection.size() != world.points.size())
        throw UsageError("simulate_matches: selection size mismatch");

    MatchSet out;
    out.per_image.resize(queries.size());
    for (size_t qi = 0; qi < queries.size(); ++qi) {
        const WorldImage& im = queries[qi];
        // per-query generator so results are independent of evaluation order
        std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (qi + 1)));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);

        std::vector<int> candidates;
        for (size_t j = 0; j < world.points.size(); ++j)
            if (selection[j] && world.in_frustum(im, world.points[j].position))
                candidates.push_back(static_cast<int>(j));

        for (size_t i = 0; i < world.points.size(); ++i) {
            if (!world.valid_at(static_cast<int>(i), im.session) ||
                !world.in_frustum(im, world.points[i].position))
                continue;
            // detection draws do not depend on the selection, so paired
            // comparisons across selections see identical query observations
            const bool detected = u01(rng) < cfg.detection_prob;
            Eigen::VectorXd qdesc =
                world.points[i].canonical +
                cfg.obs_desc_noise * Eigen::VectorXd::NullaryExpr(cfg.descriptor_dim,
                                                                  [&](int) { return gauss(rng); });
            Eigen::Vector2d pix =
                cfg.intrinsics.project(im.pose.apply(world.points[i].position)) +
                cfg.pixel_noise * Eigen::Vector2d(gauss(rng), gauss(rng));
            if (!detected || candidates.empty()) continue;

            int best = -1;
            double best_d = std::numeric_limits<double>::infinity();
            for (int j : candidates) {
                const double d = (qdesc - world.points[j].canonical).norm();
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            if (best < 0 || best_d >= cfg.match_tau) continue;
            SimMatch match;
            match.pixel = pix;
            match.point_id = best;
            const Eigen::Vector2d reproj =
                cfg.intrinsics.project(im.pose.apply(world.points[best].position));
            match.correct = (reproj - pix).norm() <= kInlierPx;
            out.per_image[qi].push_back(match);
        }
    }
    return out;
}

std::vector<WorldImage> apply_training_overlay(MapGraph& graph, const SyntheticWorld& world,
                                               uint64_t seed) {
    const auto& cfg = world.cfg;
    std::vector<WorldImage> train_queries, held_out;
    int idx = 0;
    for (const auto& im : world.query_images) {
        if (im.camera_id != 0) continue;
        if (cfg.valid_every > 0 && idx % cfg.valid_every == cfg.valid_every - 1)
            held_out.push_back(im);
        else
            train_queries.push_back(im);
        idx++;
    }

    std::vector<uint8_t> all(world.points.size(), 1);
    MatchSet ms = simulate_matches(world, all, train_queries, seed ^ 0xA24BAED4963EE407ULL);

    std::vector<ImageNode> query_nodes;
    std::vector<QueryMatch> matches;
    for (size_t qi = 0; qi < train_queries.size(); ++qi) {
        ImageNode im;
        im.pose = train_queries[qi].pose;
        im.intrinsics = cfg.intrinsics;
        im.session = train_queries[qi].session;
        im.camera_id = 0;
        im.split = Split::TRAIN;
        query_nodes.push_back(im);
        for (const auto& m : ms.per_image[qi]) {
            KeyPointNode kp;
            kp.descriptor = Eigen::VectorXd::Zero(cfg.descriptor_dim);
            kp.pixel = m.pixel;
            matches.push_back({kp, static_cast<int>(qi), m.point_id});
        }
    }
    query_overlay(graph, matches, query_nodes);
    return held_out;
}

}  // namespace mapcull
