#pragma once

#include <vector>

#include "mapcull/graph.hpp"

namespace mapcull {

enum class PointClass : uint8_t { STABLE = 0, SEASONAL = 1, REPETITIVE = 2 };

inline const char* to_string(PointClass c) {
    switch (c) {
        case PointClass::STABLE: return "stable";
        case PointClass::SEASONAL: return "seasonal";
        default: return "repetitive";
    }
}

// Two-sided street scene: camera 0 looks at the y>0 band (training side),
// camera 1 at the y<0 band (test side); the frusta never overlap.
struct WorldConfig {
    int num_points = 5000;
    double seasonal_fraction = 0.4;
    double repetitive_fraction = 0.1;
    double seasonal_change_prob = 1.0;  // chance a seasonal point vanishes for all query epochs
    int map_sessions = 6;
    int query_sessions = 6;
    int images_per_session = 60;  // per camera
    int descriptor_dim = 32;
    int class_prototypes = 6;      // appearance prototypes per class
    int repetitive_clusters = 4;   // shared near-identical appearance clusters
    double prototype_radius = 3.0;
    double point_desc_spread = 0.5;     // canonical descriptor around its prototype
    double repetitive_spread = 0.05;    // cluster members nearly indistinguishable
    double obs_desc_noise = 0.1;        // per-observation descriptor noise
    double pixel_noise = 1.0;
    double detection_prob = 0.9;
    double match_tau = 1.2;             // descriptor distance acceptance
    double road_length = 60.0;
    double lateral_min = 4.0;
    double lateral_max = 14.0;
    double height_max = 5.0;
    double camera_height = 1.5;
    double min_depth = 0.5;
    double max_depth = 20.0;
    int valid_every = 4;  // every n-th camera-0 query image held out for validation
    Pinhole intrinsics{300.0, 300.0, 320.0, 240.0, 640, 480};
};

struct WorldPoint {
    Eigen::Vector3d position;
    PointClass cls = PointClass::STABLE;
    std::vector<uint8_t> validity;  // per session, map sessions first
    Eigen::VectorXd canonical;      // noise-free descriptor (map-side reference)
};

struct WorldImage {
    Pose pose;
    int session = 0;
    int camera_id = 0;
};

struct SyntheticWorld {
    WorldConfig cfg;
    std::vector<WorldPoint> points;
    std::vector<WorldImage> map_images;    // sessions [0, map_sessions), both cameras
    std::vector<WorldImage> query_images;  // sessions [map_sessions, map+query)

    int total_sessions() const { return cfg.map_sessions + cfg.query_sessions; }
    bool valid_at(int point, int session) const {
        return points[point].validity[session] != 0;
    }
    bool in_frustum(const WorldImage& im, const Eigen::Vector3d& p) const;
};

SyntheticWorld generate_world(const WorldConfig& cfg, uint64_t seed);

// Projects valid in-frustum points for every mapping image into keypoints
// with noisy descriptors/pixels, then builds kNN edges. Camera 0 images get
// split TRAIN, camera 1 TEST.
MapGraph build_map_graph(const SyntheticWorld& world, int knn_k = 9, uint64_t seed = 1);

struct SimMatch {
    Eigen::Vector2d pixel;  // observed query pixel
    int point_id = -1;      // matched map point
    bool correct = false;   // reprojects within the inlier threshold
};
struct MatchSet {
    std::vector<std::vector<SimMatch>> per_image;  // aligned with the query list
};

// Nearest-descriptor matching of simulated query detections against the
// selected map points inside each query's ground-truth frustum.
MatchSet simulate_matches(const SyntheticWorld& world, const std::vector<uint8_t>& selection,
                          const std::vector<WorldImage>& queries, uint64_t seed);

// Localizes camera-0 (training-side) query images against the full map and
// installs the resulting matches as a QUERY overlay; every cfg.valid_every-th
// image is held out (returned) for validation instead of being overlaid.
std::vector<WorldImage> apply_training_overlay(MapGraph& graph, const SyntheticWorld& world,
                                               uint64_t seed);

inline std::vector<WorldImage> camera_queries(const SyntheticWorld& world, int camera_id) {
    std::vector<WorldImage> out;
    for (const auto& im : world.query_images)
        if (im.camera_id == camera_id) out.push_back(im);
    return out;
}

}  // namespace mapcull
