#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mapcull/types.hpp"

namespace mapcull {

// 3D map point. obs_count_map counts observing map images; obs_count_query
// counts 2D-3D matches collected while localizing training queries.
struct PointNode {
    int id = 0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    std::optional<int> label_gt;    // only set in the training area
    std::optional<double> score;    // in [0,1] once written
    int obs_count_map = 0;
    int obs_count_query = 0;
};

struct KeyPointNode {
    int id = 0;
    Eigen::VectorXd descriptor;
    Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
    Origin origin = Origin::MAP;
};

struct ImageNode {
    int id = 0;
    Pose pose;
    Pinhole intrinsics;
    int session = 0;
    int camera_id = 0;
    Origin origin = Origin::MAP;
    Split split = Split::TRAIN;
};

using Edge = std::pair<int, int>;

// Heterogeneous SfM map graph: point / keypoint / image nodes plus
// visibility (keypoint->point), kNN (point->point) and containing
// (keypoint->image) edges. Query-origin nodes/edges form a separate overlay
// distinguished by origin tags.
struct MapGraph {
    int descriptor_dim = 0;
    int knn_k = 0;
    uint64_t seed = 0;

    std::vector<PointNode> points;
    std::vector<KeyPointNode> keypoints;
    std::vector<ImageNode> images;
    std::vector<Edge> edges_v;  // keypoint w -> point i
    std::vector<Edge> edges_n;  // point j -> point i
    std::vector<Edge> edges_c;  // keypoint w -> image l

    // Derived adjacency, rebuilt by finalize(). Ascending-id order throughout.
    std::vector<std::vector<int>> point_kpts_map;    // MAP-origin keypoints per point
    std::vector<std::vector<int>> point_kpts_query;  // QUERY-origin keypoints per point
    std::vector<std::vector<int>> point_knn_src;     // kNN sources j of each point i
    std::vector<std::vector<int>> image_kpts;        // keypoints per image
    std::vector<int> kpt_image;                      // containing image per keypoint
    std::vector<int> kpt_point;                      // observed point per keypoint (-1 if none)
    Eigen::MatrixXd desc_sum;                        // per point, sum of MAP keypoint descriptors (N_p x D)

    void finalize();
    void validate() const;  // referential integrity + schema invariants

    // phi_l: points observed by image l through MAP-origin keypoints.
    std::vector<int> visible_points(int image_id, Origin origin = Origin::MAP) const;

    bool operator==(const MapGraph& o) const;
};

// Local closure around one anchor image, sufficient to score its
// center points exactly as on the full graph.
struct Subgraph {
    int anchor_image = -1;
    std::vector<int> center_points;     // phi_l, sorted
    std::vector<int> neighbor_points;   // union of kNN sources of centers, sorted
    std::vector<int> all_points;        // center u neighbors, sorted
    std::vector<int> keypoints_needed;  // MAP keypoints observing any point above, sorted
    std::vector<Edge> edges_v;
    std::vector<Edge> edges_n;          // kNN edges into center points
    std::vector<Edge> edges_c;          // containing edges of the anchor's keypoints
};

struct QueryMatch {
    KeyPointNode keypoint;  // QUERY-origin, id ignored on input
    int image_index;        // index into the query_images argument
    int point_id;           // matched map point
};

std::vector<Edge> build_knn_edges(const std::vector<PointNode>& points, int k,
                                  int brute_force_cap = 50000);

Subgraph sample_subgraph(const MapGraph& graph, int image_id);

// Adds QUERY-origin keypoints/images/edges and bumps obs_count_query.
void query_overlay(MapGraph& graph, const std::vector<QueryMatch>& matches,
                   const std::vector<ImageNode>& query_images);

}  // namespace mapcull
