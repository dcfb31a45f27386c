#pragma once

#include "mapcull/kcover.hpp"
#include "mapcull/world.hpp"

namespace mapcull {

// Pose-error thresholds (meters, degrees), tightest first.
inline constexpr double kRecallPosThresh[3] = {0.25, 0.5, 5.0};
inline constexpr double kRecallRotThresh[3] = {2.0, 5.0, 10.0};

// Uniform random subset of points scoring above the threshold; any deficit
// is filled uniformly from the rest. Returns a 0/1 mask over point ids.
std::vector<uint8_t> sparsify_by_scores(const Eigen::VectorXd& scores, int n_desired,
                                        double threshold, uint64_t seed);

std::vector<uint8_t> sparsify_random(int num_points, int n_desired, uint64_t seed);

inline std::vector<uint8_t> selection_from_solution(const KCoverSolution& sol,
                                                    const std::vector<int>& col_point_ids,
                                                    int num_points) {
    std::vector<uint8_t> sel(num_points, 0);
    for (size_t c = 0; c < sol.x.size(); ++c)
        if (sol.x[c]) sel[col_point_ids[c]] = 1;
    return sel;
}

// Tops an undersized selection up to the budget deterministically:
// most-observed map points first, ties by ascending id.
void fill_selection_to_budget(std::vector<uint8_t>& sel, const MapGraph& graph, int budget);

struct RecallResult {
    double recall[3] = {0, 0, 0};
    long long kpts = 0;            // retained MAP keypoint descriptors
    int num_queries = 0;
    std::vector<int> match_counts;  // accepted matches per query image
};

RecallResult evaluate_recall(const SyntheticWorld& world, const MapGraph& graph,
                             const std::vector<uint8_t>& selection,
                             const std::vector<WorldImage>& queries, uint64_t seed);

struct CurvePoint {
    double kpts = 0;
    double recall = 0;
};
struct SceneCurve {
    std::vector<CurvePoint> points;  // ascending kpts
    int num_images = 0;
};

// Linear interpolation of each scene's curve onto the grid, then an
// image-count-weighted average. Grid values outside a scene's range are
// clamped to its end values and *clamped is set.
std::vector<double> aggregate_curves(const std::vector<SceneCurve>& scenes,
                                     const std::vector<double>& grid,
                                     bool* clamped = nullptr);

// Density histogram over [edges[i], edges[i+1]) bins; the last bin is closed.
std::vector<double> match_count_histogram(const std::vector<int>& counts,
                                          const std::vector<double>& edges);

// K-Cover instance built from simulated query matches against the full map
// (the unrealizable query-side oracle baseline).
KCoverInstance build_query_oracle_instance(const SyntheticWorld& world,
                                           const std::vector<WorldImage>& queries, int b,
                                           int n_desired, uint64_t seed);

}  // namespace mapcull
