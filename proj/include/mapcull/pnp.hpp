#pragma once

#include <vector>

#include "mapcull/types.hpp"

namespace mapcull {

struct PnpResult {
    bool success = false;
    Pose pose;
    int inliers = 0;
};

// Direct linear transform on >= 6 correspondences (world point -> pixel).
// Throws NumericalError on a degenerate (rank-deficient) configuration.
Pose pnp_dlt(const std::vector<Eigen::Vector3d>& points,
             const std::vector<Eigen::Vector2d>& pixels, const Pinhole& K);

// Gauss-Newton refinement of reprojection error in pixels.
Pose refine_pose(Pose pose, const std::vector<Eigen::Vector3d>& points,
                 const std::vector<Eigen::Vector2d>& pixels, const Pinhole& K,
                 int iterations = 10);

// RANSAC over 6-point minimal DLT samples with least-squares refinement on
// the inlier set. Fewer than 6 matches, or no non-degenerate sample, fails.
PnpResult solve_pnp(const std::vector<Eigen::Vector3d>& points,
                    const std::vector<Eigen::Vector2d>& pixels, const Pinhole& K,
                    uint64_t seed, int max_iterations = 200, double inlier_px = 4.0);

inline double position_error(const Pose& est, const Pose& gt) {
    return (est.center() - gt.center()).norm();
}
inline double rotation_error_deg(const Pose& est, const Pose& gt) {
    return rotation_angle_deg(est.R * gt.R.transpose());
}

}  // namespace mapcull
