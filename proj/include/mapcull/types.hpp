#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mapcull {

enum class Origin : uint8_t { MAP = 0, QUERY = 1 };
enum class Split : uint8_t { TRAIN = 0, VALID = 1, TEST = 2 };

inline const char* to_string(Origin o) { return o == Origin::MAP ? "map" : "query"; }
inline const char* to_string(Split s) {
    switch (s) {
        case Split::TRAIN: return "train";
        case Split::VALID: return "valid";
        default: return "test";
    }
}

inline Origin origin_from_string(const std::string& s) {
    if (s == "map") return Origin::MAP;
    if (s == "query") return Origin::QUERY;
    throw std::invalid_argument("unknown origin: " + s);
}
inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::TRAIN;
    if (s == "valid") return Split::VALID;
    if (s == "test") return Split::TEST;
    throw std::invalid_argument("unknown split: " + s);
}

struct Pinhole {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    Eigen::Vector2d project(const Eigen::Vector3d& cam) const {
        return {fx * cam.x() / cam.z() + cx, fy * cam.y() / cam.z() + cy};
    }
    bool inside(const Eigen::Vector2d& px) const {
        return px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 && px.y() < height;
    }
    Eigen::Vector3d unproject(const Eigen::Vector2d& px) const {
        return {(px.x() - cx) / fx, (px.y() - cy) / fy, 1.0};
    }
    bool operator==(const Pinhole&) const = default;
};

// Rigid transform world -> camera: x_cam = R * x_world + t.
struct Pose {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& world) const { return R * world + t; }
    Eigen::Vector3d center() const { return -R.transpose() * t; }

    bool operator==(const Pose& o) const { return R == o.R && t == o.t; }
};

inline double rotation_angle_deg(const Eigen::Matrix3d& R) {
    // atan2 form stays accurate for tiny angles where acos bottoms out
    const double c = (R.trace() - 1.0) / 2.0;
    const Eigen::Vector3d w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    return std::atan2(w.norm() / 2.0, c) * 180.0 / M_PI;
}

// Errors split by exit-code class used in the CLI.
struct UsageError : std::runtime_error { using std::runtime_error::runtime_error; };
struct DataError : std::runtime_error { using std::runtime_error::runtime_error; };
struct NumericalError : std::runtime_error { using std::runtime_error::runtime_error; };

}  // namespace mapcull
