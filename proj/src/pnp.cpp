#include "mapcull/pnp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mapcull {

namespace {

bool sample_degenerate(const std::vector<Eigen::Vector3d>& pts, const std::vector<int>& idx) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int i : idx) mean += pts[i];
    mean /= static_cast<double>(idx.size());
    Eigen::MatrixXd C(idx.size(), 3);
    for (size_t r = 0; r < idx.size(); ++r) C.row(r) = (pts[idx[r]] - mean).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
    const auto& s = svd.singularValues();
    // DLT needs a full-rank (non-coplanar) point set
    return s[0] < 1e-12 || s[2] < 1e-6 * s[0];
}

double reproj_error(const Pose& pose, const Eigen::Vector3d& X, const Eigen::Vector2d& px,
                    const Pinhole& K) {
    Eigen::Vector3d cam = pose.apply(X);
    if (cam.z() <= 1e-9) return std::numeric_limits<double>::infinity();
    return (K.project(cam) - px).norm();
}

}  // namespace

Pose pnp_dlt(const std::vector<Eigen::Vector3d>& points,
             const std::vector<Eigen::Vector2d>& pixels, const Pinhole& K) {
    const size_t n = points.size();
    if (n < 6 || pixels.size() != n) throw UsageError("pnp_dlt: need >= 6 correspondences");

    // Hartley normalization of the 3D points for conditioning.
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& p : points) c += p;
    c /= static_cast<double>(n);
    double rms = 0.0;
    for (const auto& p : points) rms += (p - c).squaredNorm();
    rms = std::sqrt(rms / static_cast<double>(n));
    if (rms < 1e-12) throw NumericalError("pnp_dlt: degenerate point set");
    const double sw = std::sqrt(3.0) / rms;

    Eigen::MatrixXd A(2 * n, 12);
    for (size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d Xn = sw * (points[i] - c);
        const double u = (pixels[i].x() - K.cx) / K.fx;
        const double v = (pixels[i].y() - K.cy) / K.fy;
        Eigen::RowVector4d Xh(Xn.x(), Xn.y(), Xn.z(), 1.0);
        A.row(2 * i) << Xh, Eigen::RowVector4d::Zero(), -u * Xh;
        A.row(2 * i + 1) << Eigen::RowVector4d::Zero(), Xh, -v * Xh;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
    if (svd.singularValues()[10] < 1e-9 * svd.singularValues()[0] ||
        svd.singularValues()[0] < 1e-12)
        throw NumericalError("pnp_dlt: degenerate configuration");
    Eigen::VectorXd p = svd.matrixV().col(11);

    Eigen::Matrix<double, 3, 4> Pn;
    Pn << p.segment<4>(0).transpose(), p.segment<4>(4).transpose(), p.segment<4>(8).transpose();
    // undo the normalization: Xn = sw * (X - c)
    Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
    T.topLeftCorner<3, 3>() *= sw;
    T.topRightCorner<3, 1>() = -sw * c;
    Eigen::Matrix<double, 3, 4> P = Pn * T;

    Eigen::Matrix3d M = P.leftCols<3>();
    if (M.determinant() < 0) P = -P;
    M = P.leftCols<3>();
    Eigen::JacobiSVD<Eigen::Matrix3d> msvd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double scale = msvd.singularValues().mean();
    if (scale < 1e-12) throw NumericalError("pnp_dlt: zero-scale solution");
    Eigen::Matrix3d R = msvd.matrixU() * msvd.matrixV().transpose();
    if (R.determinant() < 0) {
        Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
        flip(2, 2) = -1.0;
        R = msvd.matrixU() * flip * msvd.matrixV().transpose();
    }
    Pose pose;
    pose.R = R;
    pose.t = P.col(3) / scale;
    return pose;
}

Pose refine_pose(Pose pose, const std::vector<Eigen::Vector3d>& points,
                 const std::vector<Eigen::Vector2d>& pixels, const Pinhole& K,
                 int iterations) {
    const size_t n = points.size();
    for (int it = 0; it < iterations; ++it) {
        Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
        for (size_t i = 0; i < n; ++i) {
            Eigen::Vector3d cam = pose.apply(points[i]);
            if (cam.z() <= 1e-9) continue;
            Eigen::Vector2d r = K.project(cam) - pixels[i];
            Eigen::Matrix<double, 2, 3> Jp;
            const double z = cam.z();
            Jp << K.fx / z, 0, -K.fx * cam.x() / (z * z),
                  0, K.fy / z, -K.fy * cam.y() / (z * z);
            // update model: R <- exp(w^) R, t <- t + dt, so d(cam)/dw = -[R X]x
            Eigen::Vector3d RX = cam - pose.t;
            Eigen::Matrix3d skew;
            skew << 0, -RX.z(), RX.y(), RX.z(), 0, -RX.x(), -RX.y(), RX.x(), 0;
            Eigen::Matrix<double, 2, 6> J;
            J.leftCols<3>() = Jp * (-skew);
            J.rightCols<3>() = Jp;
            H += J.transpose() * J;
            g += J.transpose() * r;
        }
        H.diagonal().array() += 1e-9;
        Eigen::Matrix<double, 6, 1> delta = H.ldlt().solve(-g);
        if (!delta.allFinite()) break;
        Eigen::Vector3d w = delta.head<3>();
        const double angle = w.norm();
        Eigen::Matrix3d dR = angle < 1e-15
                                 ? Eigen::Matrix3d::Identity()
                                 : Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
        pose.R = dR * pose.R;
        pose.t += delta.tail<3>();
        if (delta.norm() < 1e-14) break;
    }
    return pose;
}

PnpResult solve_pnp(const std::vector<Eigen::Vector3d>& points,
                    const std::vector<Eigen::Vector2d>& pixels, const Pinhole& K,
                    uint64_t seed, int max_iterations, double inlier_px) {
    PnpResult out;
    const int n = static_cast<int>(points.size());
    if (n < 6 || pixels.size() != points.size()) return out;

    std::mt19937_64 rng(seed);
    std::vector<int> best_inliers;
    double needed = max_iterations;
    for (int it = 0; it < max_iterations && it < needed; ++it) {
        std::vector<int> sample;
        while (static_cast<int>(sample.size()) < 6) {
            int cand = static_cast<int>(rng() % n);
            if (std::find(sample.begin(), sample.end(), cand) == sample.end())
                sample.push_back(cand);
        }
        if (sample_degenerate(points, sample)) continue;
        Pose pose;
        try {
            std::vector<Eigen::Vector3d> sp;
            std::vector<Eigen::Vector2d> su;
            for (int i : sample) {
                sp.push_back(points[i]);
                su.push_back(pixels[i]);
            }
            // GN polish on the sample: the minimal DLT estimate alone is too
            // unstable on shallow (near-coplanar) samples to score inliers
            pose = refine_pose(pnp_dlt(sp, su, K), sp, su, K);
        } catch (const NumericalError&) {
            continue;
        }
        std::vector<int> inl;
        for (int i = 0; i < n; ++i)
            if (reproj_error(pose, points[i], pixels[i], K) <= inlier_px) inl.push_back(i);
        if (inl.size() > best_inliers.size()) {
            best_inliers = std::move(inl);
            const double w = static_cast<double>(best_inliers.size()) / n;
            const double denom = std::log(std::max(1e-12, 1.0 - std::pow(w, 6)));
            needed = denom < 0 ? std::log(1.0 - 0.999) / denom : max_iterations;
        }
    }
    if (static_cast<int>(best_inliers.size()) < 6) return out;

    // refit + refine on the inlier set, then one re-selection pass
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<Eigen::Vector3d> ip;
        std::vector<Eigen::Vector2d> iu;
        for (int i : best_inliers) {
            ip.push_back(points[i]);
            iu.push_back(pixels[i]);
        }
        Pose pose;
        try {
            pose = pnp_dlt(ip, iu, K);
        } catch (const NumericalError&) {
            if (pass == 0) return out;
            break;
        }
        pose = refine_pose(pose, ip, iu, K);
        std::vector<int> inl;
        for (int i = 0; i < n; ++i)
            if (reproj_error(pose, points[i], pixels[i], K) <= inlier_px) inl.push_back(i);
        if (static_cast<int>(inl.size()) < 6) return out;
        out.success = true;
        out.pose = pose;
        out.inliers = static_cast<int>(inl.size());
        if (inl == best_inliers) break;
        best_inliers = std::move(inl);
    }
    return out;
}

}  // namespace mapcull
