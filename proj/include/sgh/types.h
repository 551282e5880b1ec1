#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

namespace sgh {

enum class Mode { Calibrated, Focal };

struct PinholeCamera {
    Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
    // local -> global: X_global = R * X_local + t
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

struct GeneralizedCamera {
    std::vector<PinholeCamera> cameras;
};

struct Correspondence {
    Eigen::Vector3d p;  // pixel in P, homogeneous
    Eigen::Vector3d g;  // pixel in cameras[cam_index], homogeneous
    int cam_index = 0;
};

struct ReducedMatch {
    Eigen::Vector3d p;
    Eigen::Vector3d q;
    Eigen::Vector3d center;
    int cam_index = 0;
};

// Plane n^T X + 1 = 0.
using PlaneVector = Eigen::Vector3d;

struct SemiHomography {
    Eigen::Matrix3d G;
    Eigen::Vector3d m;
    double w = 1.0;
};

// Maps P's local frame into the generalized camera frame: X_G = R * X_P + t.
struct PoseSolution {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
    PlaneVector n_tilde = Eigen::Vector3d::Zero();
    std::optional<double> f;
};

struct RigidTransform {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d &x) const { return R * x + t; }
    PoseSolution apply(const PoseSolution &pose) const;
};

}  // namespace sgh
