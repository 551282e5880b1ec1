#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "sgh/types.h"

namespace sgh {

Eigen::Matrix3d skew(const Eigen::Vector3d &v);

Eigen::Matrix3d focal_matrix(double f);

ReducedMatch reduce_match(const Correspondence &corr, const GeneralizedCamera &rig, Mode mode,
                          const std::optional<Eigen::Matrix3d> &K_P = std::nullopt);

// Re-expresses the rig so that cameras[anchor] sits at (I, 0). The returned
// transform maps poses in the anchored frame back to the original frame.
std::pair<GeneralizedCamera, RigidTransform> anchor_frame(const GeneralizedCamera &rig,
                                                          int anchor);

// Smallest rotation taking the direction of a onto +z. The anti-parallel case
// uses diag(1, -1, -1).
Eigen::Matrix3d rotation_to_z(const Eigen::Vector3d &a);

struct Prerotation {
    Eigen::Matrix3d R_p = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d R_q = Eigen::Matrix3d::Identity();
    std::vector<ReducedMatch> matches;
};

Prerotation prerotate(const std::vector<ReducedMatch> &matches, Mode mode);

double depth_from_plane(const Eigen::Vector3d &p, const PlaneVector &n_tilde,
                        const Eigen::Matrix3d &K = Eigen::Matrix3d::Identity());

using ConstraintRows = Eigen::Matrix<double, 3, 12>;

// [q]_x (G p + (m^T p) c) = 0 over the unknowns (G row-major, m).
ConstraintRows build_constraint_rows(const ReducedMatch &match);

// The two rows left after dropping the one indexed by the largest |q_k|.
Eigen::Matrix<double, 2, 12> independent_constraint_rows(const ReducedMatch &match);

SemiHomography compose_G(const Eigen::Matrix3d &R, const Eigen::Vector3d &t,
                         const PlaneVector &n_tilde, std::optional<double> f = std::nullopt);

Eigen::Matrix<double, 12, 1> vec_Gm(const Eigen::Matrix3d &G, const Eigen::Vector3d &m);

struct Decomposition {
    Eigen::Matrix3d R;
    Eigen::Vector3d t;
    PlaneVector n_tilde;
};

// Known-plane decomposition of H = G K = R - t n^T. Both sign classes are
// returned. Throws DegenerateHomography when rank(H) < 2.
std::vector<Decomposition> decompose_homography(const Eigen::Matrix3d &G, const Eigen::Vector3d &m,
                                                Mode mode, std::optional<double> f = std::nullopt);

// Unknown-plane decomposition of a calibrated homography H ~ R - t n^T.
// H is normalized to sigma_2 = 1 with the sign fixed by positive depth of the
// given rays. Up to two physical candidates with unit-free scale.
std::vector<Decomposition> decompose_homography_unknown_plane(
    const Eigen::Matrix3d &H, const std::vector<Eigen::Vector3d> &p,
    const std::vector<Eigen::Vector3d> &q);

// Depth along q of the plane point seen by p, in P (alpha) and in the match
// camera (beta).
struct Depths {
    double alpha;
    double beta;
};

Depths match_depths(const PoseSolution &sol, const ReducedMatch &match, const Eigen::Matrix3d &K);

// Calibration to apply to ReducedMatch::p for a solution in the given mode.
Eigen::Matrix3d solution_K(const PoseSolution &sol, Mode mode);

std::vector<PoseSolution> cheirality_filter(const std::vector<PoseSolution> &solutions,
                                            const std::vector<ReducedMatch> &matches, Mode mode);

struct PoseErrors {
    double rot_deg = 0;
    double trans_dir_deg = 0;
    double pos_units = 0;
    double focal_px = 0;
};

double rotation_angle_deg(const Eigen::Matrix3d &R);

double angle_between_deg(const Eigen::Vector3d &a, const Eigen::Vector3d &b);

PoseErrors pose_errors(const PoseSolution &est, const PoseSolution &gt);

// Plane-induced transfer from P into camera cam_index, in pixels. +inf when the
// point falls behind either camera or the ray misses the plane.
double transfer_error(const PoseSolution &sol, const Correspondence &corr,
                      const GeneralizedCamera &rig, const Eigen::Matrix3d &K_P);

}  // namespace sgh
