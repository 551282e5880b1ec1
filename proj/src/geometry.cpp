#include "sgh/geometry.h"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "sgh/error.h"
#include "sgh/linalg.h"

namespace sgh {

PoseSolution RigidTransform::apply(const PoseSolution &pose) const {
    PoseSolution out = pose;
    out.R = R * pose.R;
    out.t = R * pose.t + t;
    return out;
}

Eigen::Matrix3d skew(const Eigen::Vector3d &v) {
    Eigen::Matrix3d S;
    S << 0, -v(2), v(1), v(2), 0, -v(0), -v(1), v(0), 0;
    return S;
}

Eigen::Matrix3d focal_matrix(double f) { return Eigen::Vector3d(f, f, 1.0).asDiagonal(); }

ReducedMatch reduce_match(const Correspondence &corr, const GeneralizedCamera &rig, Mode mode,
                          const std::optional<Eigen::Matrix3d> &K_P) {
    if (corr.cam_index < 0 || corr.cam_index >= static_cast<int>(rig.cameras.size())) {
        throw Error(ErrorCode::InvalidCamera, "camera index " + std::to_string(corr.cam_index) + " out of range");
    }
    const PinholeCamera &cam = rig.cameras[corr.cam_index];
    if (std::abs(cam.K.determinant()) < 1e-12) throw Error(ErrorCode::InvalidCamera, "singular intrinsics");
    ReducedMatch out;
    out.q = cam.R * cam.K.inverse() * corr.g;
    out.center = cam.t;
    out.cam_index = corr.cam_index;
    if (mode == Mode::Calibrated) {
        if (!K_P) throw Error(ErrorCode::InvalidCamera, "calibrated mode needs the intrinsics of P");
        if (std::abs(K_P->determinant()) < 1e-12) throw Error(ErrorCode::InvalidCamera, "singular intrinsics of P");
        out.p = K_P->inverse() * corr.p;
    } else {
        out.p = corr.p;
    }
    return out;
}

std::pair<GeneralizedCamera, RigidTransform> anchor_frame(const GeneralizedCamera &rig, int anchor) {
    if (anchor < 0 || anchor >= static_cast<int>(rig.cameras.size())) {
        throw Error(ErrorCode::InvalidCamera, "anchor index out of range");
    }
    const PinholeCamera &a = rig.cameras[anchor];
    GeneralizedCamera out = rig;
    for (PinholeCamera &c : out.cameras) {
        c.R = a.R.transpose() * c.R;
        c.t = a.R.transpose() * (c.t - a.t);
    }
    out.cameras[anchor].R.setIdentity();
    out.cameras[anchor].t.setZero();
    RigidTransform back;
    back.R = a.R;
    back.t = a.t;
    return {out, back};
}

Eigen::Matrix3d rotation_to_z(const Eigen::Vector3d &a) {
    const Eigen::Vector3d u = a.normalized();
    if (u.z() < -1.0 + 1e-12) return Eigen::Vector3d(1, -1, -1).asDiagonal();
    return Eigen::Quaterniond::FromTwoVectors(u, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

Prerotation prerotate(const std::vector<ReducedMatch> &matches, Mode mode) {
    Prerotation out;
    if (matches.empty()) return out;
    if (mode == Mode::Calibrated) out.R_p = rotation_to_z(matches[0].p);
    out.R_q = rotation_to_z(matches[0].q);
    out.matches = matches;
    for (ReducedMatch &m : out.matches) {
        m.p = out.R_p * m.p;
        m.q = out.R_q * m.q;
        m.center = out.R_q * m.center;
    }
    return out;
}

double depth_from_plane(const Eigen::Vector3d &p, const PlaneVector &n_tilde, const Eigen::Matrix3d &K) {
    const double den = n_tilde.dot(K.inverse() * p);
    if (std::abs(den) < 1e-14) throw Error(ErrorCode::RayParallelToPlane, "ray parallel to plane");
    return -1.0 / den;
}

ConstraintRows build_constraint_rows(const ReducedMatch &match) {
    const Eigen::Matrix3d S = skew(match.q);
    const Eigen::Vector3d Sc = S * match.center;
    ConstraintRows A;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) A.col(3 * i + j) = S.col(i) * match.p(j);
    }
    for (int k = 0; k < 3; ++k) A.col(9 + k) = Sc * match.p(k);
    return A;
}

Eigen::Matrix<double, 2, 12> independent_constraint_rows(const ReducedMatch &match) {
    const ConstraintRows A = build_constraint_rows(match);
    int drop = 0;
    match.q.cwiseAbs().maxCoeff(&drop);
    Eigen::Matrix<double, 2, 12> out;
    int r = 0;
    for (int i = 0; i < 3; ++i) {
        if (i != drop) out.row(r++) = A.row(i);
    }
    return out;
}

SemiHomography compose_G(const Eigen::Matrix3d &R, const Eigen::Vector3d &t, const PlaneVector &n_tilde,
                         std::optional<double> f) {
    SemiHomography out;
    Eigen::Matrix3d Kinv = Eigen::Matrix3d::Identity();
    if (f) {
        if (!(*f > 0)) throw Error(ErrorCode::InvalidFocal, "focal length must be positive");
        out.w = 1.0 / *f;
        Kinv = focal_matrix(out.w);
    }
    out.m = Kinv * n_tilde;
    out.G = R * Kinv - t * out.m.transpose();
    return out;
}

Eigen::Matrix<double, 12, 1> vec_Gm(const Eigen::Matrix3d &G, const Eigen::Vector3d &m) {
    Eigen::Matrix<double, 12, 1> x;
    x << G(0, 0), G(0, 1), G(0, 2), G(1, 0), G(1, 1), G(1, 2), G(2, 0), G(2, 1), G(2, 2), m;
    return x;
}

namespace {

Eigen::Matrix3d procrustes(const Eigen::Matrix3d &X, const Eigen::Matrix3d &Y) {
    // Rotation R minimizing |R X - Y|.
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(Y * X.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
    D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() > 0 ? 1.0 : -1.0;
    return svd.matrixU() * D * svd.matrixV().transpose();
}

Eigen::Vector3d any_orthogonal(const Eigen::Vector3d &n) {
    int i = 0;
    n.cwiseAbs().minCoeff(&i);
    return n.cross(Eigen::Vector3d::Unit(i)).normalized();
}

}  // namespace

std::vector<Decomposition> decompose_homography(const Eigen::Matrix3d &G, const Eigen::Vector3d &m,
                                                Mode mode, std::optional<double> f) {
    Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
    if (mode == Mode::Focal) {
        if (!f || !(*f > 0)) throw Error(ErrorCode::InvalidFocal, "focal mode needs a positive focal length");
        K = focal_matrix(*f);
    }
    const Eigen::Matrix3d H = G * K;
    const Eigen::Vector3d n = K * m;
    const Eigen::Vector3d sv = singular_values_3x3(H);
    if (!(sv(1) > 1e-12 * sv(0)) || n.norm() == 0.0) {
        throw Error(ErrorCode::DegenerateHomography, "homography rank below 2");
    }
    const Eigen::Vector3d nh = n.normalized();
    const Eigen::Vector3d u1 = any_orthogonal(nh);
    const Eigen::Vector3d u2 = nh.cross(u1);
    Eigen::Matrix3d X;
    X << u1, u2, nh;

    std::vector<Decomposition> out;
    for (double s : {1.0, -1.0}) {
        const Eigen::Matrix3d Hs = s * H;
        const Eigen::Vector3d ns = s * n;
        const Eigen::Vector3d y1 = Hs * u1, y2 = Hs * u2;
        Eigen::Matrix3d Y;
        Y << y1, y2, y1.cross(y2).normalized();
        Decomposition d;
        d.R = procrustes(X, Y);
        d.t = (d.R - Hs) * ns / ns.squaredNorm();
        d.n_tilde = ns;
        out.push_back(d);
    }
    return out;
}

std::vector<Decomposition> decompose_homography_unknown_plane(const Eigen::Matrix3d &H_in,
                                                              const std::vector<Eigen::Vector3d> &p,
                                                              const std::vector<Eigen::Vector3d> &q) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(H_in, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d s = svd.singularValues();
    if (!(s(1) > 1e-12 * s(0))) throw Error(ErrorCode::DegenerateHomography, "homography rank below 2");
    Eigen::Matrix3d H = H_in / s(1);
    double vote = 0;
    for (size_t i = 0; i < p.size() && i < q.size(); ++i) vote += q[i].dot(H * p[i]) > 0 ? 1.0 : -1.0;
    if (vote < 0) H = -H;

    const double s1 = s(0) / s(1), s3 = s(2) / s(1);
    Eigen::Matrix3d V = svd.matrixV();
    if (V.determinant() < 0) V.col(2) = -V.col(2);
    const Eigen::Vector3d v1 = V.col(0), v2 = V.col(1), v3 = V.col(2);

    std::vector<Decomposition> out;
    if (s1 - s3 < 1e-12) {
        // Pure rotation: no translation and no usable plane.
        Decomposition d;
        d.R = procrustes(Eigen::Matrix3d::Identity(), H);
        d.t.setZero();
        d.n_tilde.setZero();
        out.push_back(d);
        return out;
    }
    const double a = std::sqrt(std::max(0.0, 1.0 - s3 * s3));
    const double b = std::sqrt(std::max(0.0, s1 * s1 - 1.0));
    const double c = std::sqrt(s1 * s1 - s3 * s3);
    for (double sign : {1.0, -1.0}) {
        const Eigen::Vector3d u = (a * v1 + sign * b * v3) / c;
        const Eigen::Vector3d Hv2 = H * v2, Hu = H * u;
        Eigen::Matrix3d U, W;
        U << v2, u, v2.cross(u);
        W << Hv2, Hu, Hv2.cross(Hu);
        Decomposition d;
        d.R = W * U.transpose();
        d.n_tilde = v2.cross(u);
        // H = R - t n^T with unit n.
        d.t = (d.R - H) * d.n_tilde;
        out.push_back(d);
    }
    return out;
}

Depths match_depths(const PoseSolution &sol, const ReducedMatch &match, const Eigen::Matrix3d &K) {
    const Eigen::Vector3d r = K.inverse() * match.p;
    const double den = sol.n_tilde.dot(r);
    Depths d;
    d.alpha = den != 0.0 ? -1.0 / den : std::numeric_limits<double>::quiet_NaN();
    const Eigen::Vector3d X = sol.R * (d.alpha * r) + sol.t;
    d.beta = match.q.dot(X - match.center) / match.q.squaredNorm();
    return d;
}

Eigen::Matrix3d solution_K(const PoseSolution &sol, Mode mode) {
    if (mode == Mode::Focal && sol.f) return focal_matrix(*sol.f);
    return Eigen::Matrix3d::Identity();
}

std::vector<PoseSolution> cheirality_filter(const std::vector<PoseSolution> &solutions,
                                            const std::vector<ReducedMatch> &matches, Mode mode) {
    std::vector<PoseSolution> out;
    for (const PoseSolution &s : solutions) {
        const Eigen::Matrix3d K = solution_K(s, mode);
        bool ok = true;
        for (const ReducedMatch &m : matches) {
            const Depths d = match_depths(s, m, K);
            if (!(d.alpha > 0) || !(d.beta > 0)) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(s);
    }
    return out;
}

double rotation_angle_deg(const Eigen::Matrix3d &R) {
    const Eigen::Vector3d v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    const double c = 0.5 * (R.trace() - 1.0);
    return std::atan2(0.5 * v.norm(), c) * 180.0 / M_PI;
}

double angle_between_deg(const Eigen::Vector3d &a, const Eigen::Vector3d &b) {
    return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / M_PI;
}

PoseErrors pose_errors(const PoseSolution &est, const PoseSolution &gt) {
    PoseErrors e;
    e.rot_deg = rotation_angle_deg(gt.R.transpose() * est.R);
    e.trans_dir_deg = angle_between_deg(est.t, gt.t);
    e.pos_units = (est.t - gt.t).norm();
    if (est.f && gt.f) e.focal_px = std::abs(*est.f - *gt.f);
    return e;
}

double transfer_error(const PoseSolution &sol, const Correspondence &corr, const GeneralizedCamera &rig,
                      const Eigen::Matrix3d &K_P) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    if (corr.cam_index < 0 || corr.cam_index >= static_cast<int>(rig.cameras.size())) return kInf;
    const Eigen::Matrix3d K = sol.f ? focal_matrix(*sol.f) : K_P;
    const Eigen::Vector3d r = K.inverse() * corr.p;
    const double den = sol.n_tilde.dot(r);
    if (std::abs(den) < 1e-14) return kInf;
    const double alpha = -1.0 / den;
    if (!(alpha > 0)) return kInf;
    const PinholeCamera &cam = rig.cameras[corr.cam_index];
    const Eigen::Vector3d Xc = cam.R.transpose() * (sol.R * (alpha * r) + sol.t - cam.t);
    if (!(Xc.z() > 0)) return kInf;
    const Eigen::Vector3d x = cam.K * Xc;
    const Eigen::Vector2d g = corr.g.head<2>() / corr.g.z();
    return (x.head<2>() / x.z() - g).norm();
}

}  // namespace sgh
