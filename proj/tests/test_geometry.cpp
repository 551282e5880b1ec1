#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>

#include "sgh/error.h"
#include "sgh/geometry.h"
#include "support.h"

using namespace sgh;

TEST_SUITE("geometry") {

TEST_CASE("skew matrix is the cross product") {
    const Eigen::Vector3d a(1, -2, 0.5), b(0.3, 4, -1);
    CHECK((skew(a) * b - a.cross(b)).norm() < 1e-15);
    CHECK((skew(a) + skew(a).transpose()).norm() == 0.0);
}

TEST_CASE("rotation to z") {
    for (const Eigen::Vector3d &a : {Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(0, 0, 5), Eigen::Vector3d(0, 0, -2),
                                     Eigen::Vector3d(-1, 0, 1e-9)}) {
        const Eigen::Matrix3d R = rotation_to_z(a);
        CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() < 1e-12);
        CHECK(R.determinant() == doctest::Approx(1.0));
        CHECK(((R * a).normalized() - Eigen::Vector3d::UnitZ()).norm() < 1e-12);
    }
}

TEST_CASE("rotation angle") {
    CHECK(rotation_angle_deg(Eigen::Matrix3d::Identity()) == 0.0);
    const Eigen::Matrix3d R = Eigen::AngleAxisd(0.3, Eigen::Vector3d(1, 1, 0).normalized()).toRotationMatrix();
    CHECK(rotation_angle_deg(R) == doctest::Approx(0.3 * 180 / M_PI));
    const Eigen::Matrix3d flip = Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitY()).toRotationMatrix();
    CHECK(rotation_angle_deg(flip) == doctest::Approx(180.0));
}

TEST_CASE("constraint rows vanish at the true homography") {
    for (SolverId id : {SolverId::SH5_2, SolverId::SH5F_3}) {
        const test::Sample s = test::make_sample(id, 11);
        const SemiHomography H = compose_G(s.gt.R, s.gt.t, s.gt.n_tilde, s.gt.f);
        const Eigen::Matrix<double, 12, 1> x = vec_Gm(H.G, H.m);
        for (const ReducedMatch &m : s.matches) {
            CHECK((build_constraint_rows(m) * x).norm() <= 1e-10 * x.norm() * m.p.norm() * m.q.norm() *
                                                               (1 + m.center.norm()));
            CHECK((independent_constraint_rows(m) * x).norm() <= 1e-9 * x.norm() * m.p.norm() * m.q.norm() *
                                                                     (1 + m.center.norm()));
        }
    }
}

TEST_CASE("known-plane decomposition recovers the pose") {
    for (SolverId id : {SolverId::SH5_3, SolverId::SH5F_2}) {
        const test::Sample s = test::make_sample(id, 5);
        const SemiHomography H = compose_G(s.gt.R, s.gt.t, s.gt.n_tilde, s.gt.f);
        const std::vector<Decomposition> d = decompose_homography(H.G, H.m, s.mode, s.gt.f);
        bool found = false;
        for (const Decomposition &c : d) {
            if (rotation_angle_deg(s.gt.R.transpose() * c.R) < 1e-8 && (c.t - s.gt.t).norm() < 1e-8 * s.gt.t.norm() &&
                (c.n_tilde - s.gt.n_tilde).norm() < 1e-8 * s.gt.n_tilde.norm()) {
                found = true;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("rank-deficient homography is rejected") {
    Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
    G(0, 0) = 1;
    CHECK_THROWS_AS(decompose_homography(G, Eigen::Vector3d(0, 0, 1), Mode::Calibrated), Error);
}

TEST_CASE("depth from plane") {
    CHECK(depth_from_plane(Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(0, 0, -0.1)) == doctest::Approx(10.0));
    try {
        depth_from_plane(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 0, -0.1));
        FAIL("no throw");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::RayParallelToPlane);
    }
}

TEST_CASE("transfer error vanishes on the true pose") {
    const test::Sample s = test::make_sample(SolverId::SH5_2, 3);
    for (const Correspondence &c : s.scene.corrs) {
        CHECK(transfer_error(s.gt, c, s.scene.rig, s.scene.P.K) < 1e-8);
        CHECK(transfer_error(s.scene.gt, c, s.scene.rig, s.scene.P.K) < 1e-8);
    }
    PoseSolution behind = s.gt;
    behind.n_tilde = -behind.n_tilde;
    CHECK(std::isinf(transfer_error(behind, s.scene.corrs[0], s.scene.rig, s.scene.P.K)));
}

TEST_CASE("cheirality keeps the true pose and drops its mirror") {
    const test::Sample s = test::make_sample(SolverId::SH5_2, 8);
    PoseSolution mirror = s.gt;
    mirror.n_tilde = -mirror.n_tilde;
    const std::vector<PoseSolution> kept = cheirality_filter({s.gt, mirror}, s.matches, s.mode);
    REQUIRE(kept.size() == 1);
    CHECK((kept[0].n_tilde - s.gt.n_tilde).norm() == 0.0);
}

TEST_CASE("anchor frame round trip") {
    const test::Sample s = test::make_sample(SolverId::SH5_2, 2);
    const auto [rig, back] = anchor_frame(s.scene.rig, 1);
    CHECK((rig.cameras[1].R - Eigen::Matrix3d::Identity()).norm() == 0.0);
    for (size_t i = 0; i < rig.cameras.size(); ++i) {
        CHECK((back.R * rig.cameras[i].R - s.scene.rig.cameras[i].R).norm() < 1e-12);
        CHECK((back.apply(rig.cameras[i].t) - s.scene.rig.cameras[i].t).norm() < 1e-9);
    }
}

TEST_CASE("invalid cameras") {
    GeneralizedCamera rig;
    rig.cameras.resize(1);
    Correspondence c;
    c.p = Eigen::Vector3d(1, 2, 1);
    c.g = Eigen::Vector3d(3, 4, 1);
    c.cam_index = 2;
    CHECK_THROWS_AS(reduce_match(c, rig, Mode::Focal), Error);
    c.cam_index = 0;
    CHECK_THROWS_AS(reduce_match(c, rig, Mode::Calibrated), Error);
    rig.cameras[0].K.setZero();
    try {
        reduce_match(c, rig, Mode::Focal);
        FAIL("no throw");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::InvalidCamera);
    }
    CHECK_THROWS_AS(compose_G(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), -5.0),
                    Error);
}

}  // TEST_SUITE
