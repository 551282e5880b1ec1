#include <doctest.h>

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

#include "sgh/bench.h"
#include "sgh/error.h"
#include "sgh/geometry.h"
#include "sgh/ransac.h"

using namespace sgh;

namespace {

struct Problem {
    Scene scene;
    std::vector<ReducedMatch> reduced;
};

Problem make_problem(uint64_t seed, int n, double sigma, double outliers) {
    Problem pr;
    pr.scene = gen_scene(SceneConfig{}, seed, n);
    add_noise(pr.scene.corrs, sigma, seed + 1);
    add_outliers(pr.scene.corrs, outliers, SceneConfig{}.image_size, seed + 2);
    for (const Correspondence &c : pr.scene.corrs) {
        pr.reduced.push_back(reduce_match(c, pr.scene.rig, Mode::Calibrated, pr.scene.P.K));
    }
    return pr;
}

PoseSolution calibrated_gt(const Scene &s) {
    PoseSolution gt = s.gt;
    gt.f.reset();
    return gt;
}

}  // namespace

TEST_SUITE("ransac") {

TEST_CASE("sample draws distinct solvable indices") {
    const Problem pr = make_problem(1, 40, 0, 0);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 50; ++k) {
        const std::array<int, 5> idx = sample(pr.reduced, Mode::Calibrated, rng);
        std::vector<ReducedMatch> sub;
        for (int i : idx) sub.push_back(pr.reduced[i]);
        CHECK(classify_sample(sub, Mode::Calibrated).status == Status::Ok);
        for (int a = 0; a < 5; ++a) {
            for (int b = a + 1; b < 5; ++b) CHECK(idx[a] != idx[b]);
        }
    }
}

TEST_CASE("sample is deterministic per seed") {
    const Problem pr = make_problem(2, 40, 0, 0);
    std::mt19937_64 a(9), b(9);
    for (int k = 0; k < 20; ++k) CHECK(sample(pr.reduced, Mode::Calibrated, a) == sample(pr.reduced, Mode::Calibrated, b));
}

TEST_CASE("sample errors") {
    std::mt19937_64 rng(1);
    std::vector<ReducedMatch> four(4);
    try {
        sample(four, Mode::Calibrated, rng);
        FAIL("no throw");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::NotEnoughMatches);
    }
    std::vector<ReducedMatch> one_camera(20);
    try {
        sample(one_camera, Mode::Calibrated, rng);
        FAIL("no throw");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::NoSolvablePattern);
    }
}

TEST_CASE("score") {
    const Problem pr = make_problem(4, 50, 0, 0);
    const PoseSolution gt = calibrated_gt(pr.scene);
    const ScoreResult s = score(gt, pr.scene.corrs, pr.scene.rig, pr.scene.P.K, 2.0);
    CHECK(s.inliers == 50);
    CHECK(s.cost < 1e-12);

    const ScoreResult empty = score(gt, {}, pr.scene.rig, pr.scene.P.K, 2.0);
    CHECK(empty.inliers == 0);
    CHECK(empty.cost == 0.0);

    PoseSolution behind = gt;
    behind.n_tilde = -behind.n_tilde;
    const ScoreResult bad = score(behind, pr.scene.corrs, pr.scene.rig, pr.scene.P.K, 2.0);
    CHECK(bad.inliers == 0);
    CHECK(bad.cost == doctest::Approx(50 * 4.0));
}

TEST_CASE("local optimization recovers a perturbed pose") {
    const Problem pr = make_problem(5, 80, 0, 0);
    const PoseSolution gt = calibrated_gt(pr.scene);
    PoseSolution start = gt;
    start.R = Eigen::AngleAxisd(0.01, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix() * gt.R;
    start.t += 0.01 * gt.t.norm() * Eigen::Vector3d(1, -1, 0.5);
    start.n_tilde *= 1.01;
    const PoseSolution out = local_optimize(start, pr.scene.corrs, pr.scene.rig, pr.scene.P.K, Mode::Calibrated);
    const PoseErrors e = pose_errors(out, gt);
    CHECK(e.rot_deg < 1e-5);
    CHECK(e.pos_units < 1e-5 * gt.t.norm());
}

TEST_CASE("local optimization never increases the cost") {
    const Problem pr = make_problem(6, 80, 1.0, 0);
    const PoseSolution gt = calibrated_gt(pr.scene);
    auto sq = [&](const PoseSolution &p) {
        double c = 0;
        for (const Correspondence &m : pr.scene.corrs) {
            const double e = transfer_error(p, m, pr.scene.rig, pr.scene.P.K);
            c += e * e;
        }
        return c;
    };
    const PoseSolution out = local_optimize(gt, pr.scene.corrs, pr.scene.rig, pr.scene.P.K, Mode::Calibrated);
    CHECK(sq(out) <= sq(gt));
}

TEST_CASE("noise-free adaptive run stops early") {
    const Problem pr = make_problem(7, 100, 0, 0);
    RansacConfig cfg;
    cfg.fixed_iterations = false;
    cfg.solver = SolverOptions{};
    const RansacResult r = ransac(pr.scene.corrs, pr.scene.rig, pr.scene.P.K, cfg);
    CHECK(r.iterations_run <= 10);
    CHECK(pose_errors(r.best, calibrated_gt(pr.scene)).rot_deg < 1e-6);
    CHECK(std::count(r.inlier_mask.begin(), r.inlier_mask.end(), true) == 100);
}

TEST_CASE("outliers are rejected and runs are deterministic") {
    const Problem pr = make_problem(8, 120, 0.5, 0.3);
    RansacConfig cfg;
    cfg.max_iterations = 200;
    cfg.seed = 21;
    const RansacResult a = ransac(pr.scene.corrs, pr.scene.rig, pr.scene.P.K, cfg);
    const RansacResult b = ransac(pr.scene.corrs, pr.scene.rig, pr.scene.P.K, cfg);
    CHECK(a.inlier_mask == b.inlier_mask);
    CHECK(a.score == b.score);
    CHECK((a.best.R - b.best.R).norm() == 0.0);
    CHECK((a.best.t - b.best.t).norm() == 0.0);
    CHECK(a.score_trace.size() == 200);
    for (size_t i = 1; i < a.score_trace.size(); ++i) CHECK(a.score_trace[i] <= a.score_trace[i - 1]);
    CHECK(pose_errors(a.best, calibrated_gt(pr.scene)).rot_deg < 1.0);
}

TEST_CASE("invalid configuration") {
    const Problem pr = make_problem(9, 30, 0, 0);
    RansacConfig cfg;
    cfg.threshold = 0;
    CHECK_THROWS_AS(ransac(pr.scene.corrs, pr.scene.rig, pr.scene.P.K, cfg), Error);
    cfg.threshold = 2;
    cfg.fixed_iterations = false;
    cfg.confidence = 1.5;
    CHECK_THROWS_AS(ransac(pr.scene.corrs, pr.scene.rig, pr.scene.P.K, cfg), Error);
    std::vector<Correspondence> few(pr.scene.corrs.begin(), pr.scene.corrs.begin() + 4);
    CHECK_THROWS_AS(ransac(few, pr.scene.rig, pr.scene.P.K, RansacConfig{}), Error);
}

}  // TEST_SUITE
