#pragma once

#include <vector>

#include "sgh/bench.h"
#include "sgh/geometry.h"
#include "sgh/solvers.h"

namespace sgh::test {

struct Sample {
    Scene scene;
    Mode mode;
    PoseSolution gt;
    std::vector<ReducedMatch> matches;
};

inline Sample make_sample(SolverId id, uint64_t seed, double sigma = 0) {
    Sample s;
    SceneConfig cfg;
    s.scene = gen_pattern_scene(cfg, seed, default_pattern(id));
    add_noise(s.scene.corrs, sigma, seed + 17);
    s.mode = solver_mode(id);
    s.gt = s.scene.gt;
    if (s.mode == Mode::Calibrated) s.gt.f.reset();
    for (const Correspondence &c : s.scene.corrs) {
        s.matches.push_back(reduce_match(c, s.scene.rig, s.mode, s.scene.P.K));
    }
    return s;
}

inline double best_rotation_error(const SolverOutput &out, const PoseSolution &gt) {
    double best = 1e300;
    for (const PoseSolution &s : out.solutions) best = std::min(best, pose_errors(s, gt).rot_deg);
    return best;
}

inline const PoseSolution *closest(const SolverOutput &out, const PoseSolution &gt) {
    const PoseSolution *best = nullptr;
    double e = 1e300;
    for (const PoseSolution &s : out.solutions) {
        const double r = pose_errors(s, gt).rot_deg;
        if (r < e) {
            e = r;
            best = &s;
        }
    }
    return best;
}

}  // namespace sgh::test
