#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "sgh/solvers.h"
#include "sgh/types.h"

namespace sgh {

struct RansacConfig {
    int max_iterations = 1000;
    double threshold = 2.0;  // pixels
    Mode mode = Mode::Calibrated;
    bool fixed_iterations = true;
    double confidence = 0.99;
    bool lo_enabled = true;
    uint64_t seed = 0;
    SolverOptions solver = SolverOptions::noisy();
};

struct RansacResult {
    PoseSolution best;
    std::vector<bool> inlier_mask;
    double score = 0;
    int iterations_run = 0;
    double elapsed = 0;  // seconds
    std::vector<double> score_trace;  // best score after each iteration
};

// Five distinct indices drawn uniformly, redrawn up to 100 times while the
// pattern is unsolvable.
std::array<int, 5> sample(const std::vector<ReducedMatch> &matches, Mode mode, std::mt19937_64 &rng);

struct ScoreResult {
    std::vector<bool> mask;
    double cost = 0;
    int inliers = 0;
};

ScoreResult score(const PoseSolution &model, const std::vector<Correspondence> &matches,
                  const GeneralizedCamera &rig, const Eigen::Matrix3d &K_P, double threshold);

struct LocalOptimizeOptions {
    int max_iterations = 50;
    double gradient_tol = 1e-10;
};

// Levenberg-Marquardt on the summed squared transfer error of the given
// matches. Returns the input when no step improves it.
PoseSolution local_optimize(const PoseSolution &model, const std::vector<Correspondence> &inliers,
                            const GeneralizedCamera &rig, const Eigen::Matrix3d &K_P, Mode mode,
                            const LocalOptimizeOptions &opt = {});

RansacResult ransac(const std::vector<Correspondence> &matches, const GeneralizedCamera &rig,
                    const std::optional<Eigen::Matrix3d> &K_P, const RansacConfig &config);

}  // namespace sgh
