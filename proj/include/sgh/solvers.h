#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "sgh/error.h"
#include "sgh/types.h"

namespace sgh {

enum class SolverId { SH5_2, SH5_3, SH5_4, SH5F_2, SH5F_3, None };

const char *to_string(SolverId id);
SolverId parse_solver_id(const std::string &name);
Mode solver_mode(SolverId id);

struct SamplePattern {
    std::vector<int> multiplicities;  // descending
};

struct Classification {
    SamplePattern pattern;
    SolverId solver = SolverId::None;
    Status status = Status::Ok;
    std::string reason;
};

Classification classify_sample(const std::vector<ReducedMatch> &matches, Mode mode);

struct SolverDiagnostics {
    int poly_degree = 0;
    int n_real_roots = 0;
    int filtered_count = 0;
};

struct SolverOutput {
    Status status = Status::Ok;
    std::vector<PoseSolution> solutions;
    SolverDiagnostics diag;
};

struct SolverOptions {
    // Normalized generator residual accepted for a candidate root.
    double filter_tol = 1e-6;
    // Normalized residual of the back-substitution generators after scale recovery.
    double scale_tol = 1e-8;
    double nullspace_gap = 1e-6;

    // Residual and scale filters off, for noisy input (RANSAC, noise experiments).
    static SolverOptions noisy();
};

SolverOutput solve_sh5_2(const std::vector<ReducedMatch> &matches, const SolverOptions &opt = {});
SolverOutput solve_sh5_3(const std::vector<ReducedMatch> &matches, const SolverOptions &opt = {});
SolverOutput solve_sh5_4(const std::vector<ReducedMatch> &matches, const SolverOptions &opt = {});
SolverOutput solve_sh5f_2(const std::vector<ReducedMatch> &matches, const SolverOptions &opt = {});
SolverOutput solve_sh5f_3(const std::vector<ReducedMatch> &matches, const SolverOptions &opt = {});

// Runs the solver picked by classify_sample.
SolverOutput solve(const std::vector<ReducedMatch> &matches, Mode mode, const SolverOptions &opt = {});
SolverOutput run_solver(SolverId id, const std::vector<ReducedMatch> &matches, const SolverOptions &opt = {});

struct ScaleResult {
    Status status = Status::Ok;
    double g33 = 0;  // positive representative
    double w = 1;
    double residual = 0;
};

// G' has g'33 = 1.
ScaleResult recover_scale_calibrated(const Eigen::Matrix3d &Gp, const Eigen::Vector3d &mp, double tol = 1e-8);
ScaleResult recover_scale_focal(const Eigen::Matrix3d &Gp, const Eigen::Vector3d &mp, double tol = 1e-8);

// Metric scale of t fixing the fifth ray: c^T (R p x q) / t^T (R p x q).
// Returns false when the denominator vanishes.
bool fifth_ray_scale(const Eigen::Matrix3d &R, const Eigen::Vector3d &t, const Eigen::Vector3d &p,
                const Eigen::Vector3d &q, const Eigen::Vector3d &center, double &scale);

// Normalized residual of the five-match constraint system for a pose.
double constraint_residual(const PoseSolution &sol, const ReducedMatch &match, Mode mode);

// Largest normalized I1 generator residual of the pose's (G, m).
double generator_residual(const PoseSolution &sol, Mode mode);

}  // namespace sgh
