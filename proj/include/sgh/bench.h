#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "sgh/solvers.h"
#include "sgh/types.h"

namespace sgh {

enum class Motion { Generic, Forward };

struct SceneConfig {
    double plane_size = 10;
    int n_gen_cameras = 5;
    double distance_min = 20;
    double distance_max = 35;
    double image_size = 1000;  // square, principal point at the center
    double focal_min = 800;
    double focal_max = 1200;
    double noise_sigma = 0;
    double planarity_offset = 0;
    Motion motion = Motion::Generic;
    double axis_perturbation_deg = 10;
    double view_cone_deg = 40;  // camera directions around the plane normal
    double forward_min = 2;     // displacement of P along the first camera's axis
    double forward_max = 6;
    uint64_t seed = 0;

    void validate() const;
};

struct Scene {
    GeneralizedCamera rig;
    PinholeCamera P;           // world pose of the query camera
    PoseSolution gt;           // P -> rig frame, plane in P's frame, focal of P
    std::vector<Eigen::Vector3d> points;  // world points behind the correspondences
    std::vector<Correspondence> corrs;    // noise-free unless noise was applied
};

// Camera-to-image projection in pixels; false if behind or outside the image.
bool project(const PinholeCamera &cam, const Eigen::Vector3d &X, double image_size, Eigen::Vector2d &px);

// A scene with n_points correspondences, each point assigned to a uniformly
// random generalized camera that sees it. Throws SceneGenerationFailed.
Scene gen_scene(const SceneConfig &config, uint64_t seed, int n_points);

// A scene whose correspondences follow the given camera multiplicities, e.g.
// {2, 2, 1}, over distinct randomly chosen cameras.
Scene gen_pattern_scene(const SceneConfig &config, uint64_t seed, const std::vector<int> &pattern);

// Adds N(0, sigma) pixel noise to both images of every correspondence.
void add_noise(std::vector<Correspondence> &corrs, double sigma, uint64_t seed);

// Replaces the generalized-camera observation of a random subset with uniform
// image positions. Returns the outlier mask.
std::vector<bool> add_outliers(std::vector<Correspondence> &corrs, double ratio, double image_size, uint64_t seed);

std::vector<int> default_pattern(SolverId id);

struct TrialRecord {
    std::string experiment;
    SolverId solver = SolverId::None;
    double parameter = 0;
    int trial = 0;
    bool failed = false;
    std::string status;
    double rot_deg = 0;
    double trans_dir_deg = 0;
    double pos_units = 0;
    double focal_px = 0;
    double solver_time = 0;
    int n_solutions = 0;
};

struct BenchOptions {
    int trials = 1000;
    uint64_t seed = 0;
    int threads = 1;
    SceneConfig scene;
};

// Per-trial seed; independent of the experiment so that equal settings give
// equal scenes across experiments.
uint64_t trial_seed(uint64_t seed, int trial);

TrialRecord run_trial(SolverId solver, const SceneConfig &config, uint64_t seed, const std::string &experiment,
                      double parameter, int trial);

std::vector<TrialRecord> run_stability(SolverId solver, const BenchOptions &opt);
std::vector<TrialRecord> run_noise_sweep(SolverId solver, const std::vector<double> &sigmas, const BenchOptions &opt);
std::vector<TrialRecord> run_planarity(SolverId solver, const std::vector<double> &offsets, const BenchOptions &opt);
std::vector<TrialRecord> run_forward(SolverId solver, const std::vector<double> &sigmas, const BenchOptions &opt);

// Sorts by (experiment, parameter, trial) and writes RFC 4180 CSV. The
// solver_time column is left empty unless include_timing is set.
void emit_csv(std::vector<TrialRecord> records, const std::string &path, bool include_timing = false);
std::string csv_string(std::vector<TrialRecord> records, bool include_timing = false);

double median(std::vector<double> v);

}  // namespace sgh
