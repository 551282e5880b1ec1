#include "sgh/bench.h"

#include <Eigen/Geometry>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "sgh/error.h"
#include "sgh/geometry.h"

namespace sgh {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform(std::mt19937_64 &rng, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
}

Eigen::Vector3d random_unit(std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Vector3d v(n(rng), n(rng), n(rng));
    return v.normalized();
}

PinholeCamera make_camera(const SceneConfig &cfg, std::mt19937_64 &rng) {
    const double cone = cfg.view_cone_deg * M_PI / 180.0;
    const double cos_t = uniform(rng, std::cos(cone), 1.0);
    const double phi = uniform(rng, 0.0, 2 * M_PI);
    const double sin_t = std::sqrt(1.0 - cos_t * cos_t);
    const Eigen::Vector3d dir(sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t);
    const double h = 0.25 * cfg.plane_size;
    const Eigen::Vector3d target(uniform(rng, -h, h), uniform(rng, -h, h), 0.0);
    const Eigen::Vector3d C = target + uniform(rng, cfg.distance_min, cfg.distance_max) * dir;

    Eigen::Vector3d z = (target - C).normalized();
    Eigen::Vector3d axis = random_unit(rng);
    axis = (axis - axis.dot(z) * z).normalized();
    const double ang = uniform(rng, 0.0, cfg.axis_perturbation_deg * M_PI / 180.0);
    z = Eigen::AngleAxisd(ang, axis) * z;
    Eigen::Vector3d x = random_unit(rng);
    x = (x - x.dot(z) * z).normalized();
    const Eigen::Vector3d y = z.cross(x);

    PinholeCamera cam;
    cam.R.col(0) = x;
    cam.R.col(1) = y;
    cam.R.col(2) = z;
    cam.t = C;
    cam.K = focal_matrix(uniform(rng, cfg.focal_min, cfg.focal_max));
    return cam;
}

void make_cameras(const SceneConfig &cfg, std::mt19937_64 &rng, Scene &s) {
    s.rig.cameras.clear();
    for (int i = 0; i < cfg.n_gen_cameras; ++i) s.rig.cameras.push_back(make_camera(cfg, rng));
    if (cfg.motion == Motion::Forward) {
        const PinholeCamera &g0 = s.rig.cameras[0];
        s.P.R = g0.R;
        s.P.t = g0.t + uniform(rng, cfg.forward_min, cfg.forward_max) * g0.R.col(2);
        s.P.K = focal_matrix(uniform(rng, cfg.focal_min, cfg.focal_max));
    } else {
        s.P = make_camera(cfg, rng);
    }
    s.gt.R = s.P.R;
    s.gt.t = s.P.t;
    s.gt.n_tilde = s.P.R.transpose() * Eigen::Vector3d::UnitZ() / s.P.t.z();
    s.gt.f = s.P.K(0, 0);
}

Eigen::Vector3d plane_point(const SceneConfig &cfg, std::mt19937_64 &rng) {
    const double h = 0.5 * cfg.plane_size;
    const double z = cfg.planarity_offset > 0 ? uniform(rng, -cfg.planarity_offset, cfg.planarity_offset) : 0.0;
    return Eigen::Vector3d(uniform(rng, -h, h), uniform(rng, -h, h), z);
}

Correspondence make_corr(const Eigen::Vector2d &p, const Eigen::Vector2d &g, int cam) {
    Correspondence c;
    c.p << p, 1.0;
    c.g << g, 1.0;
    c.cam_index = cam;
    return c;
}

template <typename F>
void parallel_for(int n, int threads, F &&f) {
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) f(i);
        });
    }
    for (std::thread &th : pool) th.join();
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string &s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

void SceneConfig::validate() const {
    if (!(distance_min < distance_max)) throw Error(ErrorCode::InvalidConfig, "distance range must be increasing");
    if (!(noise_sigma >= 0)) throw Error(ErrorCode::InvalidConfig, "noise sigma must be non-negative");
    if (!(plane_size > 0) || !(image_size > 0)) throw Error(ErrorCode::InvalidConfig, "sizes must be positive");
    if (!(focal_min > 0) || focal_min > focal_max) throw Error(ErrorCode::InvalidConfig, "bad focal range");
    if (n_gen_cameras < 1) throw Error(ErrorCode::InvalidConfig, "need at least one generalized camera");
    if (planarity_offset < 0) throw Error(ErrorCode::InvalidConfig, "planarity offset must be non-negative");
}

bool project(const PinholeCamera &cam, const Eigen::Vector3d &X, double image_size, Eigen::Vector2d &px) {
    const Eigen::Vector3d Xc = cam.R.transpose() * (X - cam.t);
    if (!(Xc.z() > 1e-9)) return false;
    const Eigen::Vector3d x = cam.K * Xc;
    px = x.head<2>() / x.z();
    const double h = 0.5 * image_size;
    return std::abs(px.x()) <= h && std::abs(px.y()) <= h;
}

Scene gen_scene(const SceneConfig &config, uint64_t seed, int n_points) {
    config.validate();
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 50; ++attempt) {
        Scene s;
        make_cameras(config, rng, s);
        bool ok = true;
        for (int i = 0; i < n_points && ok; ++i) {
            ok = false;
            for (int tries = 0; tries < 1000; ++tries) {
                const Eigen::Vector3d X = plane_point(config, rng);
                Eigen::Vector2d p;
                if (!project(s.P, X, config.image_size, p)) continue;
                std::vector<std::pair<int, Eigen::Vector2d>> vis;
                for (int c = 0; c < config.n_gen_cameras; ++c) {
                    Eigen::Vector2d g;
                    if (project(s.rig.cameras[c], X, config.image_size, g)) vis.emplace_back(c, g);
                }
                if (vis.empty()) continue;
                const auto &[cam, g] = vis[std::uniform_int_distribution<size_t>(0, vis.size() - 1)(rng)];
                s.points.push_back(X);
                s.corrs.push_back(make_corr(p, g, cam));
                ok = true;
                break;
            }
        }
        if (ok) return s;
    }
    throw Error(ErrorCode::SceneGenerationFailed, "visibility constraints not met");
}

Scene gen_pattern_scene(const SceneConfig &config, uint64_t seed, const std::vector<int> &pattern) {
    config.validate();
    if (static_cast<int>(pattern.size()) > config.n_gen_cameras) {
        throw Error(ErrorCode::InvalidConfig, "pattern needs more cameras than the rig has");
    }
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 50; ++attempt) {
        Scene s;
        make_cameras(config, rng, s);
        std::vector<int> cams(config.n_gen_cameras);
        std::iota(cams.begin(), cams.end(), 0);
        std::shuffle(cams.begin(), cams.end(), rng);
        bool ok = true;
        for (size_t k = 0; k < pattern.size() && ok; ++k) {
            for (int j = 0; j < pattern[k] && ok; ++j) {
                ok = false;
                for (int tries = 0; tries < 1000; ++tries) {
                    const Eigen::Vector3d X = plane_point(config, rng);
                    Eigen::Vector2d p, g;
                    if (!project(s.P, X, config.image_size, p)) continue;
                    if (!project(s.rig.cameras[cams[k]], X, config.image_size, g)) continue;
                    s.points.push_back(X);
                    s.corrs.push_back(make_corr(p, g, cams[k]));
                    ok = true;
                    break;
                }
            }
        }
        if (!ok) continue;
        std::vector<size_t> order(s.corrs.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        Scene shuffled = s;
        for (size_t i = 0; i < order.size(); ++i) {
            shuffled.corrs[i] = s.corrs[order[i]];
            shuffled.points[i] = s.points[order[i]];
        }
        return shuffled;
    }
    throw Error(ErrorCode::SceneGenerationFailed, "visibility constraints not met");
}

void add_noise(std::vector<Correspondence> &corrs, double sigma, uint64_t seed) {
    if (!(sigma > 0)) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sigma);
    for (Correspondence &c : corrs) {
        c.p.x() += n(rng);
        c.p.y() += n(rng);
        c.g.x() += n(rng);
        c.g.y() += n(rng);
    }
}

std::vector<bool> add_outliers(std::vector<Correspondence> &corrs, double ratio, double image_size, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<size_t> idx(corrs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    const size_t n_out = static_cast<size_t>(std::llround(ratio * static_cast<double>(corrs.size())));
    std::vector<bool> mask(corrs.size(), false);
    const double h = 0.5 * image_size;
    for (size_t k = 0; k < n_out && k < idx.size(); ++k) {
        Correspondence &c = corrs[idx[k]];
        c.g << uniform(rng, -h, h), uniform(rng, -h, h), 1.0;
        mask[idx[k]] = true;
    }
    return mask;
}

std::vector<int> default_pattern(SolverId id) {
    switch (id) {
    case SolverId::SH5_2:
    case SolverId::SH5F_2: return {2, 2, 1};
    case SolverId::SH5_3:
    case SolverId::SH5F_3: return {3, 1, 1};
    case SolverId::SH5_4: return {4, 1};
    case SolverId::None: break;
    }
    return {1, 1, 1, 1, 1};
}

uint64_t trial_seed(uint64_t seed, int trial) { return splitmix64(splitmix64(seed) ^ static_cast<uint64_t>(trial)); }

TrialRecord run_trial(SolverId solver, const SceneConfig &config, uint64_t seed, const std::string &experiment,
                      double parameter, int trial) {
    TrialRecord rec;
    rec.experiment = experiment;
    rec.solver = solver;
    rec.parameter = parameter;
    rec.trial = trial;

    const Mode mode = solver_mode(solver);
    Scene scene = gen_pattern_scene(config, seed, default_pattern(solver));
    add_noise(scene.corrs, config.noise_sigma, splitmix64(seed ^ 0x6e6f697365ULL));
    std::vector<ReducedMatch> matches;
    for (const Correspondence &c : scene.corrs) matches.push_back(reduce_match(c, scene.rig, mode, scene.P.K));

    const bool noisy = config.noise_sigma > 0 || config.planarity_offset > 0;
    const SolverOptions opts = noisy ? SolverOptions::noisy() : SolverOptions{};
    const auto t0 = std::chrono::steady_clock::now();
    const SolverOutput out = run_solver(solver, matches, opts);
    rec.solver_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.n_solutions = static_cast<int>(out.solutions.size());
    rec.status = to_string(out.status);

    PoseSolution gt = scene.gt;
    if (mode == Mode::Calibrated) gt.f.reset();
    if (out.solutions.empty()) {
        rec.failed = true;
        return rec;
    }
    bool first = true;
    for (const PoseSolution &s : out.solutions) {
        const PoseErrors e = pose_errors(s, gt);
        if (first || e.rot_deg < rec.rot_deg) {
            rec.rot_deg = e.rot_deg;
            rec.trans_dir_deg = e.trans_dir_deg;
            rec.pos_units = e.pos_units;
            rec.focal_px = e.focal_px;
            first = false;
        }
    }
    return rec;
}

namespace {

std::vector<TrialRecord> sweep(SolverId solver, const std::string &experiment, const std::vector<double> &values,
                               const BenchOptions &opt, void (*set)(SceneConfig &, double)) {
    const int nv = static_cast<int>(values.size());
    std::vector<TrialRecord> out(static_cast<size_t>(nv) * opt.trials);
    parallel_for(nv * opt.trials, opt.threads, [&](int k) {
        const int vi = k / opt.trials;
        const int trial = k % opt.trials;
        SceneConfig cfg = opt.scene;
        set(cfg, values[vi]);
        out[k] = run_trial(solver, cfg, trial_seed(opt.seed, trial), experiment, values[vi], trial);
    });
    return out;
}

}  // namespace

std::vector<TrialRecord> run_stability(SolverId solver, const BenchOptions &opt) {
    return sweep(solver, "stability", {0.0}, opt, [](SceneConfig &c, double) {
        c.noise_sigma = 0;
        c.planarity_offset = 0;
    });
}

std::vector<TrialRecord> run_noise_sweep(SolverId solver, const std::vector<double> &sigmas, const BenchOptions &opt) {
    return sweep(solver, "noise", sigmas, opt, [](SceneConfig &c, double v) { c.noise_sigma = v; });
}

std::vector<TrialRecord> run_planarity(SolverId solver, const std::vector<double> &offsets, const BenchOptions &opt) {
    return sweep(solver, "planarity", offsets, opt, [](SceneConfig &c, double v) { c.planarity_offset = v; });
}

std::vector<TrialRecord> run_forward(SolverId solver, const std::vector<double> &sigmas, const BenchOptions &opt) {
    return sweep(solver, "forward", sigmas, opt, [](SceneConfig &c, double v) {
        c.motion = Motion::Forward;
        c.noise_sigma = v;
    });
}

std::string csv_string(std::vector<TrialRecord> records, bool include_timing) {
    std::stable_sort(records.begin(), records.end(), [](const TrialRecord &a, const TrialRecord &b) {
        if (a.experiment != b.experiment) return a.experiment < b.experiment;
        if (a.parameter != b.parameter) return a.parameter < b.parameter;
        return a.trial < b.trial;
    });
    std::ostringstream os;
    os << "experiment,solver,parameter,trial,status,rot_deg,trans_dir_deg,pos_units,focal_px,solver_time,"
          "n_solutions\r\n";
    for (const TrialRecord &r : records) {
        os << csv_field(r.experiment) << ',' << csv_field(to_string(r.solver)) << ',' << fmt_double(r.parameter)
           << ',' << r.trial << ',' << csv_field(r.status) << ',';
        if (r.failed) {
            os << ",,,,";
        } else {
            os << fmt_double(r.rot_deg) << ',' << fmt_double(r.trans_dir_deg) << ',' << fmt_double(r.pos_units)
               << ',' << fmt_double(r.focal_px) << ',';
        }
        if (include_timing) os << fmt_double(r.solver_time);
        os << ',' << r.n_solutions << "\r\n";
    }
    return os.str();
}

void emit_csv(std::vector<TrialRecord> records, const std::string &path, bool include_timing) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
    out << csv_string(std::move(records), include_timing);
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    const double hi = v[mid];
    if (v.size() % 2) return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + mid));
}

}  // namespace sgh
