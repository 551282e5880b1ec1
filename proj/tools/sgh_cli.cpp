#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Geometry>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sgh/bench.h"
#include "sgh/error.h"
#include "sgh/generator_table.h"
#include "sgh/geometry.h"
#include "sgh/ransac.h"
#include "sgh/solvers.h"

using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitUnsolvable = 2;
constexpr int kExitDegenerate = 3;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Rig {
    sgh::GeneralizedCamera rig;
    std::map<long long, int> index;  // camera id -> position in rig
};

Eigen::Vector3d vec3(const json &j, const std::string &what) {
    if (!j.is_array() || j.size() != 3) throw InputError(what + ": expected 3 numbers");
    return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Rig load_cameras(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error &e) {
        throw InputError(path + ": " + e.what());
    }
    const json &list = doc.is_object() && doc.contains("cameras") ? doc["cameras"] : doc;
    if (!list.is_array()) throw InputError(path + ": expected an array of cameras");
    Rig r;
    for (size_t k = 0; k < list.size(); ++k) {
        const json &c = list[k];
        const std::string where = path + ": camera " + std::to_string(k);
        try {
            sgh::PinholeCamera cam;
            const long long id = c.at("id").get<long long>();
            if (c.contains("K")) {
                const json &K = c["K"];
                if (!K.is_array() || K.size() != 9) throw InputError(where + ": K needs 9 numbers");
                for (int i = 0; i < 9; ++i) cam.K(i / 3, i % 3) = K[i].get<double>();
            } else {
                const double f = c.at("focal").get<double>();
                if (!(f > 0)) throw InputError(where + ": focal must be positive");
                cam.K = sgh::focal_matrix(f);
            }
            const json &q = c.at("q");
            if (!q.is_array() || q.size() != 4) throw InputError(where + ": q needs 4 numbers (w x y z)");
            const Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                                          q[3].get<double>());
            if (std::abs(quat.norm() - 1.0) > 1e-9) throw InputError(where + ": quaternion is not unit length");
            cam.R = quat.toRotationMatrix();
            cam.t = vec3(c.at("t"), where + ": t");
            if (r.index.count(id)) throw InputError(where + ": duplicate id " + std::to_string(id));
            r.index[id] = static_cast<int>(r.rig.cameras.size());
            r.rig.cameras.push_back(cam);
        } catch (const json::exception &e) {
            throw InputError(where + ": " + e.what());
        }
    }
    return r;
}

std::vector<sgh::Correspondence> load_matches(const std::string &path, const Rig &rig) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<sgh::Correspondence> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        for (char &ch : line) {
            if (ch == ',') ch = ' ';
        }
        std::istringstream is(line);
        std::string first;
        if (!(is >> first)) continue;
        is.str(line);
        is.clear();
        double px, py, gx, gy;
        long long cam;
        std::string extra;
        if (!(is >> px >> py >> cam >> gx >> gy) || (is >> extra)) {
            throw InputError(path + ":" + std::to_string(lineno) + ": expected 'p_x p_y cam_id g_x g_y'");
        }
        const auto it = rig.index.find(cam);
        if (it == rig.index.end()) {
            throw InputError(path + ":" + std::to_string(lineno) + ": unknown camera id " + std::to_string(cam));
        }
        sgh::Correspondence c;
        c.p = Eigen::Vector3d(px, py, 1.0);
        c.g = Eigen::Vector3d(gx, gy, 1.0);
        c.cam_index = it->second;
        out.push_back(c);
    }
    return out;
}

sgh::Mode parse_mode(const std::string &s) {
    if (s == "calib") return sgh::Mode::Calibrated;
    if (s == "focal") return sgh::Mode::Focal;
    throw InputError("mode must be calib or focal");
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Eigen::Vector4d quat_wxyz(const Eigen::Matrix3d &R) {
    Eigen::Quaterniond q(R);
    q.normalize();
    if (q.w() < 0) q.coeffs() = -q.coeffs();
    return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
}

json pose_json(const sgh::PoseSolution &s) {
    const Eigen::Vector4d q = quat_wxyz(s.R);
    json j;
    j["q"] = {q(0), q(1), q(2), q(3)};
    j["t"] = {s.t(0), s.t(1), s.t(2)};
    j["n"] = {s.n_tilde(0), s.n_tilde(1), s.n_tilde(2)};
    j["f"] = s.f ? json(*s.f) : json(nullptr);
    return j;
}

std::optional<Eigen::Matrix3d> query_K(sgh::Mode mode, double focal) {
    if (mode == sgh::Mode::Focal) return std::nullopt;
    return focal > 0 ? sgh::focal_matrix(focal) : Eigen::Matrix3d::Identity();
}

int cmd_solve(const std::string &cameras, const std::string &matches, const std::string &mode_s, double focal) {
    const sgh::Mode mode = parse_mode(mode_s);
    const Rig rig = load_cameras(cameras);
    const std::vector<sgh::Correspondence> corrs = load_matches(matches, rig);
    if (corrs.size() != 5) {
        std::cerr << "error: expected 5 matches, got " << corrs.size() << "\n";
        return kExitInput;
    }
    const std::optional<Eigen::Matrix3d> K = query_K(mode, focal);
    std::vector<sgh::ReducedMatch> reduced;
    for (const sgh::Correspondence &c : corrs) reduced.push_back(sgh::reduce_match(c, rig.rig, mode, K));

    const sgh::Classification cls = sgh::classify_sample(reduced, mode);
    if (cls.status != sgh::Status::Ok) {
        std::cerr << "unsolvable: " << cls.reason << "\n";
        return kExitUnsolvable;
    }
    const sgh::SolverOutput out = sgh::run_solver(cls.solver, reduced);
    std::cout << "# solver " << sgh::to_string(cls.solver) << " status " << sgh::to_string(out.status) << "\n";
    std::cout << "# qw qx qy qz tx ty tz nx ny nz f generator_residual\n";
    for (const sgh::PoseSolution &s : out.solutions) {
        const Eigen::Vector4d q = quat_wxyz(s.R);
        std::cout << num(q(0)) << ' ' << num(q(1)) << ' ' << num(q(2)) << ' ' << num(q(3)) << ' ' << num(s.t(0))
                  << ' ' << num(s.t(1)) << ' ' << num(s.t(2)) << ' ' << num(s.n_tilde(0)) << ' '
                  << num(s.n_tilde(1)) << ' ' << num(s.n_tilde(2)) << ' ' << (s.f ? num(*s.f) : "-") << ' '
                  << num(sgh::generator_residual(s, mode)) << "\n";
    }
    if (out.solutions.empty()) {
        std::cerr << "no solution: " << sgh::to_string(out.status) << "\n";
        return kExitDegenerate;
    }
    return kExitOk;
}

struct RansacArgs {
    std::string cameras, matches, mode = "calib", out;
    double threshold = 2.0, confidence = 0.99, focal = 0;
    int iters = 1000;
    bool adaptive = false, no_lo = false;
    uint64_t seed = 0;
};

int cmd_ransac(const RansacArgs &a) {
    const Rig rig = load_cameras(a.cameras);
    const std::vector<sgh::Correspondence> corrs = load_matches(a.matches, rig);
    sgh::RansacConfig cfg;
    cfg.mode = parse_mode(a.mode);
    cfg.threshold = a.threshold;
    cfg.max_iterations = a.iters;
    cfg.fixed_iterations = !a.adaptive;
    cfg.confidence = a.confidence;
    cfg.lo_enabled = !a.no_lo;
    cfg.seed = a.seed;
    const sgh::RansacResult r = sgh::ransac(corrs, rig.rig, query_K(cfg.mode, a.focal), cfg);

    json j = pose_json(r.best);
    std::vector<int> inliers;
    for (size_t i = 0; i < r.inlier_mask.size(); ++i) {
        if (r.inlier_mask[i]) inliers.push_back(static_cast<int>(i));
    }
    j["inliers"] = inliers;
    j["score"] = r.score;
    j["iterations"] = r.iterations_run;
    j["elapsed"] = r.elapsed;
    const std::string text = j.dump(2) + "\n";
    if (a.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(a.out);
        if (!f) throw InputError("cannot write " + a.out);
        f << text;
    }
    return kExitOk;
}

sgh::SceneConfig load_scene(const std::string &path) {
    sgh::SceneConfig c;
    if (path.empty()) return c;
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
        auto get = [&](const char *key, auto &field) {
            if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
        };
        get("plane_size", c.plane_size);
        get("n_gen_cameras", c.n_gen_cameras);
        get("image_size", c.image_size);
        get("noise_sigma", c.noise_sigma);
        get("planarity_offset", c.planarity_offset);
        get("axis_perturbation_deg", c.axis_perturbation_deg);
        get("view_cone_deg", c.view_cone_deg);
        if (j.contains("distance_range")) {
            c.distance_min = j["distance_range"].at(0).get<double>();
            c.distance_max = j["distance_range"].at(1).get<double>();
        }
        if (j.contains("focal_range")) {
            c.focal_min = j["focal_range"].at(0).get<double>();
            c.focal_max = j["focal_range"].at(1).get<double>();
        }
        if (j.contains("forward_range")) {
            c.forward_min = j["forward_range"].at(0).get<double>();
            c.forward_max = j["forward_range"].at(1).get<double>();
        }
        if (j.contains("motion")) {
            const std::string m = j["motion"].get<std::string>();
            if (m != "generic" && m != "forward") throw InputError(path + ": motion must be generic or forward");
            c.motion = m == "forward" ? sgh::Motion::Forward : sgh::Motion::Generic;
        }
    } catch (const json::exception &e) {
        throw InputError(path + ": " + e.what());
    }
    c.validate();
    return c;
}

struct BenchArgs {
    std::string experiment, solver = "all", out, scene;
    std::vector<double> values;
    int trials = 1000, threads = 1;
    uint64_t seed = 0;
    bool timing = false;
};

int cmd_bench(const BenchArgs &a) {
    std::vector<sgh::SolverId> ids;
    if (a.solver == "all") {
        ids = {sgh::SolverId::SH5_2, sgh::SolverId::SH5_3, sgh::SolverId::SH5_4, sgh::SolverId::SH5F_2,
               sgh::SolverId::SH5F_3};
    } else {
        const sgh::SolverId id = sgh::parse_solver_id(a.solver);
        if (id == sgh::SolverId::None) throw InputError("unknown solver " + a.solver);
        ids = {id};
    }
    sgh::BenchOptions opt;
    opt.trials = a.trials;
    opt.seed = a.seed;
    opt.threads = a.threads;
    opt.scene = load_scene(a.scene);

    std::vector<double> values = a.values;
    if (values.empty()) {
        if (a.experiment == "planarity") {
            values = {0.0, 0.05, 0.1, 0.2, 0.5, 1.0};
        } else {
            values = {0.0, 0.5, 1.0, 2.0};
        }
    }
    std::vector<sgh::TrialRecord> records;
    for (sgh::SolverId id : ids) {
        std::vector<sgh::TrialRecord> r;
        if (a.experiment == "stability") {
            r = sgh::run_stability(id, opt);
        } else if (a.experiment == "noise") {
            r = sgh::run_noise_sweep(id, values, opt);
        } else if (a.experiment == "planarity") {
            r = sgh::run_planarity(id, values, opt);
        } else {
            r = sgh::run_forward(id, values, opt);
        }
        records.insert(records.end(), r.begin(), r.end());
    }
    if (a.out.empty()) {
        std::cout << sgh::csv_string(records, a.timing);
    } else {
        sgh::emit_csv(records, a.out, a.timing);
    }
    return kExitOk;
}

int cmd_tables(int samples, const std::string &dir, uint64_t seed) {
    bool ok = true;
    for (sgh::TableVariant v : sgh::kAllVariants) {
        std::string name = sgh::to_string(v);
        try {
            sgh::GeneratorTable loaded;
            const sgh::GeneratorTable *table = &sgh::shipped_table(v);
            if (!dir.empty()) {
                std::string file = name;
                for (char &ch : file) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
                loaded = sgh::load_table(v, dir + "/" + file + ".txt");
                table = &loaded;
            }
            const sgh::VanishingReport r = sgh::verify_vanishing(*table, samples, seed);
            std::printf("%-9s %s polys %zu valid %d max_residual %.3g invalid %d min_residual %.3g\n", name.c_str(),
                        r.passed ? "PASS" : "FAIL", table->polys.size(), r.n_valid, r.max_valid_residual,
                        r.n_invalid, r.min_invalid_residual);
            ok = ok && r.passed;
        } catch (const sgh::Error &e) {
            std::printf("%-9s FAIL %s\n", name.c_str(), e.what());
            ok = false;
        }
    }
    return ok ? kExitOk : kExitInput;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Semi-generalized homography solvers"};
    app.require_subcommand(1);

    std::string cameras, matches, mode = "calib";
    double focal = 0;
    CLI::App *solve = app.add_subcommand("solve", "Solve one 5-match sample");
    solve->add_option("--cameras", cameras, "Camera JSON file")->required();
    solve->add_option("--matches", matches, "Match file: p_x p_y cam_id g_x g_y per row")->required();
    solve->add_option("--mode", mode, "calib or focal");
    solve->add_option("--focal", focal, "Focal length of the query camera in pixels (calib mode)");

    RansacArgs ra;
    CLI::App *rs = app.add_subcommand("ransac", "Robust estimation over all matches");
    rs->add_option("--cameras", ra.cameras, "Camera JSON file")->required();
    rs->add_option("--matches", ra.matches, "Match file")->required();
    rs->add_option("--mode", ra.mode, "calib or focal");
    rs->add_option("--focal", ra.focal, "Focal length of the query camera in pixels (calib mode)");
    rs->add_option("--threshold", ra.threshold, "Inlier threshold in pixels");
    rs->add_option("--iters", ra.iters, "Iterations (maximum when adaptive)");
    rs->add_flag("--adaptive", ra.adaptive, "Stop at the confidence bound");
    rs->add_option("--confidence", ra.confidence, "Confidence for --adaptive");
    rs->add_flag("--no-lo", ra.no_lo, "Disable local optimization");
    rs->add_option("--seed", ra.seed, "Random seed");
    rs->add_option("--out", ra.out, "Write the result JSON here instead of stdout");

    BenchArgs ba;
    CLI::App *bench = app.add_subcommand("bench", "Synthetic experiments, CSV output");
    bench->add_option("experiment", ba.experiment, "stability, noise, planarity or forward")
        ->required()
        ->check(CLI::IsMember({"stability", "noise", "planarity", "forward"}));
    bench->add_option("--solver", ba.solver, "Solver id or all");
    bench->add_option("--trials", ba.trials, "Trials per parameter value")->check(CLI::PositiveNumber);
    bench->add_option("--seed", ba.seed, "Random seed");
    bench->add_option("--threads", ba.threads, "Worker threads")->check(CLI::PositiveNumber);
    bench->add_option("--values", ba.values, "Parameter values (noise sigma or planarity offset)")->delimiter(',');
    bench->add_option("--scene", ba.scene, "Scene configuration JSON");
    bench->add_flag("--timing", ba.timing, "Fill the solver_time column");
    bench->add_option("--out", ba.out, "CSV path (stdout if omitted)");

    int samples = 1000;
    std::string table_dir;
    uint64_t table_seed = 1;
    bool check = false;
    CLI::App *tables = app.add_subcommand("tables", "Validate the generator tables");
    tables->add_flag("--check", check, "Run the vanishing checks")->required();
    tables->add_option("--samples", samples, "Valid and invalid samples per table")->check(CLI::PositiveNumber);
    tables->add_option("--dir", table_dir, "Check table files in this directory instead of the built-in copies");
    tables->add_option("--seed", table_seed, "Sampling seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*solve) return cmd_solve(cameras, matches, mode, focal);
        if (*rs) return cmd_ransac(ra);
        if (*bench) return cmd_bench(ba);
        if (*tables) return cmd_tables(samples, table_dir, table_seed);
    } catch (const InputError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const sgh::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.code()) {
        case sgh::ErrorCode::NoSolvablePattern: return kExitUnsolvable;
        case sgh::ErrorCode::NoModelFound:
        case sgh::ErrorCode::DegenerateHomography: return kExitDegenerate;
        default: return kExitInput;
        }
    }
    return kExitInput;
}
