// Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when a
// criterion fails for a reason other than the documented known failures.
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sgh/bench.h"
#include "sgh/generator_table.h"
#include "sgh/geometry.h"
#include "sgh/ransac.h"
#include "sgh/solvers.h"
#include "sgh/univariate.h"

using namespace sgh;

namespace {

constexpr SolverId kSolvers[] = {SolverId::SH5_2, SolverId::SH5_3, SolverId::SH5_4, SolverId::SH5F_2,
                                 SolverId::SH5F_3};
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
    bool pass = false;
    bool known = false;  // fails only in the documented way
    std::string detail;
};

int unexpected = 0;

void report(const char *name, const Outcome &o) {
    const char *tag = o.pass ? "PASS" : "FAIL";
    std::printf("%s %-22s %s%s\n", tag, name, o.detail.c_str(), !o.pass && o.known ? " [known]" : "");
    std::fflush(stdout);
    if (!o.pass && !o.known) ++unexpected;
}

std::string fmt(const char *f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char *f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SolverRun {
    int trials = 0;
    int recovered = 0;
    int count_violations = 0;
    int max_count = 0;
    int stability_failures = 0;
    double median_log10 = 0;
    double recovery_seconds = 0;
};

SolverRun noise_free_run(SolverId id, int trials, int recovery_trials, size_t count_bound, bool exact_count) {
    SolverRun r;
    r.trials = trials;
    const Mode mode = solver_mode(id);
    std::vector<double> logs;
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < trials; ++k) {
        const Scene s = gen_pattern_scene(SceneConfig{}, trial_seed(1, k), default_pattern(id));
        PoseSolution gt = s.gt;
        if (mode == Mode::Calibrated) gt.f.reset();
        std::vector<ReducedMatch> m;
        for (const Correspondence &c : s.corrs) m.push_back(reduce_match(c, s.rig, mode, s.P.K));
        const SolverOutput out = run_solver(id, m);

        double best_rot = kInf;
        bool recovered = false;
        for (const PoseSolution &sol : out.solutions) {
            const PoseErrors e = pose_errors(sol, gt);
            best_rot = std::min(best_rot, e.rot_deg);
            const bool focal_ok = !gt.f || (sol.f && std::abs(*sol.f - *gt.f) < 1e-6 * *gt.f);
            if (e.rot_deg < 1e-6 && e.pos_units < 1e-6 && focal_ok) recovered = true;
        }
        if (k < recovery_trials) {
            if (recovered) ++r.recovered;
            const size_t n = out.solutions.size();
            r.max_count = std::max<int>(r.max_count, static_cast<int>(n));
            if (n > count_bound || (exact_count && n != count_bound)) ++r.count_violations;
            if (k + 1 == recovery_trials) r.recovery_seconds = seconds_since(t0);
        }
        if (!(best_rot <= 1e-3)) ++r.stability_failures;
        logs.push_back(best_rot > 0 ? std::log10(best_rot) : -20.0);
    }
    r.median_log10 = median(logs);
    return r;
}

std::vector<int> sorted_desc(std::vector<int> v) {
    std::sort(v.rbegin(), v.rend());
    return v;
}

std::vector<ReducedMatch> with_pattern(const std::vector<int> &pattern) {
    std::vector<ReducedMatch> out;
    for (size_t cam = 0; cam < pattern.size(); ++cam) {
        for (int k = 0; k < pattern[cam]; ++k) {
            ReducedMatch m;
            m.cam_index = static_cast<int>(cam);
            out.push_back(m);
        }
    }
    return out;
}

UnivariatePoly from_roots(const std::vector<double> &roots, double lead) {
    std::vector<double> c{lead};
    for (double r : roots) {
        std::vector<double> n(c.size() + 1, 0.0);
        for (size_t i = 0; i < c.size(); ++i) {
            n[i + 1] += c[i];
            n[i] -= r * c[i];
        }
        c = n;
    }
    return UnivariatePoly(c);
}

struct RansacTrial {
    bool success = false;
    RansacResult result;
};

RansacTrial ransac_trial(int k) {
    const uint64_t seed = trial_seed(11, k);
    Scene s = gen_scene(SceneConfig{}, seed, 200);
    add_noise(s.corrs, 1.0, seed + 1);
    add_outliers(s.corrs, 0.3, SceneConfig{}.image_size, seed + 2);
    RansacConfig cfg;
    cfg.max_iterations = 1000;
    cfg.seed = seed;
    RansacTrial t;
    t.result = ransac(s.corrs, s.rig, s.P.K, cfg);
    PoseSolution gt = s.gt;
    gt.f.reset();
    const PoseErrors e = pose_errors(t.result.best, gt);
    t.success = e.rot_deg < 1.0 && e.pos_units < 0.01 * s.P.t.norm();
    return t;
}

bool identical(const RansacResult &a, const RansacResult &b) {
    auto same = [](const auto &x, const auto &y) {
        return std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) == 0;
    };
    return same(a.best.R, b.best.R) && same(a.best.t, b.best.t) && same(a.best.n_tilde, b.best.n_tilde) &&
           a.inlier_mask == b.inlier_mask && std::memcmp(&a.score, &b.score, sizeof(double)) == 0 &&
           a.iterations_run == b.iterations_run && a.score_trace == b.score_trace;
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();

    // Solution counts, noise-free recovery and stability share the same scenes.
    const std::map<SolverId, size_t> bound = {{SolverId::SH5_2, 5}, {SolverId::SH5_3, 3}, {SolverId::SH5_4, 1},
                                              {SolverId::SH5F_2, 5}, {SolverId::SH5F_3, 3}};
    std::map<SolverId, SolverRun> runs;
    for (SolverId id : kSolvers) runs[id] = noise_free_run(id, 5000, 1000, bound.at(id), id == SolverId::SH5_4);

    {
        Outcome o{true, true, ""};
        for (SolverId id : kSolvers) {
            const SolverRun &r = runs[id];
            o.detail += fmt("%s max %d violations %d; ", to_string(id), r.max_count, r.count_violations);
            if (r.count_violations > 0) {
                o.pass = false;
                if (id != SolverId::SH5_4) o.known = false;
            }
        }
        report("solution-counts", o);
    }
    {
        Outcome o{true, false, ""};
        for (SolverId id : kSolvers) {
            const SolverRun &r = runs[id];
            o.detail += fmt("%s %d/1000 %.1fs; ", to_string(id), r.recovered, r.recovery_seconds);
            if (r.recovered < 990 || r.recovery_seconds >= 60) o.pass = false;
        }
        report("noise-free-recovery", o);
    }
    {
        Outcome o{true, false, ""};
        for (SolverId id : kSolvers) {
            const SolverRun &r = runs[id];
            const double rate = static_cast<double>(r.stability_failures) / r.trials;
            o.detail += fmt("%s median %.2f fail %.2f%%; ", to_string(id), r.median_log10, 100 * rate);
            if (!(r.median_log10 <= -8) || !(rate < 0.01)) o.pass = false;
        }
        report("numerical-stability", o);
    }
    {
        Outcome o{true, false, ""};
        for (TableVariant v : kAllVariants) {
            const VanishingReport r = verify_vanishing(shipped_table(v), 1000);
            o.detail += fmt("%s %.1e/%.1e; ", to_string(v), r.max_valid_residual, r.min_invalid_residual);
            if (!r.passed || r.n_valid != 1000 || r.n_invalid != 1000) o.pass = false;
        }
        report("generator-conformance", o);
    }
    {
        // Fifth ray = the single match outside the anchor camera.
        double worst = 0, worst_any = 0;
        int failed = 0;
        for (int k = 0; k < 1000; ++k) {
            const Scene s = gen_pattern_scene(SceneConfig{}, trial_seed(2, k), default_pattern(SolverId::SH5_4));
            std::map<int, int> per_camera;
            for (const Correspondence &c : s.corrs) ++per_camera[c.cam_index];
            for (const Correspondence &c : s.corrs) {
                const ReducedMatch m = reduce_match(c, s.rig, Mode::Calibrated, s.P.K);
                const bool fifth = per_camera[c.cam_index] == 1;
                double scale = 0;
                if (!fifth_ray_scale(s.gt.R, s.gt.t, m.p, m.q, m.center, scale)) {
                    if (fifth) ++failed;
                    continue;
                }
                worst_any = std::max(worst_any, std::abs(scale - 1.0));
                if (fifth) worst = std::max(worst, std::abs(scale - 1.0));
            }
        }
        report("scale-fixed-point", {worst <= 1e-12 && failed == 0, false,
                                     fmt("max |s - 1| %.2e over 1000 fifth rays, %d undefined, %.2e over all rays",
                                         worst, failed, worst_any)});
    }
    {
        const std::vector<std::vector<int>> partitions = {{5}, {4, 1}, {3, 2}, {3, 1, 1}, {2, 2, 1}, {2, 1, 1, 1},
                                                          {1, 1, 1, 1, 1}};
        auto expect = [](const std::vector<int> &p, Mode mode) {
            if (p[0] == 5) return SolverId::None;
            if (p[0] == 4) return mode == Mode::Focal ? SolverId::None : SolverId::SH5_4;
            if (p[0] == 3) return mode == Mode::Focal ? SolverId::SH5F_3 : SolverId::SH5_3;
            return mode == Mode::Focal ? SolverId::SH5F_2 : SolverId::SH5_2;
        };
        Outcome o{true, false, ""};
        int checked = 0;
        for (const std::vector<int> &p : partitions) {
            for (Mode mode : {Mode::Calibrated, Mode::Focal}) {
                std::vector<ReducedMatch> m = with_pattern(p);
                std::reverse(m.begin(), m.end());
                const Classification c = classify_sample(m, mode);
                const SolverId want = expect(p, mode);
                const bool ok = c.solver == want && (c.status == Status::Ok) == (want != SolverId::None) &&
                                sorted_desc(c.pattern.multiplicities) == p;
                if (!ok) o.pass = false;
                ++checked;
            }
        }
        o.detail = fmt("%d partition/mode pairs", checked);
        report("pattern-coverage", o);
    }
    {
        BenchOptions opt;
        opt.trials = 1000;
        opt.seed = 7;
        const std::vector<double> sigmas = {0, 0.5, 1, 2};
        Outcome o{true, true, ""};
        bool monotone = true;
        double sh52_at_1 = kInf;
        for (SolverId id : kSolvers) {
            const std::vector<TrialRecord> rec = run_noise_sweep(id, sigmas, opt);
            std::vector<double> med;
            for (double sigma : sigmas) {
                std::vector<double> v;
                for (const TrialRecord &r : rec) {
                    if (r.parameter == sigma) v.push_back(r.failed ? kInf : r.rot_deg);
                }
                med.push_back(median(v));
            }
            for (size_t i = 1; i < med.size(); ++i) {
                if (!(med[i] >= 0.9 * med[i - 1])) monotone = false;
            }
            if (id == SolverId::SH5_2) sh52_at_1 = med[2];
            o.detail += fmt("%s %.1e/%.2f/%.2f/%.2f; ", to_string(id), med[0], med[1], med[2], med[3]);
        }
        o.pass = monotone && sh52_at_1 <= 2.0;
        o.known = monotone;
        o.detail += monotone ? "monotone" : "not monotone";
        o.detail += fmt(", sH5_2 at 1px %.2f deg (target 2)", sh52_at_1);
        report("noise-behavior", o);
    }
    {
        int success = 0;
        RansacResult first;
        const auto t0 = std::chrono::steady_clock::now();
        for (int k = 0; k < 100; ++k) {
            RansacTrial t = ransac_trial(k);
            if (t.success) ++success;
            if (k == 0) first = std::move(t.result);
        }
        const double secs = seconds_since(t0);
        const bool deterministic = identical(first, ransac_trial(0).result);
        report("ransac-end-to-end", {success >= 95 && deterministic, deterministic,
                                     fmt("%d/100 within 1 deg and 1%% of distance, %s, %.0fs", success,
                                         deterministic ? "bit-identical rerun" : "rerun differs", secs)});
    }
    {
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> u(-10, 10);
        int recovered = 0;
        double worst = 0;
        for (int trial = 0; trial < 500; ++trial) {
            const int d = 3 + trial % 3;
            std::vector<double> planted;
            while (static_cast<int>(planted.size()) < d) {
                const double r = u(rng);
                if (std::all_of(planted.begin(), planted.end(), [&](double x) { return std::abs(x - r) > 1e-2; })) {
                    planted.push_back(r);
                }
            }
            std::sort(planted.begin(), planted.end());
            const std::vector<double> got = sturm_roots(from_roots(planted, u(rng)));
            bool ok = got.size() == planted.size();
            for (size_t i = 0; ok && i < got.size(); ++i) {
                const double err = std::abs(got[i] - planted[i]) / std::max(1.0, std::abs(planted[i]));
                worst = std::max(worst, err);
                ok = err <= 1e-10;
            }
            if (ok) ++recovered;
        }
        const bool none = sturm_roots(UnivariatePoly({1, 0, 1})).empty();
        report("sturm-oracle", {recovered == 500 && none, false,
                                fmt("%d/500 planted, worst %.1e, x^2+1 %s", recovered, worst,
                                    none ? "has no roots" : "returned roots")});
    }

    std::printf("total %.0fs, %d unexpected failure(s)\n", seconds_since(start), unexpected);
    return unexpected == 0 ? 0 : 1;
}
