#include "sgh/ransac.h"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "sgh/error.h"
#include "sgh/geometry.h"

namespace sgh {

std::array<int, 5> sample(const std::vector<ReducedMatch> &matches, Mode mode, std::mt19937_64 &rng) {
    const int n = static_cast<int>(matches.size());
    if (n < 5) throw Error(ErrorCode::NotEnoughMatches, "need at least 5 matches, got " + std::to_string(n));
    std::vector<int> pool(n);
    std::vector<ReducedMatch> sub(5);
    for (int attempt = 0; attempt < 100; ++attempt) {
        for (int i = 0; i < n; ++i) pool[i] = i;
        std::array<int, 5> idx;
        for (int k = 0; k < 5; ++k) {
            std::uniform_int_distribution<int> pick(k, n - 1);
            std::swap(pool[k], pool[pick(rng)]);
            idx[k] = pool[k];
            sub[k] = matches[idx[k]];
        }
        if (classify_sample(sub, mode).status == Status::Ok) return idx;
    }
    throw Error(ErrorCode::NoSolvablePattern, "no solvable sample in 100 draws");
}

ScoreResult score(const PoseSolution &model, const std::vector<Correspondence> &matches,
                  const GeneralizedCamera &rig, const Eigen::Matrix3d &K_P, double threshold) {
    ScoreResult r;
    r.mask.resize(matches.size());
    const double t2 = threshold * threshold;
    for (size_t i = 0; i < matches.size(); ++i) {
        const double e = transfer_error(model, matches[i], rig, K_P);
        r.mask[i] = e < threshold;
        if (r.mask[i]) ++r.inliers;
        r.cost += std::min(e * e, t2);
    }
    return r;
}

namespace {

Eigen::Matrix3d exp_so3(const Eigen::Vector3d &w) {
    const double a = w.norm();
    if (a < 1e-15) return Eigen::Matrix3d::Identity() + skew(w);
    return Eigen::AngleAxisd(a, w / a).toRotationMatrix();
}

struct Params {
    int dim;
    PoseSolution base;
    bool focal;

    PoseSolution apply(const Eigen::VectorXd &x) const {
        PoseSolution s = base;
        s.R = exp_so3(x.segment<3>(0)) * base.R;
        s.t = base.t + x.segment<3>(3);
        s.n_tilde = base.n_tilde + x.segment<3>(6);
        if (focal) s.f = *base.f + x(9);
        return s;
    }
};

// Stacked 2D transfer residuals; false if any match leaves the valid region.
bool residuals(const PoseSolution &s, const std::vector<Correspondence> &matches, const GeneralizedCamera &rig,
               const Eigen::Matrix3d &K_P, Eigen::VectorXd &r) {
    r.resize(2 * matches.size());
    const Eigen::Matrix3d K = s.f ? focal_matrix(*s.f) : K_P;
    if (s.f && !(*s.f > 0)) return false;
    const Eigen::Matrix3d Kinv = K.inverse();
    for (size_t i = 0; i < matches.size(); ++i) {
        const Correspondence &c = matches[i];
        const Eigen::Vector3d ray = Kinv * c.p;
        const double den = s.n_tilde.dot(ray);
        if (std::abs(den) < 1e-14) return false;
        const double alpha = -1.0 / den;
        if (!(alpha > 0)) return false;
        const PinholeCamera &cam = rig.cameras[c.cam_index];
        const Eigen::Vector3d Xc = cam.R.transpose() * (s.R * (alpha * ray) + s.t - cam.t);
        if (!(Xc.z() > 0)) return false;
        const Eigen::Vector3d x = cam.K * Xc;
        r.segment<2>(2 * i) = x.head<2>() / x.z() - c.g.head<2>() / c.g.z();
    }
    return true;
}

}  // namespace

PoseSolution local_optimize(const PoseSolution &model, const std::vector<Correspondence> &inliers,
                            const GeneralizedCamera &rig, const Eigen::Matrix3d &K_P, Mode mode,
                            const LocalOptimizeOptions &opt) {
    const bool focal = mode == Mode::Focal && model.f.has_value();
    Params P{focal ? 10 : 9, model, focal};
    Eigen::VectorXd r;
    if (inliers.empty() || !residuals(model, inliers, rig, K_P, r)) return model;
    double cost = r.squaredNorm();

    Eigen::VectorXd steps(P.dim);
    steps.segment<3>(0).setConstant(1e-7);
    steps.segment<3>(3).setConstant(1e-7 * std::max(1.0, model.t.norm()));
    steps.segment<3>(6).setConstant(1e-7 * std::max(1e-6, model.n_tilde.norm()));
    if (focal) steps(9) = 1e-7 * *model.f;

    double lambda = 1e-3;
    Eigen::MatrixXd J(r.size(), P.dim);
    Eigen::VectorXd rp, rm;
    for (int it = 0; it < opt.max_iterations; ++it) {
        bool ok = true;
        for (int k = 0; k < P.dim && ok; ++k) {
            Eigen::VectorXd dx = Eigen::VectorXd::Zero(P.dim);
            dx(k) = steps(k);
            ok = residuals(P.apply(dx), inliers, rig, K_P, rp) && residuals(P.apply(-dx), inliers, rig, K_P, rm);
            if (ok) J.col(k) = (rp - rm) / (2 * steps(k));
        }
        if (!ok) break;
        const Eigen::VectorXd g = J.transpose() * r;
        if (g.norm() < opt.gradient_tol) break;
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        bool improved = false;
        while (lambda < 1e12) {
            Eigen::MatrixXd A = JtJ;
            A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd dx = A.ldlt().solve(-g);
            const PoseSolution cand = P.apply(dx);
            Eigen::VectorXd rc;
            if (residuals(cand, inliers, rig, K_P, rc) && rc.squaredNorm() < cost) {
                P.base = cand;
                r = rc;
                cost = rc.squaredNorm();
                lambda = std::max(lambda * 0.1, 1e-12);
                improved = true;
                break;
            }
            lambda *= 10;
        }
        if (!improved) break;
    }
    return P.base;
}

RansacResult ransac(const std::vector<Correspondence> &matches, const GeneralizedCamera &rig,
                    const std::optional<Eigen::Matrix3d> &K_P_opt, const RansacConfig &config) {
    if (!(config.threshold > 0)) throw Error(ErrorCode::InvalidConfig, "threshold must be positive");
    if (!config.fixed_iterations && !(config.confidence > 0 && config.confidence < 1)) {
        throw Error(ErrorCode::InvalidConfig, "confidence must lie in (0, 1)");
    }
    if (matches.size() < 5) throw Error(ErrorCode::NotEnoughMatches, "need at least 5 matches");
    const auto start = std::chrono::steady_clock::now();
    const Eigen::Matrix3d K_P = K_P_opt.value_or(Eigen::Matrix3d::Identity());

    std::vector<ReducedMatch> reduced;
    reduced.reserve(matches.size());
    for (const Correspondence &c : matches) reduced.push_back(reduce_match(c, rig, config.mode, K_P_opt));

    std::mt19937_64 rng(config.seed);
    RansacResult res;
    double best_cost = std::numeric_limits<double>::infinity();
    bool have_model = false;
    ScoreResult best_score;
    const double n = static_cast<double>(matches.size());

    // Iterated least squares over the inliers of a shrinking threshold, from
    // 3x the threshold down to it; a refit is kept only if it lowers the cost.
    auto try_lo = [&]() {
        PoseSolution model = res.best;
        for (double k : {3.0, 2.0, 1.5, 1.0}) {
            const ScoreResult wide = score(model, matches, rig, K_P, k * config.threshold);
            std::vector<Correspondence> in;
            for (size_t i = 0; i < matches.size(); ++i) {
                if (wide.mask[i]) in.push_back(matches[i]);
            }
            if (in.size() < 6) return;
            model = local_optimize(model, in, rig, K_P, config.mode);
            const ScoreResult s = score(model, matches, rig, K_P, config.threshold);
            if (s.cost < best_cost) {
                res.best = model;
                best_cost = s.cost;
                best_score = s;
            }
        }
    };

    std::vector<ReducedMatch> sub(5);
    int needed = config.max_iterations;
    int it = 0;
    for (; it < config.max_iterations && it < needed; ++it) {
        const std::array<int, 5> idx = sample(reduced, config.mode, rng);
        for (int k = 0; k < 5; ++k) sub[k] = reduced[idx[k]];
        const SolverOutput out = solve(sub, config.mode, config.solver);
        bool improved = false;
        for (const PoseSolution &cand : out.solutions) {
            const ScoreResult s = score(cand, matches, rig, K_P, config.threshold);
            if (s.cost < best_cost) {
                best_cost = s.cost;
                best_score = s;
                res.best = cand;
                have_model = true;
                improved = true;
            }
        }
        if (improved && config.lo_enabled) try_lo();
        res.score_trace.push_back(best_cost);
        if (!config.fixed_iterations && have_model) {
            const double eps = best_score.inliers / n;
            const double p5 = std::pow(eps, 5);
            if (p5 >= 1.0) {
                needed = it + 1;
            } else if (p5 > 0) {
                const double k = std::log(1.0 - config.confidence) / std::log(1.0 - p5);
                needed = static_cast<int>(std::min<double>(config.max_iterations, std::ceil(k)));
            }
        }
    }
    if (!have_model) throw Error(ErrorCode::NoModelFound, "no sample produced a model");

    if (config.lo_enabled) {
        for (int round = 0; round < 20; ++round) {
            const double before = best_cost;
            try_lo();
            if (!(best_cost < before)) break;
        }
    }
    res.inlier_mask = best_score.mask;
    res.score = best_cost;
    res.iterations_run = it;
    res.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace sgh
