#include "sgh/solvers.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "sgh/generator_table.h"
#include "sgh/geometry.h"
#include "sgh/linalg.h"
#include "sgh/univariate.h"

namespace sgh {

const char *to_string(SolverId id) {
    switch (id) {
    case SolverId::SH5_2: return "sH5_2";
    case SolverId::SH5_3: return "sH5_3";
    case SolverId::SH5_4: return "sH5_4";
    case SolverId::SH5F_2: return "sH5f_2";
    case SolverId::SH5F_3: return "sH5f_3";
    case SolverId::None: return "none";
    }
    return "?";
}

SolverId parse_solver_id(const std::string &name) {
    for (SolverId id : {SolverId::SH5_2, SolverId::SH5_3, SolverId::SH5_4, SolverId::SH5F_2, SolverId::SH5F_3}) {
        if (name == to_string(id)) return id;
    }
    return SolverId::None;
}

Mode solver_mode(SolverId id) {
    return id == SolverId::SH5F_2 || id == SolverId::SH5F_3 ? Mode::Focal : Mode::Calibrated;
}

SolverOptions SolverOptions::noisy() {
    SolverOptions o;
    o.filter_tol = std::numeric_limits<double>::infinity();
    o.scale_tol = std::numeric_limits<double>::infinity();
    return o;
}

Classification classify_sample(const std::vector<ReducedMatch> &matches, Mode mode) {
    Classification c;
    std::map<int, int> counts;
    for (const ReducedMatch &m : matches) ++counts[m.cam_index];
    for (const auto &[cam, n] : counts) c.pattern.multiplicities.push_back(n);
    std::sort(c.pattern.multiplicities.rbegin(), c.pattern.multiplicities.rend());
    if (matches.size() != 5) {
        c.status = Status::Unsolvable;
        c.reason = "expected 5 matches";
        return c;
    }
    const int top = c.pattern.multiplicities.front();
    const bool focal = mode == Mode::Focal;
    if (top <= 2) {
        c.solver = focal ? SolverId::SH5F_2 : SolverId::SH5_2;
    } else if (top == 3) {
        c.solver = focal ? SolverId::SH5F_3 : SolverId::SH5_3;
    } else if (top == 4 && !focal) {
        c.solver = SolverId::SH5_4;
    } else {
        c.status = Status::Unsolvable;
        c.reason = top == 5 ? "all matches from one camera, scale is unobservable"
                            : "a single extra camera does not constrain the focal length";
    }
    return c;
}

namespace {

struct Frame {
    Mode mode = Mode::Calibrated;
    std::vector<ReducedMatch> ordered;  // anchor camera first, input coordinates
    std::vector<ReducedMatch> work;     // anchored, rescaled and prerotated
    Eigen::Vector3d t_a = Eigen::Vector3d::Zero();
    Eigen::Matrix3d R_p = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d R_q = Eigen::Matrix3d::Identity();
    double s0 = 1.0;
};

int anchor_multiplicity(const std::vector<ReducedMatch> &matches, int &anchor_cam) {
    std::map<int, int> counts;
    for (const ReducedMatch &m : matches) ++counts[m.cam_index];
    int best = 0;
    for (const ReducedMatch &m : matches) {
        if (counts[m.cam_index] > best) {
            best = counts[m.cam_index];
            anchor_cam = m.cam_index;
        }
    }
    return best;
}

Frame prepare(const std::vector<ReducedMatch> &matches, Mode mode, bool rotate) {
    Frame fr;
    fr.mode = mode;
    int anchor = 0;
    anchor_multiplicity(matches, anchor);
    for (const ReducedMatch &m : matches) {
        if (m.cam_index == anchor) fr.ordered.push_back(m);
    }
    for (const ReducedMatch &m : matches) {
        if (m.cam_index != anchor) fr.ordered.push_back(m);
    }
    fr.t_a = fr.ordered[0].center;
    std::vector<ReducedMatch> shifted = fr.ordered;
    if (mode == Mode::Focal) {
        double s = 0;
        for (const ReducedMatch &m : shifted) s += m.p.head<2>().norm() / std::abs(m.p.z());
        s /= static_cast<double>(shifted.size());
        fr.s0 = s > 1e-12 ? s : 1.0;
    }
    for (ReducedMatch &m : shifted) {
        m.center -= fr.t_a;
        if (m.cam_index == anchor) m.center.setZero();
        m.p.head<2>() /= fr.s0;
    }
    if (rotate) {
        Prerotation pr = prerotate(shifted, mode);
        fr.R_p = pr.R_p;
        fr.R_q = pr.R_q;
        fr.work = std::move(pr.matches);
    } else {
        fr.work = std::move(shifted);
    }
    return fr;
}

PoseSolution map_back(const Frame &fr, const Decomposition &d, std::optional<double> f_work) {
    PoseSolution s;
    s.R = fr.R_q.transpose() * d.R * fr.R_p;
    s.t = fr.R_q.transpose() * d.t + fr.t_a;
    s.n_tilde = fr.R_p.transpose() * d.n_tilde;
    if (f_work) s.f = *f_work * fr.s0;
    return s;
}

Eigen::Matrix3d primed_matrix(const Eigen::VectorXd &x) {
    Eigen::Matrix3d G;
    G << x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7), 1.0;
    return G;
}

Eigen::VectorXd i1_assignment(const Eigen::Matrix3d &G, const Eigen::Vector3d &m) {
    Eigen::VectorXd x(12);
    x << G(0, 0), G(0, 1), G(0, 2), G(1, 0), G(1, 1), G(1, 2), G(2, 0), G(2, 1), m, G(2, 2);
    return x;
}

// Newton steps on the generator evaluated directly along the family. The
// interpolated coefficients carry rounding relative to the polynomial's size
// at the interpolation nodes, which can be far larger than near the roots.
double polish_root(const SparsePoly &poly, const Eigen::VectorXd &B0, const Eigen::VectorXd &B1,
                   const UnivariatePoly &deriv, double g) {
    Eigen::VectorXd x = B0 + g * B1;
    double fx = poly.evaluate(x.data());
    for (int it = 0; it < 8; ++it) {
        const double d = deriv(g);
        if (d == 0.0 || fx == 0.0) break;
        const double gn = g - fx / d;
        x = B0 + gn * B1;
        const double fn = poly.evaluate(x.data());
        if (!(std::abs(fn) < std::abs(fx))) break;
        g = gn;
        fx = fn;
    }
    return g;
}

// Root-solve the I2 generators along x = B0 + gamma * B1 (11 primed variables)
// and turn every surviving root into poses.
SolverOutput solve_family(const Frame &fr, const Eigen::VectorXd &B0, const Eigen::VectorXd &B1,
                          const SolverOptions &opt) {
    SolverOutput out;
    const bool focal = fr.mode == Mode::Focal;
    const GeneratorTable &i2 = shipped_table(focal ? TableVariant::FOC_I2 : TableVariant::CAL_I2);
    const GeneratorTable &i1 = shipped_table(focal ? TableVariant::FOC_I1 : TableVariant::CAL_I1);

    std::vector<bool> active(B1.size());
    for (int v = 0; v < B1.size(); ++v) active[v] = B1(v) != 0.0;
    int d = 0;
    for (const SparsePoly &p : i2.polys) d = std::max(d, p.degree_in(active));

    std::vector<UnivariatePoly> uni;
    int best = -1;
    auto specialize_all = [&](const Eigen::VectorXd &b0, const Eigen::VectorXd &b1, double min_score) {
        uni.clear();
        best = -1;
        double best_score = 0;
        for (size_t k = 0; k < i2.polys.size(); ++k) {
            uni.push_back(specialize_univariate(i2.polys[k], b0, b1));
            if (uni[k].degree() != d) continue;
            const double score = std::abs(uni[k].leading()) / specialization_scale(i2.polys[k], b0, b1);
            if (score > best_score) {
                best_score = score;
                best = static_cast<int>(k);
            }
        }
        if (best_score <= min_score) best = -1;
    };

    std::vector<Eigen::VectorXd> xs;
    auto collect = [&](const Eigen::VectorXd &b0, const Eigen::VectorXd &b1) {
        const UnivariatePoly deriv = uni[best].derivative();
        for (double g : sturm_roots(uni[best])) {
            g = polish_root(i2.polys[best], b0, b1, deriv, g);
            const Eigen::VectorXd x = b0 + g * b1;
            const bool seen = std::any_of(xs.begin(), xs.end(), [&](const Eigen::VectorXd &y) {
                return (x - y).norm() <= 1e-9 * (1.0 + x.norm());
            });
            if (!seen) xs.push_back(x);
        }
    };

    Eigen::VectorXd b0 = B0, b1 = B1;
    specialize_all(b0, b1, 1e-10);
    if (best < 0) {
        out.status = Status::Degenerate;
        return out;
    }
    out.diag.poly_degree = uni[best].degree();
    collect(b0, b1);

    // Second pass with the nodes moved onto the roots: shift to the root
    // centroid and scale by a root modulus bound.
    if (d >= 1) {
        b0 += (-uni[best].coeffs()[d - 1] / (d * uni[best].leading())) * b1;
        specialize_all(b0, b1, 0.0);
        if (best >= 0) {
            const std::vector<double> &a = uni[best].coeffs();
            double rho = 0;
            for (int k = 1; k <= d; ++k) rho = std::max(rho, std::pow(std::abs(a[d - k] / a[d]), 1.0 / k));
            if (std::isfinite(rho) && rho > 1e-12 && rho < 1e12) {
                b1 *= rho;
                specialize_all(b0, b1, 0.0);
                if (best >= 0) collect(b0, b1);
            }
        }
    }
    out.diag.n_real_roots = static_cast<int>(xs.size());
    if (xs.empty()) {
        out.status = Status::NoRealRoots;
        return out;
    }

    std::vector<PoseSolution> candidates;
    Status last_failure = Status::AllFiltered;
    for (const Eigen::VectorXd &x : xs) {
        if (i2.max_normalized_residual(x) > opt.filter_tol) continue;
        const Eigen::Matrix3d Gp = primed_matrix(x);
        const Eigen::Vector3d mp = x.segment<3>(8);
        const ScaleResult sc = focal ? recover_scale_focal(Gp, mp, opt.scale_tol)
                                     : recover_scale_calibrated(Gp, mp, opt.scale_tol);
        if (sc.status != Status::Ok) {
            last_failure = sc.status;
            continue;
        }
        const Eigen::Matrix3d G = sc.g33 * Gp;
        const Eigen::Vector3d m = sc.g33 * mp;
        if (i1.max_normalized_residual(i1_assignment(G, m)) > opt.filter_tol) continue;
        ++out.diag.filtered_count;
        const std::optional<double> f = focal ? std::optional<double>(1.0 / sc.w) : std::nullopt;
        std::vector<Decomposition> decs;
        try {
            decs = decompose_homography(G, m, fr.mode, f);
        } catch (const Error &) {
            continue;
        }
        for (const Decomposition &dec : decs) candidates.push_back(map_back(fr, dec, f));
    }
    out.solutions = cheirality_filter(candidates, fr.ordered, fr.mode);
    if (out.solutions.empty()) out.status = out.diag.filtered_count == 0 ? last_failure : Status::AllFiltered;
    return out;
}

// Affine line through the 2-dimensional null space with the g33 entry (index
// k33) fixed to one along the line.
bool unit_g33_line(const Eigen::MatrixXd &V, int k33, Eigen::VectorXd &b0, Eigen::VectorXd &b1) {
    const Eigen::Vector2d a = V.row(k33).transpose();
    const double na = a.norm();
    if (na < 1e-10) return false;
    b0 = V * a / (na * na);
    b1 = V * Eigen::Vector2d(-a(1), a(0)) / na;
    b1(k33) = 0.0;
    return true;
}

}  // namespace

SolverOutput solve_sh5_2(const std::vector<ReducedMatch> &matches, const SolverOptions &opt) {
    SolverOutput out;
    const Frame fr = prepare(matches, Mode::Calibrated, true);
    // After prerotation the first match forces g13 = g23 = 0.
    static const int cols[10] = {0, 1, 3, 4, 6, 7, 8, 9, 10, 11};
    Eigen::MatrixXd C(8, 10);
    for (int k = 1; k < 5; ++k) {
        const Eigen::Matrix<double, 2, 12> A = independent_constraint_rows(fr.work[k]);
        for (int c = 0; c < 10; ++c) C.block<2, 1>(2 * (k - 1), c) = A.col(cols[c]);
    }
    const NullspaceResult ns = nullspace(C, 2, opt.nullspace_gap);
    Eigen::VectorXd b0, b1;
    if (ns.degenerate || !unit_g33_line(ns.basis, 6, b0, b1)) {
        out.status = Status::Degenerate;
        return out;
    }
    auto lift = [](const Eigen::VectorXd &u) {
        Eigen::VectorXd x(11);
        x << u(0), u(1), 0.0, u(2), u(3), 0.0, u(4), u(5), u(7), u(8), u(9);
        return x;
    };
    return solve_family(fr, lift(b0), lift(b1), opt);
}

SolverOutput solve_sh5_3(const std::vector<ReducedMatch> &matches, const SolverOptions &opt) {
    SolverOutput out;
    const Frame fr = prepare(matches, Mode::Calibrated, true);
    // Unknown order g11 g12 g21 g22 g31 g32 m1 m2 | m3 g33.
    static const int cols[10] = {0, 1, 3, 4, 6, 7, 9, 10, 11, 8};
    Eigen::MatrixXd C(8, 10);
    for (int k = 1; k < 5; ++k) {
        const Eigen::Matrix<double, 2, 12> A = independent_constraint_rows(fr.work[k]);
        for (int c = 0; c < 10; ++c) C.block<2, 1>(2 * (k - 1), c) = A.col(cols[c]);
    }
    const RrefResult rr = gauss_jordan(C);
    if (rr.rank_deficient || rr.pivots.back() != 7) {
        out.status = Status::RankDeficient;
        return out;
    }
    // Row i reads x_i + d_i m3 + e_i g33 = 0; d vanishes on the six G rows.
    Eigen::VectorXd B0 = Eigen::VectorXd::Zero(11), B1 = Eigen::VectorXd::Zero(11);
    static const int g_slot[6] = {0, 1, 3, 4, 6, 7};
    for (int i = 0; i < 6; ++i) B0(g_slot[i]) = -rr.R(i, 9);
    for (int i = 0; i < 2; ++i) {
        B0(8 + i) = -rr.R(6 + i, 9);
        B1(8 + i) = -rr.R(6 + i, 8);
    }
    B1(10) = 1.0;
    return solve_family(fr, B0, B1, opt);
}

SolverOutput solve_sh5f_2(const std::vector<ReducedMatch> &matches, const SolverOptions &opt) {
    SolverOutput out;
    const Frame fr = prepare(matches, Mode::Focal, true);
    Eigen::MatrixXd C(10, 12);
    for (int k = 0; k < 5; ++k) C.block<2, 12>(2 * k, 0) = independent_constraint_rows(fr.work[k]);
    const NullspaceResult ns = nullspace(C, 2, opt.nullspace_gap);
    Eigen::VectorXd b0, b1;
    if (ns.degenerate || !unit_g33_line(ns.basis, 8, b0, b1)) {
        out.status = Status::Degenerate;
        return out;
    }
    auto lift = [](const Eigen::VectorXd &u) {
        Eigen::VectorXd x(11);
        x << u.head<8>(), u.tail<3>();
        return x;
    };
    return solve_family(fr, lift(b0), lift(b1), opt);
}

SolverOutput solve_sh5f_3(const std::vector<ReducedMatch> &matches, const SolverOptions &opt) {
    SolverOutput out;
    const Frame fr = prepare(matches, Mode::Focal, true);
    // Unknown order g11 .. g32 m1 m2 | m3 g33.
    static const int cols[12] = {0, 1, 2, 3, 4, 5, 6, 7, 9, 10, 11, 8};
    Eigen::MatrixXd C(10, 12);
    for (int k = 0; k < 5; ++k) {
        const Eigen::Matrix<double, 2, 12> A = independent_constraint_rows(fr.work[k]);
        for (int c = 0; c < 12; ++c) C.block<2, 1>(2 * k, c) = A.col(cols[c]);
    }
    const RrefResult rr = gauss_jordan(C);
    if (rr.rank_deficient || rr.pivots.back() != 9) {
        out.status = Status::RankDeficient;
        return out;
    }
    Eigen::VectorXd B0 = Eigen::VectorXd::Zero(11), B1 = Eigen::VectorXd::Zero(11);
    for (int i = 0; i < 8; ++i) B0(i) = -rr.R(i, 11);
    for (int i = 0; i < 2; ++i) {
        B0(8 + i) = -rr.R(8 + i, 11);
        B1(8 + i) = -rr.R(8 + i, 10);
    }
    B1(10) = 1.0;
    return solve_family(fr, B0, B1, opt);
}

bool fifth_ray_scale(const Eigen::Matrix3d &R, const Eigen::Vector3d &t, const Eigen::Vector3d &p,
                const Eigen::Vector3d &q, const Eigen::Vector3d &center, double &scale) {
    const Eigen::Vector3d v = (R * p).cross(q);
    const double num = center.dot(v);
    const double den = t.dot(v);
    if (!(std::abs(den) > 1e-12 * t.norm() * v.norm())) return false;
    scale = num / den;
    return true;
}

double constraint_residual(const PoseSolution &sol, const ReducedMatch &match, Mode mode) {
    const std::optional<double> f = mode == Mode::Focal ? sol.f : std::nullopt;
    const SemiHomography H = compose_G(sol.R, sol.t, sol.n_tilde, f);
    const Eigen::Matrix<double, 12, 1> x = vec_Gm(H.G, H.m);
    const ConstraintRows A = build_constraint_rows(match);
    const double scale = A.norm() * x.norm();
    return scale > 0 ? (A * x).norm() / scale : 0.0;
}

double generator_residual(const PoseSolution &sol, Mode mode) {
    const bool focal = mode == Mode::Focal;
    const SemiHomography H = compose_G(sol.R, sol.t, sol.n_tilde, focal ? sol.f : std::nullopt);
    const GeneratorTable &i1 = shipped_table(focal ? TableVariant::FOC_I1 : TableVariant::CAL_I1);
    return i1.max_normalized_residual(i1_assignment(H.G, H.m));
}

SolverOutput solve_sh5_4(const std::vector<ReducedMatch> &matches, const SolverOptions &opt) {
    (void)opt;
    SolverOutput out;
    const Frame fr = prepare(matches, Mode::Calibrated, false);
    // Four-point DLT inside the anchor camera: q ~ H p.
    Eigen::Matrix<double, 8, 9> A;
    std::vector<Eigen::Vector3d> ps, qs;
    for (int k = 0; k < 4; ++k) {
        const ReducedMatch &m = fr.work[k];
        ps.push_back(m.p);
        qs.push_back(m.q);
        const Eigen::Matrix<double, 2, 12> rows = independent_constraint_rows(m);
        A.block<2, 9>(2 * k, 0) = rows.leftCols<9>();
    }
    const NullspaceResult ns = nullspace(A, 1, opt.nullspace_gap);
    if (ns.degenerate) {
        out.status = Status::Degenerate;
        return out;
    }
    Eigen::Matrix3d H;
    H << ns.basis(0), ns.basis(1), ns.basis(2), ns.basis(3), ns.basis(4), ns.basis(5), ns.basis(6), ns.basis(7),
        ns.basis(8);
    std::vector<Decomposition> decs;
    try {
        decs = decompose_homography_unknown_plane(H, ps, qs);
    } catch (const Error &) {
        out.status = Status::DegenerateHomography;
        return out;
    }
    out.diag.poly_degree = 1;
    out.diag.n_real_roots = static_cast<int>(decs.size());

    const ReducedMatch &fifth = fr.work[4];
    std::vector<PoseSolution> candidates;
    for (Decomposition d : decs) {
        double s = 0;
        if (!fifth_ray_scale(d.R, d.t, fifth.p, fifth.q, fifth.center, s) || s == 0.0) continue;
        d.t *= s;
        d.n_tilde /= s;
        candidates.push_back(map_back(fr, d, std::nullopt));
    }
    out.diag.filtered_count = static_cast<int>(candidates.size());
    if (candidates.empty()) {
        out.status = Status::ScaleDenominatorZero;
        return out;
    }
    out.solutions = cheirality_filter(candidates, fr.ordered, Mode::Calibrated);
    if (out.solutions.empty()) out.status = Status::AllFiltered;
    return out;
}

SolverOutput run_solver(SolverId id, const std::vector<ReducedMatch> &matches, const SolverOptions &opt) {
    switch (id) {
    case SolverId::SH5_2: return solve_sh5_2(matches, opt);
    case SolverId::SH5_3: return solve_sh5_3(matches, opt);
    case SolverId::SH5_4: return solve_sh5_4(matches, opt);
    case SolverId::SH5F_2: return solve_sh5f_2(matches, opt);
    case SolverId::SH5F_3: return solve_sh5f_3(matches, opt);
    case SolverId::None: break;
    }
    SolverOutput out;
    out.status = Status::Unsolvable;
    return out;
}

SolverOutput solve(const std::vector<ReducedMatch> &matches, Mode mode, const SolverOptions &opt) {
    const Classification c = classify_sample(matches, mode);
    if (c.status != Status::Ok) {
        SolverOutput out;
        out.status = c.status;
        return out;
    }
    return run_solver(c.solver, matches, opt);
}

ScaleResult recover_scale_calibrated(const Eigen::Matrix3d &Gp, const Eigen::Vector3d &mp, double tol) {
    ScaleResult r;
    const Eigen::Vector3d sv = singular_values_3x3(Gp);
    if (!(sv(1) > 0)) {
        r.status = Status::InconsistentScale;
        return r;
    }
    r.g33 = 1.0 / sv(1);
    Eigen::VectorXd x(12);
    x << Gp(0, 0), Gp(0, 1), Gp(0, 2), Gp(1, 0), Gp(1, 1), Gp(1, 2), Gp(2, 0), Gp(2, 1), mp, r.g33;
    r.residual = shipped_table(TableVariant::CAL_BACK).max_normalized_residual(x);
    if (!(r.residual <= tol)) r.status = Status::InconsistentScale;
    return r;
}

ScaleResult recover_scale_focal(const Eigen::Matrix3d &Gp, const Eigen::Vector3d &mp, double tol) {
    ScaleResult r;
    const Eigen::Matrix3d N = Gp.transpose() * Gp;
    // N - diag(a, a, b) = m' y^T + y m'^T with a = w^2 / g33^2, b = 1 / g33^2.
    Eigen::Matrix<double, 6, 5> A;
    Eigen::Matrix<double, 6, 1> b;
    A << 1, 0, 2 * mp(0), 0, 0,
         1, 0, 0, 2 * mp(1), 0,
         0, 1, 0, 0, 2 * mp(2),
         0, 0, mp(1), mp(0), 0,
         0, 0, mp(2), 0, mp(0),
         0, 0, 0, mp(2), mp(1);
    b << N(0, 0), N(1, 1), N(2, 2), N(0, 1), N(0, 2), N(1, 2);
    const Eigen::Matrix<double, 5, 1> sol = A.colPivHouseholderQr().solve(b);
    const double a = sol(0), beta = sol(1);
    if (!(beta > 0)) {
        r.status = Status::InconsistentScale;
        return r;
    }
    if (!(a > 0)) {
        r.status = Status::NegativeFocal;
        return r;
    }
    r.g33 = 1.0 / std::sqrt(beta);
    r.w = std::sqrt(a / beta);
    Eigen::VectorXd x(13);
    x << Gp(0, 0), Gp(0, 1), Gp(0, 2), Gp(1, 0), Gp(1, 1), Gp(1, 2), Gp(2, 0), Gp(2, 1), mp, r.g33, r.w;
    r.residual = shipped_table(TableVariant::FOC_BACK).max_normalized_residual(x);
    if (!(r.residual <= tol)) r.status = Status::InconsistentScale;
    return r;
}

}  // namespace sgh
