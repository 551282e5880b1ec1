#include "sgh/univariate.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgh {

namespace {

constexpr double kTrimTol = 1e-12;

UnivariatePoly scaled(const UnivariatePoly &p, double s) {
    std::vector<double> c = p.coeffs();
    for (double &x : c) x *= s;
    return UnivariatePoly(std::move(c));
}

// Positive rescaling to unit max coefficient; keeps signs for Sturm counts.
UnivariatePoly normalized(const UnivariatePoly &p) {
    const double m = p.max_abs_coeff();
    return m > 0 ? scaled(p, 1.0 / m) : p;
}

double eval_scale(const UnivariatePoly &p, double x) {
    double s = 0, xp = 1;
    for (double c : p.coeffs()) {
        s += std::abs(c) * xp;
        xp *= std::abs(x);
    }
    return s;
}

double refine_root(const UnivariatePoly &p, const UnivariatePoly &dp, double a, double b) {
    double fa = p(a);
    double fb = p(b);
    if (fb == 0.0) return b;
    if (fa == 0.0) return a;
    if ((fa > 0) == (fb > 0)) return 0.5 * (a + b);

    double x = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
        const double fx = p(x);
        if (std::abs(fx) <= 1e-15 * eval_scale(p, x)) return x;
        if ((fx > 0) == (fa > 0)) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        if (b - a <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
            return 0.5 * (a + b);
        }
        const double d = dp(x);
        double xn = d != 0.0 ? x - fx / d : a - 1.0;
        if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
        x = xn;
    }
    return x;
}

void isolate(const SturmChain &chain, double a, double b, int va, int vb, int depth,
             std::vector<std::pair<double, double>> &out) {
    const int count = va - vb;
    if (count <= 0) return;
    if (count == 1) {
        out.emplace_back(a, b);
        return;
    }
    const double mid = 0.5 * (a + b);
    if (depth > 200 || mid <= a || mid >= b) {
        // Clustered roots closer than double resolution: report one.
        out.emplace_back(a, b);
        return;
    }
    const int vm = sign_variations(chain, mid);
    isolate(chain, a, mid, va, vm, depth + 1, out);
    isolate(chain, mid, b, vm, vb, depth + 1, out);
}

}  // namespace

UnivariatePoly::UnivariatePoly(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    const double m = max_abs_coeff();
    while (!coeffs_.empty() && std::abs(coeffs_.back()) <= kTrimTol * m) coeffs_.pop_back();
}

double UnivariatePoly::operator()(double x) const {
    double r = 0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) r = r * x + *it;
    return r;
}

UnivariatePoly UnivariatePoly::derivative() const {
    if (coeffs_.size() <= 1) return UnivariatePoly();
    std::vector<double> d(coeffs_.size() - 1);
    for (size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = static_cast<double>(i) * coeffs_[i];
    return UnivariatePoly(std::move(d));
}

double UnivariatePoly::max_abs_coeff() const {
    double m = 0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
}

void poly_divmod(const UnivariatePoly &a, const UnivariatePoly &b, UnivariatePoly &quot,
                 UnivariatePoly &rem) {
    std::vector<double> r = a.coeffs();
    const std::vector<double> &d = b.coeffs();
    const int nb = b.degree();
    const int na = a.degree();
    if (na < nb) {
        quot = UnivariatePoly();
        rem = a;
        return;
    }
    std::vector<double> q(na - nb + 1, 0.0);
    for (int k = na - nb; k >= 0; --k) {
        const double c = r[k + nb] / d[nb];
        q[k] = c;
        for (int j = 0; j <= nb; ++j) r[k + j] -= c * d[j];
        r[k + nb] = 0.0;
    }
    r.resize(nb);
    // Cancellation leaves residue at the level of the dividend's magnitude.
    const double tol = 1e-11 * a.max_abs_coeff();
    for (double &x : r) {
        if (std::abs(x) <= tol) x = 0.0;
    }
    quot = UnivariatePoly(std::move(q));
    rem = UnivariatePoly(std::move(r));
}

UnivariatePoly poly_gcd(const UnivariatePoly &a, const UnivariatePoly &b) {
    UnivariatePoly x = normalized(a);
    UnivariatePoly y = normalized(b);
    if (x.degree() < y.degree()) std::swap(x, y);
    while (!y.is_zero()) {
        UnivariatePoly q, r;
        poly_divmod(x, y, q, r);
        x = y;
        y = normalized(r);
    }
    return normalized(x);
}

SturmChain sturm_chain(const UnivariatePoly &p) {
    SturmChain chain;
    chain.push_back(normalized(p));
    if (p.degree() < 1) return chain;
    chain.push_back(normalized(p.derivative()));
    while (chain.back().degree() > 0) {
        UnivariatePoly q, r;
        poly_divmod(chain[chain.size() - 2], chain.back(), q, r);
        if (r.is_zero()) break;
        chain.push_back(normalized(scaled(r, -1.0)));
    }
    return chain;
}

int sign_variations(const SturmChain &chain, double x) {
    int count = 0;
    int last = 0;
    for (const UnivariatePoly &p : chain) {
        const double v = p(x);
        const int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
        if (s == 0) continue;
        if (last != 0 && s != last) ++count;
        last = s;
    }
    return count;
}

double cauchy_bound(const UnivariatePoly &p) {
    if (p.degree() < 1) return 0.0;
    const double lead = std::abs(p.leading());
    double m = 0;
    for (int i = 0; i < p.degree(); ++i) m = std::max(m, std::abs(p.coeffs()[i]) / lead);
    return 1.0 + m;
}

std::vector<double> sturm_roots(const UnivariatePoly &p) {
    std::vector<double> roots;
    if (p.degree() < 1) return roots;

    UnivariatePoly sf = normalized(p);
    const UnivariatePoly g = poly_gcd(sf, sf.derivative());
    if (g.degree() >= 1) {
        UnivariatePoly q, r;
        poly_divmod(sf, g, q, r);
        sf = normalized(q);
    }
    if (sf.degree() < 1) return roots;

    const SturmChain chain = sturm_chain(sf);
    const double B = cauchy_bound(sf) * (1.0 + 1e-9) + 1e-12;
    std::vector<std::pair<double, double>> brackets;
    isolate(chain, -B, B, sign_variations(chain, -B), sign_variations(chain, B), 0, brackets);

    const UnivariatePoly dsf = sf.derivative();
    for (const auto &[a, b] : brackets) roots.push_back(refine_root(sf, dsf, a, b));
    std::sort(roots.begin(), roots.end());
    return roots;
}

}  // namespace sgh
