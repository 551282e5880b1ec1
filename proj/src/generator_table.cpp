#include "sgh/generator_table.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "sgh/error.h"
#include "sgh/geometry.h"

namespace sgh {

namespace detail {
const char *embedded_table(TableVariant v);
}

namespace {

const std::vector<std::string> kI2Vars = {"gp11", "gp12", "gp13", "gp21", "gp22", "gp23",
                                          "gp31", "gp32", "mp1",  "mp2",  "mp3"};

std::vector<std::string> with(std::vector<std::string> base, std::initializer_list<const char *> extra) {
    for (const char *e : extra) base.emplace_back(e);
    return base;
}

std::vector<int> repeat(std::initializer_list<std::pair<int, int>> parts) {
    std::vector<int> out;
    for (auto [deg, n] : parts) out.insert(out.end(), n, deg);
    return out;
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

// "key=value" fields of a header line.
std::map<std::string, std::string> fields(const std::string &line) {
    std::map<std::string, std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos) out[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return out;
}

double parse_coeff(const std::string &s) {
    const auto slash = s.find('/');
    size_t used = 0;
    if (slash == std::string::npos) {
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    }
    const double a = std::stod(s.substr(0, slash));
    const double b = std::stod(s.substr(slash + 1));
    if (b == 0.0) throw std::invalid_argument(s);
    return a / b;
}

bool starts_with(const std::string &s, const char *prefix) { return s.rfind(prefix, 0) == 0; }

Eigen::Matrix3d matrix_from(const Eigen::VectorXd &x, double g33) {
    Eigen::Matrix3d G;
    G << x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7), g33;
    return G;
}

}  // namespace

const char *to_string(TableVariant v) {
    switch (v) {
    case TableVariant::CAL_I1: return "CAL_I1";
    case TableVariant::CAL_I2: return "CAL_I2";
    case TableVariant::FOC_I1: return "FOC_I1";
    case TableVariant::FOC_I2: return "FOC_I2";
    case TableVariant::CAL_BACK: return "CAL_BACK";
    case TableVariant::FOC_BACK: return "FOC_BACK";
    }
    return "?";
}

TableVariant parse_variant(const std::string &name) {
    for (TableVariant v : kAllVariants) {
        if (name == to_string(v)) return v;
    }
    throw Error(ErrorCode::MissingTable, "unknown table variant '" + name + "'");
}

const std::vector<std::string> &variable_names(TableVariant v) {
    static const std::vector<std::string> i1 = {"g11", "g12", "g13", "g21", "g22", "g23",
                                                "g31", "g32", "m1",  "m2",  "m3",  "g33"};
    static const std::vector<std::string> cal_back = with(kI2Vars, {"g33"});
    static const std::vector<std::string> foc_back = with(kI2Vars, {"g33", "w"});
    switch (v) {
    case TableVariant::CAL_I1:
    case TableVariant::FOC_I1: return i1;
    case TableVariant::CAL_I2:
    case TableVariant::FOC_I2: return kI2Vars;
    case TableVariant::CAL_BACK: return cal_back;
    case TableVariant::FOC_BACK: return foc_back;
    }
    return kI2Vars;
}

const TableMetadata &expected_metadata(TableVariant v) {
    static const TableMetadata cal_i1{10, repeat({{4, 6}, {5, 3}, {6, 1}})};
    static const TableMetadata cal_i2{5, repeat({{5, 5}})};
    static const TableMetadata foc_i1{3, repeat({{4, 2}, {5, 1}})};
    static const TableMetadata foc_i2{1, repeat({{5, 1}})};
    static const TableMetadata back{10, repeat({{6, 6}, {9, 3}, {12, 1}})};
    switch (v) {
    case TableVariant::CAL_I1: return cal_i1;
    case TableVariant::CAL_I2: return cal_i2;
    case TableVariant::FOC_I1: return foc_i1;
    case TableVariant::FOC_I2: return foc_i2;
    case TableVariant::CAL_BACK:
    case TableVariant::FOC_BACK: return back;
    }
    return back;
}

void SparsePoly::add_term(const std::vector<int> &exps, double coeff) {
    int deg = 0;
    for (int e : exps) {
        exps_.push_back(static_cast<uint8_t>(e));
        deg += e;
    }
    coeffs_.push_back(coeff);
    degree_ = std::max(degree_, deg);
}

namespace {

// Powers x[v]^k for k up to the polynomial degree, row-major per variable.
template <typename F>
void for_each_term(const SparsePoly &p, const double *x, F &&f) {
    constexpr int kMaxVars = 16;
    constexpr int kMaxDeg = 16;
    double pw[kMaxVars][kMaxDeg + 1];
    const int nv = p.nvars();
    const int d = std::min(p.degree(), kMaxDeg);
    for (int v = 0; v < nv; ++v) {
        pw[v][0] = 1.0;
        for (int k = 1; k <= d; ++k) pw[v][k] = pw[v][k - 1] * x[v];
    }
    for (int t = 0; t < p.nterms(); ++t) {
        double mono = p.coeff(t);
        for (int v = 0; v < nv; ++v) {
            const int e = p.exponent(t, v);
            if (e) mono *= pw[v][e];
        }
        f(mono);
    }
}

}  // namespace

double SparsePoly::evaluate(const double *x) const {
    double s = 0;
    for_each_term(*this, x, [&](double v) { s += v; });
    return s;
}

double SparsePoly::magnitude(const double *x) const {
    double s = 0;
    for_each_term(*this, x, [&](double v) { s += std::abs(v); });
    return s;
}

double SparsePoly::normalized_residual(const double *x) const {
    double s = 0, a = 0;
    for_each_term(*this, x, [&](double v) {
        s += v;
        a += std::abs(v);
    });
    return a > 0 ? std::abs(s) / a : 0.0;
}

int SparsePoly::degree_in(const std::vector<bool> &active) const {
    int best = 0;
    for (int t = 0; t < nterms(); ++t) {
        int d = 0;
        for (int v = 0; v < nvars_; ++v) {
            if (active[v]) d += exponent(t, v);
        }
        best = std::max(best, d);
    }
    return best;
}

double evaluate(const SparsePoly &poly, const Eigen::VectorXd &x) { return poly.evaluate(x.data()); }

double GeneratorTable::max_normalized_residual(const Eigen::VectorXd &x) const {
    double r = 0;
    for (const SparsePoly &p : polys) r = std::max(r, p.normalized_residual(x.data()));
    return r;
}

uint64_t fnv1a64(const std::string &data) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

GeneratorTable parse_table(TableVariant expected, const std::string &text) {
    const std::string name = to_string(expected);
    std::vector<std::string> lines = split(text, '\n');
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw Error(ErrorCode::MissingTable, name + ": empty table");

    auto fail = [&](ErrorCode code, size_t line, const std::string &msg) {
        throw Error(code, name + " line " + std::to_string(line + 1) + ": " + msg);
    };

    GeneratorTable table;
    table.variant = expected;
    const auto header = fields(lines[0]);
    if (!header.count("variant") || !header.count("vars") || !header.count("npolys")) {
        fail(ErrorCode::ParseError, 0, "malformed header");
    }
    if (header.at("variant") != name) {
        fail(ErrorCode::ParseError, 0, "variant is " + header.at("variant"));
    }
    table.vars = split(header.at("vars"), ',');
    if (table.vars != variable_names(expected)) fail(ErrorCode::ParseError, 0, "unexpected variable list");
    const int nv = table.nvars();
    const int declared_polys = std::stoi(header.at("npolys"));

    size_t i = 1;
    std::vector<int> declared_degrees;
    std::string body = lines[0] + "\n";
    while (i < lines.size() && starts_with(lines[i], "poly")) {
        const auto pf = fields(lines[i]);
        if (!pf.count("degree") || !pf.count("nterms")) fail(ErrorCode::ParseError, i, "malformed poly header");
        const int nterms = std::stoi(pf.at("nterms"));
        declared_degrees.push_back(std::stoi(pf.at("degree")));
        body += lines[i] + "\n";
        ++i;
        SparsePoly poly(nv);
        int got = 0;
        for (; i < lines.size() && got < nterms; ++i, ++got) {
            if (starts_with(lines[i], "poly") || starts_with(lines[i], "checksum")) break;
            std::istringstream is(lines[i]);
            std::vector<std::string> tok;
            std::string s;
            while (is >> s) tok.push_back(s);
            if (static_cast<int>(tok.size()) != nv + 1) fail(ErrorCode::ParseError, i, "wrong term arity");
            std::vector<int> exps(nv);
            try {
                for (int v = 0; v < nv; ++v) exps[v] = std::stoi(tok[v]);
                poly.add_term(exps, parse_coeff(tok[nv]));
            } catch (const std::invalid_argument &) {
                fail(ErrorCode::ParseError, i, "bad number");
            } catch (const std::out_of_range &) {
                fail(ErrorCode::ParseError, i, "number out of range");
            }
            body += lines[i] + "\n";
        }
        if (got != nterms) {
            fail(ErrorCode::CountMismatch, i, "expected " + std::to_string(nterms) + " terms, found " +
                                                  std::to_string(got));
        }
        table.polys.push_back(std::move(poly));
    }
    if (static_cast<int>(table.polys.size()) != declared_polys) {
        fail(ErrorCode::CountMismatch, i, "header declares " + std::to_string(declared_polys) +
                                              " polynomials, found " + std::to_string(table.polys.size()));
    }
    const TableMetadata &meta = expected_metadata(expected);
    if (declared_polys != meta.npolys) {
        fail(ErrorCode::CountMismatch, 0, "expected " + std::to_string(meta.npolys) + " polynomials");
    }
    std::vector<int> degrees;
    for (size_t k = 0; k < table.polys.size(); ++k) {
        if (table.polys[k].degree() != declared_degrees[k]) {
            fail(ErrorCode::DegreeMismatch, 0, "polynomial " + std::to_string(k) + " has degree " +
                                                   std::to_string(table.polys[k].degree()));
        }
        degrees.push_back(table.polys[k].degree());
    }
    std::sort(degrees.begin(), degrees.end());
    if (degrees != meta.degrees) fail(ErrorCode::DegreeMismatch, 0, "degree multiset differs");

    if (i >= lines.size() || !starts_with(lines[i], "checksum=")) {
        fail(ErrorCode::ChecksumMismatch, i, "missing checksum");
    }
    const uint64_t stored = std::stoull(lines[i].substr(9), nullptr, 16);
    table.checksum = fnv1a64(body);
    if (stored != table.checksum) fail(ErrorCode::ChecksumMismatch, i, "checksum does not match content");
    return table;
}

GeneratorTable load_table(TableVariant variant, const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingTable, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_table(variant, ss.str());
}

const std::string &shipped_table_text(TableVariant variant) {
    static const std::vector<std::string> texts = [] {
        std::vector<std::string> out;
        for (TableVariant v : kAllVariants) out.emplace_back(detail::embedded_table(v));
        return out;
    }();
    return texts[static_cast<int>(variant)];
}

const GeneratorTable &shipped_table(TableVariant variant) {
    static const std::vector<GeneratorTable> tables = [] {
        std::vector<GeneratorTable> out;
        for (TableVariant v : kAllVariants) out.push_back(parse_table(v, shipped_table_text(v)));
        return out;
    }();
    return tables[static_cast<int>(variant)];
}

std::string serialize_table(const GeneratorTable &table) {
    std::ostringstream os;
    os << "variant=" << to_string(table.variant) << " vars=";
    for (size_t v = 0; v < table.vars.size(); ++v) os << (v ? "," : "") << table.vars[v];
    os << " npolys=" << table.polys.size() << "\n";
    char buf[64];
    for (const SparsePoly &p : table.polys) {
        os << "poly degree=" << p.degree() << " nterms=" << p.nterms() << "\n";
        for (int t = 0; t < p.nterms(); ++t) {
            for (int v = 0; v < p.nvars(); ++v) os << p.exponent(t, v) << " ";
            const double c = p.coeff(t);
            if (c == std::round(c) && std::abs(c) < 1e15) {
                std::snprintf(buf, sizeof buf, "%.0f", c);
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", c);
            }
            os << buf << "\n";
        }
    }
    const std::string body = os.str();
    std::snprintf(buf, sizeof buf, "checksum=%016llx\n",
                  static_cast<unsigned long long>(fnv1a64(body)));
    return body + buf;
}

UnivariatePoly specialize_univariate(const SparsePoly &poly, const Eigen::VectorXd &b0,
                                     const Eigen::VectorXd &b1) {
    const int nv = poly.nvars();
    std::vector<bool> active(nv);
    for (int v = 0; v < nv; ++v) active[v] = b1(v) != 0.0;
    const int d = poly.degree_in(active);
    if (d == 0) return UnivariatePoly({poly.evaluate(b0.data())});

    Eigen::MatrixXd V(d + 1, d + 1);
    Eigen::VectorXd y(d + 1);
    Eigen::VectorXd x(nv);
    for (int k = 0; k <= d; ++k) {
        const double g = std::cos(M_PI * (k + 0.5) / (d + 1));
        double gp = 1;
        for (int j = 0; j <= d; ++j, gp *= g) V(k, j) = gp;
        x = b0 + g * b1;
        y(k) = poly.evaluate(x.data());
    }
    const Eigen::VectorXd c = V.partialPivLu().solve(y);
    return UnivariatePoly(std::vector<double>(c.data(), c.data() + c.size()));
}

double specialization_scale(const SparsePoly &poly, const Eigen::VectorXd &b0, const Eigen::VectorXd &b1) {
    std::vector<bool> active(poly.nvars());
    for (int v = 0; v < poly.nvars(); ++v) active[v] = b1(v) != 0.0;
    const int d = poly.degree_in(active);
    double s = 0;
    Eigen::VectorXd x;
    for (int k = 0; k <= d; ++k) {
        x = b0 + std::cos(M_PI * (k + 0.5) / (d + 1)) * b1;
        s = std::max(s, poly.magnitude(x.data()));
    }
    return s;
}

std::vector<Eigen::VectorXd> residual_filter(const std::vector<Eigen::VectorXd> &candidates,
                                             const GeneratorTable &table, double tol) {
    std::vector<Eigen::VectorXd> out;
    for (const Eigen::VectorXd &x : candidates) {
        if (table.max_normalized_residual(x) <= tol) out.push_back(x);
    }
    return out;
}

double invalidity_margin(TableVariant variant, const Eigen::VectorXd &x) {
    Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
    Eigen::Vector3d m = Eigen::Vector3d::Zero();
    Eigen::Vector3d d_fixed(0, 0, 0);
    bool free_12 = false, free_3 = false, shared = false;
    switch (variant) {
    case TableVariant::CAL_I1:
    case TableVariant::FOC_I1:
        G = matrix_from(x, x(11));
        m = x.segment<3>(8);
        if (variant == TableVariant::CAL_I1) {
            d_fixed = Eigen::Vector3d(1, 1, 1);
        } else {
            d_fixed = Eigen::Vector3d(0, 0, 1);
            free_12 = true;
        }
        break;
    case TableVariant::CAL_I2:
        G = matrix_from(x, 1.0);
        m = x.segment<3>(8);
        shared = true;
        break;
    case TableVariant::FOC_I2:
        G = matrix_from(x, 1.0);
        m = x.segment<3>(8);
        free_12 = free_3 = true;
        break;
    case TableVariant::CAL_BACK:
    case TableVariant::FOC_BACK: {
        const double g33 = x(11);
        G = g33 * matrix_from(x, 1.0);
        m = g33 * x.segment<3>(8);
        const double w2 = variant == TableVariant::FOC_BACK ? x(12) * x(12) : 1.0;
        d_fixed = Eigen::Vector3d(w2, w2, 1);
        break;
    }
    }
    const Eigen::Matrix3d N = G.transpose() * G;
    // Symmetric entries in the order 11, 22, 33, 12, 13, 23.
    Eigen::Matrix<double, 6, 1> b;
    b << N(0, 0) - d_fixed(0), N(1, 1) - d_fixed(1), N(2, 2) - d_fixed(2), N(0, 1), N(0, 2), N(1, 2);
    Eigen::Matrix<double, 6, 5> A = Eigen::Matrix<double, 6, 5>::Zero();
    A.row(0).head<3>() << 2 * m(0), 0, 0;
    A.row(1).head<3>() << 0, 2 * m(1), 0;
    A.row(2).head<3>() << 0, 0, 2 * m(2);
    A.row(3).head<3>() << m(1), m(0), 0;
    A.row(4).head<3>() << m(2), 0, m(0);
    A.row(5).head<3>() << 0, m(2), m(1);
    int cols = 3;
    if (shared) {
        A(0, cols) = A(1, cols) = A(2, cols) = 1;
        ++cols;
    }
    if (free_12) {
        A(0, cols) = A(1, cols) = 1;
        ++cols;
    }
    if (free_3) {
        A(2, cols) = 1;
        ++cols;
    }
    const double nb = b.norm();
    if (nb == 0.0) return 0.0;
    const Eigen::MatrixXd Ac = A.leftCols(cols);
    const Eigen::VectorXd sol = Ac.colPivHouseholderQr().solve(b);
    return (Ac * sol - b).norm() / nb;
}

Eigen::VectorXd valid_assignment(TableVariant variant, const Eigen::Matrix3d &R,
                                 const Eigen::Vector3d &t, const Eigen::Vector3d &n_tilde,
                                 double w) {
    const SemiHomography H = compose_G(R, t, n_tilde, w == 1.0 ? std::nullopt : std::optional<double>(1.0 / w));
    const Eigen::Matrix3d &G = H.G;
    const Eigen::Vector3d &m = H.m;
    const double g33 = G(2, 2);
    Eigen::VectorXd x(variable_names(variant).size());
    auto put_g = [&](double s) {
        x.head<8>() << G(0, 0), G(0, 1), G(0, 2), G(1, 0), G(1, 1), G(1, 2), G(2, 0), G(2, 1);
        x.head<8>() *= s;
        x.segment<3>(8) = s * m;
    };
    switch (variant) {
    case TableVariant::CAL_I1:
    case TableVariant::FOC_I1:
        put_g(1.0);
        x(11) = g33;
        break;
    case TableVariant::CAL_I2:
    case TableVariant::FOC_I2:
        put_g(1.0 / g33);
        break;
    case TableVariant::CAL_BACK:
        put_g(1.0 / g33);
        x(11) = g33;
        break;
    case TableVariant::FOC_BACK:
        put_g(1.0 / g33);
        x(11) = g33;
        x(12) = w;
        break;
    }
    return x;
}

VanishingReport verify_vanishing(const GeneratorTable &table, int n_samples, uint64_t seed) {
    VanishingReport rep;
    if (n_samples <= 0) {
        rep.passed = true;
        rep.vacuous = true;
        return rep;
    }
    const bool focal = table.variant == TableVariant::FOC_I1 || table.variant == TableVariant::FOC_I2 ||
                       table.variant == TableVariant::FOC_BACK;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> focal_dist(0.5, 3.0);

    while (rep.n_valid < n_samples) {
        Eigen::Quaterniond qr(normal(rng), normal(rng), normal(rng), normal(rng));
        qr.normalize();
        Eigen::Matrix3d R = qr.toRotationMatrix();
        Eigen::Vector3d t(normal(rng), normal(rng), normal(rng));
        Eigen::Vector3d n(normal(rng), normal(rng), normal(rng));
        const double w = focal ? 1.0 / focal_dist(rng) : 1.0;
        const SemiHomography H = compose_G(R, t, n, focal ? std::optional<double>(1.0 / w) : std::nullopt);
        if (std::abs(H.G(2, 2)) < 0.05) continue;
        Eigen::VectorXd x = valid_assignment(table.variant, R, t, n, w);
        // Half of the draws use the (-G, -m) representative: raw g, m and g33
        // flip sign, the primed variables and w do not.
        if (rng() & 1) {
            for (int v = 0; v < table.nvars(); ++v) {
                const std::string &name = table.vars[v];
                if ((name[0] == 'g' || name[0] == 'm') && name[1] != 'p') x(v) = -x(v);
            }
        }
        rep.max_valid_residual = std::max(rep.max_valid_residual, table.max_normalized_residual(x));
        ++rep.n_valid;
    }

    rep.min_invalid_residual = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x(table.nvars());
    while (rep.n_invalid < n_samples) {
        for (int v = 0; v < x.size(); ++v) x(v) = normal(rng);
        if (invalidity_margin(table.variant, x) < kInvalidMargin) {
            ++rep.n_rejected_invalid;
            continue;
        }
        rep.min_invalid_residual = std::min(rep.min_invalid_residual, table.max_normalized_residual(x));
        ++rep.n_invalid;
    }
    rep.passed = rep.max_valid_residual <= kValidResidualTol && rep.min_invalid_residual >= kInvalidResidualMin;
    return rep;
}

VanishingReport require_vanishing(const GeneratorTable &table, int n_samples, uint64_t seed) {
    const VanishingReport rep = verify_vanishing(table, n_samples, seed);
    if (!rep.passed) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: max valid residual %.3g, min invalid residual %.3g",
                      to_string(table.variant), rep.max_valid_residual, rep.min_invalid_residual);
        throw Error(ErrorCode::ValidationFailed, buf);
    }
    return rep;
}

}  // namespace sgh
