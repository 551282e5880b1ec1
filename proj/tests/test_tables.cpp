#include <doctest.h>

#include <Eigen/Geometry>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "sgh/error.h"
#include "sgh/generator_table.h"

using namespace sgh;

namespace {

std::vector<std::string> lines_of(const std::string &text) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start < text.size()) {
        const size_t end = text.find('\n', start);
        out.push_back(text.substr(start, end - start));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

// Rewrites the trailing checksum so that only the intended corruption remains.
std::string reseal(const std::vector<std::string> &lines) {
    std::string body;
    for (const std::string &l : lines) {
        if (l.rfind("checksum=", 0) == 0) break;
        body += l + "\n";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "checksum=%016llx\n", static_cast<unsigned long long>(fnv1a64(body)));
    return body + buf;
}

ErrorCode parse_error(TableVariant v, const std::string &text) {
    try {
        parse_table(v, text);
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("parse succeeded");
    return ErrorCode::ParseError;
}

Eigen::VectorXd random_valid(TableVariant v, std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0, 1);
    const Eigen::Matrix3d R = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized().toRotationMatrix();
    const Eigen::Vector3d t(n(rng), n(rng), n(rng)), nt(n(rng), n(rng), n(rng));
    const bool focal = v == TableVariant::FOC_I1 || v == TableVariant::FOC_I2 || v == TableVariant::FOC_BACK;
    return valid_assignment(v, R, t, nt, focal ? std::uniform_real_distribution<double>(0.3, 2)(rng) : 1.0);
}

}  // namespace

TEST_SUITE("tables") {

TEST_CASE("shipped table counts and degrees") {
    const GeneratorTable &cal_i2 = shipped_table(TableVariant::CAL_I2);
    CHECK(cal_i2.polys.size() == 5);
    for (const SparsePoly &p : cal_i2.polys) CHECK(p.degree() == 5);
    const GeneratorTable &foc_i2 = shipped_table(TableVariant::FOC_I2);
    REQUIRE(foc_i2.polys.size() == 1);
    CHECK(foc_i2.polys[0].degree() == 5);
    CHECK(shipped_table(TableVariant::CAL_I1).polys.size() == 10);
    for (TableVariant v : kAllVariants) {
        CHECK(static_cast<int>(shipped_table(v).polys.size()) == expected_metadata(v).npolys);
        CHECK(shipped_table(v).vars == variable_names(v));
    }
}

TEST_CASE("serialization round trip") {
    for (TableVariant v : kAllVariants) {
        CHECK(serialize_table(shipped_table(v)) == shipped_table_text(v));
    }
}

TEST_CASE("fnv-1a reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("evaluate") {
    SparsePoly zero(11);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(11, 0.7);
    CHECK(evaluate(zero, x) == 0.0);

    SparsePoly p(11);
    std::vector<int> e(11, 0);
    e[0] = 1;
    e[10] = 2;
    p.add_term(e, 1.0);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(11);
    y(0) = 2;
    y(10) = 3;
    CHECK(evaluate(p, y) == 18.0);
}

TEST_CASE("specialize along a family") {
    SparsePoly p(11);
    std::vector<int> e(11, 0);
    e[10] = 2;
    p.add_term(e, 1.0);
    Eigen::VectorXd b0 = Eigen::VectorXd::Zero(11), b1 = Eigen::VectorXd::Zero(11);
    b1(10) = 1;
    const UnivariatePoly u = specialize_univariate(p, b0, b1);
    REQUIRE(u.degree() == 2);
    CHECK(u.coeffs()[0] == doctest::Approx(0).epsilon(1e-14));
    CHECK(u.coeffs()[1] == doctest::Approx(0).epsilon(1e-14));
    CHECK(u.coeffs()[2] == doctest::Approx(1));
}

TEST_CASE("specialized generators match direct evaluation") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> g(-2, 2);
    for (const SparsePoly &p : shipped_table(TableVariant::CAL_I2).polys) {
        Eigen::VectorXd b0(11), b1(11);
        for (int i = 0; i < 11; ++i) {
            b0(i) = n(rng);
            b1(i) = n(rng);
        }
        const UnivariatePoly u = specialize_univariate(p, b0, b1);
        CHECK(u.degree() == 5);
        for (int k = 0; k < 20; ++k) {
            const double gamma = g(rng);
            const Eigen::VectorXd x = b0 + gamma * b1;
            CHECK(std::abs(u(gamma) - evaluate(p, x)) <= 1e-9 * p.magnitude(x.data()));
        }
    }
}

TEST_CASE("residual filter") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0, 1);
    const GeneratorTable &t = shipped_table(TableVariant::CAL_I2);
    CHECK(residual_filter({}, t).empty());
    const Eigen::VectorXd good = random_valid(TableVariant::CAL_I2, rng);
    CHECK(residual_filter({good}, t).size() == 1);
    std::vector<Eigen::VectorXd> random;
    for (int k = 0; k < 1000; ++k) {
        Eigen::VectorXd x(11);
        for (int i = 0; i < 11; ++i) x(i) = n(rng);
        random.push_back(x);
    }
    CHECK(residual_filter(random, t).empty());
}

TEST_CASE("generators vanish on the negated homography") {
    std::mt19937_64 rng(4);
    for (TableVariant v : {TableVariant::CAL_I1, TableVariant::FOC_I1}) {
        const GeneratorTable &t = shipped_table(v);
        Eigen::VectorXd x = random_valid(v, rng);
        x = -x;
        CHECK(t.max_normalized_residual(x) <= 1e-9);
    }
}

TEST_CASE("vanishing report on shipped tables") {
    for (TableVariant v : kAllVariants) {
        const VanishingReport r = verify_vanishing(shipped_table(v), 200, 2);
        CHECK_MESSAGE(r.passed, to_string(v));
        CHECK(r.max_valid_residual <= kValidResidualTol);
        CHECK(r.min_invalid_residual >= kInvalidResidualMin);
    }
}

TEST_CASE("zero samples is a vacuous pass") {
    const VanishingReport r = verify_vanishing(shipped_table(TableVariant::FOC_I2), 0);
    CHECK(r.passed);
    CHECK(r.vacuous);
}

TEST_CASE("a perturbed coefficient fails validation") {
    for (TableVariant v : {TableVariant::CAL_I2, TableVariant::FOC_I2, TableVariant::FOC_I1}) {
        GeneratorTable t = shipped_table(v);
        t.polys[0].coeff(0) *= 1.0 + 1e-3;
        CHECK_THROWS_AS(require_vanishing(t, 200), Error);
        try {
            require_vanishing(t, 200);
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::ValidationFailed);
        }
    }
}

TEST_CASE("corrupted files are rejected") {
    const TableVariant v = TableVariant::FOC_I1;
    const std::vector<std::string> lines = lines_of(shipped_table_text(v));

    SUBCASE("missing term line") {
        std::vector<std::string> l = lines;
        l.erase(l.begin() + 3);
        CHECK(parse_error(v, reseal(l)) == ErrorCode::CountMismatch);
    }
    SUBCASE("wrong polynomial count in the header") {
        std::vector<std::string> l = lines;
        const size_t pos = l[0].find("npolys=");
        l[0] = l[0].substr(0, pos) + "npolys=7";
        CHECK(parse_error(v, reseal(l)) == ErrorCode::CountMismatch);
    }
    SUBCASE("declared degree disagrees with the terms") {
        std::vector<std::string> l = lines;
        const size_t pos = l[1].find("degree=");
        l[1].replace(pos, 8, "degree=9");
        CHECK(parse_error(v, reseal(l)) == ErrorCode::DegreeMismatch);
    }
    SUBCASE("edited coefficient without a new checksum") {
        std::vector<std::string> l = lines;
        l[2] += "1";
        std::string text;
        for (const std::string &s : l) text += s + "\n";
        CHECK(parse_error(v, text) == ErrorCode::ChecksumMismatch);
    }
    SUBCASE("table of another variant") {
        CHECK(parse_error(v, shipped_table_text(TableVariant::FOC_I2)) == ErrorCode::ParseError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_table(v, "/nonexistent/foc_i1.txt"), Error);
    }
}

TEST_CASE("load from disk matches the embedded copy") {
    const std::string path = "sgh_test_table.txt";
    {
        std::ofstream f(path);
        f << shipped_table_text(TableVariant::CAL_I2);
    }
    const GeneratorTable t = load_table(TableVariant::CAL_I2, path);
    CHECK(t.checksum == shipped_table(TableVariant::CAL_I2).checksum);
    std::remove(path.c_str());
}

}  // TEST_SUITE
