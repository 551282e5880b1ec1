#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "sgh/univariate.h"

namespace sgh {

enum class TableVariant { CAL_I1, CAL_I2, FOC_I1, FOC_I2, CAL_BACK, FOC_BACK };

constexpr TableVariant kAllVariants[] = {TableVariant::CAL_I1,   TableVariant::CAL_I2,
                                         TableVariant::FOC_I1,   TableVariant::FOC_I2,
                                         TableVariant::CAL_BACK, TableVariant::FOC_BACK};

const char *to_string(TableVariant v);
TableVariant parse_variant(const std::string &name);

// Variable order of each variant. I2 tables use
// gp11 gp12 gp13 gp21 gp22 gp23 gp31 gp32 mp1 mp2 mp3 (g'33 = 1),
// I1 tables g11 .. g32 m1 m2 m3 g33, BACK tables the I2 list followed by g33
// (and w for the focal variant).
const std::vector<std::string> &variable_names(TableVariant v);

struct TableMetadata {
    int npolys;
    std::vector<int> degrees;  // sorted ascending
};

const TableMetadata &expected_metadata(TableVariant v);

class SparsePoly {
  public:
    SparsePoly(int nvars = 0) : nvars_(nvars) {}

    void add_term(const std::vector<int> &exps, double coeff);

    int nvars() const { return nvars_; }
    int nterms() const { return static_cast<int>(coeffs_.size()); }
    int degree() const { return degree_; }
    int exponent(int term, int var) const { return exps_[term * nvars_ + var]; }
    double coeff(int term) const { return coeffs_[term]; }
    double &coeff(int term) { return coeffs_[term]; }

    double evaluate(const double *x) const;
    // Sum of |coefficient * monomial|, the scale used to normalize residuals.
    double magnitude(const double *x) const;
    double normalized_residual(const double *x) const;

    // Largest total degree restricted to the variables with active[v] set.
    int degree_in(const std::vector<bool> &active) const;

  private:
    int nvars_;
    int degree_ = 0;
    std::vector<uint8_t> exps_;
    std::vector<double> coeffs_;
};

double evaluate(const SparsePoly &poly, const Eigen::VectorXd &x);

struct GeneratorTable {
    TableVariant variant;
    std::vector<std::string> vars;
    std::vector<SparsePoly> polys;
    uint64_t checksum = 0;

    int nvars() const { return static_cast<int>(vars.size()); }
    double max_normalized_residual(const Eigen::VectorXd &x) const;
};

uint64_t fnv1a64(const std::string &data);

// Throws Error with MissingTable, ParseError, CountMismatch, DegreeMismatch or
// ChecksumMismatch.
GeneratorTable parse_table(TableVariant expected, const std::string &text);
GeneratorTable load_table(TableVariant variant, const std::string &path);

// The tables compiled into the library, parsed and validated once.
const GeneratorTable &shipped_table(TableVariant variant);
const std::string &shipped_table_text(TableVariant variant);

std::string serialize_table(const GeneratorTable &table);

// Polynomial in gamma along x(gamma) = b0 + gamma * b1, fitted from values at
// Chebyshev nodes. The degree is the total degree restricted to the variables
// that move with gamma.
UnivariatePoly specialize_univariate(const SparsePoly &poly, const Eigen::VectorXd &b0,
                                     const Eigen::VectorXd &b1);

// Largest term-magnitude sum of the polynomial over the interpolation nodes
// used by specialize_univariate; the scale against which its coefficients are
// judged.
double specialization_scale(const SparsePoly &poly, const Eigen::VectorXd &b0, const Eigen::VectorXd &b1);

std::vector<Eigen::VectorXd> residual_filter(const std::vector<Eigen::VectorXd> &candidates,
                                             const GeneratorTable &table, double tol = 1e-6);

// Relative least-squares inconsistency of the linear system that certifies a
// point of the variant's variety; zero exactly on valid points.
double invalidity_margin(TableVariant variant, const Eigen::VectorXd &x);

// A valid assignment for the variant composed from a random pose.
Eigen::VectorXd valid_assignment(TableVariant variant, const Eigen::Matrix3d &R,
                                 const Eigen::Vector3d &t, const Eigen::Vector3d &n_tilde,
                                 double w);

struct VanishingReport {
    int n_valid = 0;
    int n_invalid = 0;
    int n_rejected_invalid = 0;
    double max_valid_residual = 0;
    double min_invalid_residual = 0;
    bool passed = false;
    bool vacuous = false;
};

constexpr double kValidResidualTol = 1e-9;
constexpr double kInvalidResidualMin = 1e-3;
constexpr double kInvalidMargin = 1e-2;

VanishingReport verify_vanishing(const GeneratorTable &table, int n_samples, uint64_t seed = 1);

// verify_vanishing that throws ValidationFailed when the report does not pass.
VanishingReport require_vanishing(const GeneratorTable &table, int n_samples, uint64_t seed = 1);

}  // namespace sgh
