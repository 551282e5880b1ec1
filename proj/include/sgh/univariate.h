#pragma once

#include <vector>

namespace sgh {

class UnivariatePoly {
  public:
    UnivariatePoly() = default;
    // Ascending order. Trailing coefficients below 1e-12 * max|c| are trimmed.
    explicit UnivariatePoly(std::vector<double> coeffs);

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<double> &coeffs() const { return coeffs_; }
    double leading() const { return coeffs_.empty() ? 0.0 : coeffs_.back(); }
    bool is_zero() const { return coeffs_.empty(); }

    double operator()(double x) const;
    UnivariatePoly derivative() const;
    double max_abs_coeff() const;

  private:
    std::vector<double> coeffs_;
};

// Polynomial division with remainder; divisor must be nonzero.
void poly_divmod(const UnivariatePoly &a, const UnivariatePoly &b, UnivariatePoly &quot,
                 UnivariatePoly &rem);

UnivariatePoly poly_gcd(const UnivariatePoly &a, const UnivariatePoly &b);

using SturmChain = std::vector<UnivariatePoly>;

SturmChain sturm_chain(const UnivariatePoly &p);

int sign_variations(const SturmChain &chain, double x);

// Bound on |root| (Cauchy).
double cauchy_bound(const UnivariatePoly &p);

// Real roots in ascending order, each reported once.
std::vector<double> sturm_roots(const UnivariatePoly &p);

}  // namespace sgh
