#pragma once

#include <Eigen/Core>
#include <vector>

namespace sgh {

struct NullspaceResult {
    Eigen::MatrixXd basis;  // n x expected_dim, orthonormal columns
    int dim = 0;            // numerical dimension
    bool degenerate = false;
};

// Right null space from the SVD. A singular value counts as zero when it is
// below gap_ratio * sigma_max.
NullspaceResult nullspace(const Eigen::MatrixXd &C, int expected_dim, double gap_ratio = 1e-6);

struct RrefResult {
    Eigen::MatrixXd R;
    std::vector<int> pivots;
    bool rank_deficient = false;
};

RrefResult gauss_jordan(const Eigen::MatrixXd &C, double pivot_tol = 1e-12);

Eigen::Vector3d singular_values_3x3(const Eigen::Matrix3d &M);

}  // namespace sgh
