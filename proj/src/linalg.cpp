#include "sgh/linalg.h"

#include <Eigen/SVD>
#include <cmath>

namespace sgh {

NullspaceResult nullspace(const Eigen::MatrixXd &C, int expected_dim, double gap_ratio) {
    const int n = static_cast<int>(C.cols());
    NullspaceResult out;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
    const Eigen::VectorXd &s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    int rank = 0;
    for (int i = 0; i < s.size(); ++i) {
        if (s(i) > gap_ratio * smax) ++rank;
    }
    out.dim = n - rank;
    out.degenerate = out.dim != expected_dim;
    if (expected_dim > 0 && expected_dim <= n) {
        out.basis = svd.matrixV().rightCols(expected_dim);
    }
    return out;
}

RrefResult gauss_jordan(const Eigen::MatrixXd &C, double pivot_tol) {
    RrefResult out;
    out.R = C;
    Eigen::MatrixXd &A = out.R;
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    const double scale = A.cwiseAbs().maxCoeff();
    const double tol = pivot_tol * (scale > 0 ? scale : 1.0);

    int row = 0;
    for (int col = 0; col < n && row < m; ++col) {
        int best = row;
        for (int r = row + 1; r < m; ++r) {
            if (std::abs(A(r, col)) > std::abs(A(best, col))) best = r;
        }
        if (std::abs(A(best, col)) < tol) continue;
        A.row(row).swap(A.row(best));
        A.row(row) /= A(row, col);
        for (int r = 0; r < m; ++r) {
            if (r != row && A(r, col) != 0.0) A.row(r) -= A(r, col) * A.row(row);
        }
        out.pivots.push_back(col);
        ++row;
    }
    out.rank_deficient = static_cast<int>(out.pivots.size()) < std::min(m, n);
    return out;
}

Eigen::Vector3d singular_values_3x3(const Eigen::Matrix3d &M) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(M);
    return svd.singularValues();
}

}  // namespace sgh
