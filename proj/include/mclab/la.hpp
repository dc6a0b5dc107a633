#pragma once

#include <Eigen/Dense>

#include "mclab/util.hpp"

namespace mclab {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline bool is_hermitian(const Mat& m, double tol) {
  return (m - m.adjoint()).norm() <= tol * std::max(1.0, m.norm());
}

inline Mat hermitize(const Mat& m) { return 0.5 * (m + m.adjoint()); }

Mat random_matrix(int rows, int cols, Rng& rng, double scale = 1.0);
Mat random_hermitian(int n, Rng& rng, double scale = 1.0);
Mat random_unitary(int n, Rng& rng);
// Hermitian positive definite with condition number at most cond_cap
Mat random_hpd(int n, Rng& rng, double cond_cap = 1e3);

double operator_two_norm(const Mat& m);

// A v = λ B v with A Hermitian, B Hermitian positive definite, solved by the
// Cholesky reduction B = L Lᴴ, C = L⁻¹ A L⁻ᴴ. Eigenvalues ascending,
// eigenvector columns B-orthonormal.
struct GeneralizedEig {
  RVec lambdas;
  Mat vecs;
};
GeneralizedEig generalized_hermitian_eig(const Mat& A, const Mat& B);

}  // namespace mclab
