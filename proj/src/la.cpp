#include "mclab/la.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace mclab {

Mat random_matrix(int rows, int cols, Rng& rng, double scale) {
  Mat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = scale * rng.cnormal();
  return m;
}

Mat random_hermitian(int n, Rng& rng, double scale) {
  Mat m = random_matrix(n, n, rng, scale);
  return 0.5 * (m + m.adjoint());
}

Mat random_unitary(int n, Rng& rng) {
  Mat m = random_matrix(n, n, rng);
  Eigen::HouseholderQR<Mat> qr(m);
  Mat Q = qr.householderQ();
  // fix phases so the factorization is unique-ish
  Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    cx d = R(i, i);
    if (std::abs(d) > 0) Q.col(i) *= d / std::abs(d);
  }
  return Q;
}

Mat random_hpd(int n, Rng& rng, double cond_cap) {
  Mat U = random_unitary(n, rng);
  RVec ev(n);
  for (int i = 0; i < n; ++i) ev(i) = std::exp(rng.uniform(0.0, std::log(cond_cap)));
  ev /= ev.maxCoeff();  // eigenvalues in (1/cond_cap, 1]
  return U * ev.asDiagonal() * U.adjoint();
}

double operator_two_norm(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

GeneralizedEig generalized_hermitian_eig(const Mat& A, const Mat& B) {
  require(A.rows() == A.cols() && B.rows() == B.cols() && A.rows() == B.rows(),
          "generalized_hermitian_eig: dimension mismatch");
  require(is_hermitian(A, 1e-10), "generalized_hermitian_eig: A not Hermitian");
  Eigen::LLT<Mat> llt(B);
  require(llt.info() == Eigen::Success, "generalized_hermitian_eig: B not positive definite");
  Mat L = llt.matrixL();
  Mat C = L.triangularView<Eigen::Lower>().solve(A);
  C = L.triangularView<Eigen::Lower>().solve(C.adjoint()).adjoint();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (C + C.adjoint()));
  require(es.info() == Eigen::Success, "generalized_hermitian_eig: eigensolver failed");
  GeneralizedEig out;
  out.lambdas = es.eigenvalues();
  out.vecs = L.adjoint().triangularView<Eigen::Upper>().solve(es.eigenvectors());
  return out;
}

}  // namespace mclab
