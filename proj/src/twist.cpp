#include "mclab/twist.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

namespace mclab::twist {

using geom::MetricField;
using geom::WeightFunction;

Mat restricted_action(const Mat& R, const Mat& g, int p) {
  int d = int(R.rows());
  require(is_hermitian(R, 1e-9), "restricted_action: R not Hermitian");
  auto s = fiber::make_space(g);
  fiber::FiberOperator op(s, 0, 0);
  bool first = true;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (R(i, j) == cx(0)) continue;
      fiber::FiberOperator term = fiber::wedge_dz(s, i).compose(fiber::contract_dzbar(s, j)) * R(i, j);
      if (first) {
        op = term;
        first = false;
      } else {
        op = op + term;
      }
    }
  if (first) return Mat::Zero(s->dim(p, 0), s->dim(p, 0));
  const Mat* blk = op.block(p, 0);
  return blk ? *blk : Mat::Zero(s->dim(p, 0), s->dim(p, 0));
}

EigensectionField::EigensectionField(MatrixField field, std::vector<cx> z0, double gap_rtol)
    : field_(std::move(field)), z0_(std::move(z0)) {
  Mat A0 = field_(z0_);
  require(is_hermitian(A0, 1e-9), "EigensectionField: field not self-adjoint at base point");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A0 + A0.adjoint()));
  int m = int(A0.rows());
  scale_ = std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(m - 1)));
  gap_ = (m >= 2) ? es.eigenvalues()(m - 1) - es.eigenvalues()(m - 2)
                  : std::numeric_limits<double>::infinity();
  if (!(gap_ > gap_rtol * std::max(1.0, scale_)))
    throw McLabError("EigensectionField: top eigenvalue not simple at the base point (gap collapse)");
  frame_ = Mat(m, m);
  frame_.col(0) = es.eigenvectors().col(m - 1);
  for (int i = 1; i < m; ++i) frame_.col(i) = es.eigenvectors().col(m - 1 - i);
}

namespace {

// One Schur-complement solve pass at a fixed evaluation point: iterate
// λ ← a_1^1 + a_1^2 (λ − a_2^2)^{-1} a_2^1 from the warm start. Returns the
// converged (λ, v) or throws on a singular shift.
std::pair<double, Vec> schur_fixpoint(const Mat& A, double lambda0, double scale) {
  int m = int(A.rows());
  Mat A22 = A.bottomRightCorner(m - 1, m - 1);
  Vec a21 = A.col(0).tail(m - 1);
  Vec a12 = A.row(0).tail(m - 1).transpose();
  double lambda = lambda0;
  Vec v = Vec::Zero(m - 1);
  double prev_change = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 80; ++it) {
    Mat shifted = lambda * Mat::Identity(m - 1, m - 1) - A22;
    Eigen::PartialPivLU<Mat> lu(shifted);
    Vec vn = lu.solve(a21);
    double rel = (shifted * vn - a21).norm() / std::max(1e-300, a21.norm());
    if (!std::isfinite(vn.norm()) || (a21.norm() > 1e-13 && rel > 1e-8))
      throw McLabError("EigensectionField: block solve singular (gap collapse along evaluation)");
    double ln = (A(0, 0) + (a12.transpose() * vn)(0, 0)).real();
    double change = std::abs(ln - lambda);
    lambda = ln;
    v = vn;
    if (change <= 1e-14 * std::max(1.0, scale)) break;
    if (change >= prev_change && change <= 1e-10 * std::max(1.0, scale)) break;
    prev_change = change;
  }
  // top-branch guard: Cauchy interlacing forces λ1(z) > max spec(a_2^2)
  Eigen::SelfAdjointEigenSolver<Mat> sub(A22);
  if (!(lambda > sub.eigenvalues()(m - 2) - 1e-12 * std::max(1.0, scale)))
    throw McLabError("EigensectionField: iteration left the top branch");
  return {lambda, v};
}

}  // namespace

EigensectionField::Section EigensectionField::section(const std::vector<cx>& z) const {
  Mat Az = frame_.adjoint() * field_(z) * frame_;
  int m = int(Az.rows());
  Section out;
  if (m == 1) {
    out.psi = frame_.col(0);
    out.lambda1 = Az(0, 0).real();
    out.residual = 0.0;
    return out;
  }
  // continuation from the base point: direct solve first, then finer paths
  double lambda = 0.0;
  Vec v;
  bool done = false;
  std::string last_err;
  for (int steps : {1, 4, 16, 64}) {
    try {
      double lam = (frame_.adjoint() * field_(z0_) * frame_)(0, 0).real();
      Vec vv;
      for (int s = 1; s <= steps; ++s) {
        double t = double(s) / steps;
        std::vector<cx> zt(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) zt[i] = z0_[i] * (1.0 - t) + z[i] * t;
        Mat At = frame_.adjoint() * field_(zt) * frame_;
        auto [lam2, v2] = schur_fixpoint(At, lam, scale_);
        lam = lam2;
        vv = v2;
      }
      lambda = lam;
      v = vv;
      done = true;
      break;
    } catch (const McLabError& e) {
      last_err = e.what();
    }
  }
  if (!done) throw McLabError(last_err.empty() ? "EigensectionField: continuation failed" : last_err);
  Vec psi_t(m);
  psi_t(0) = cx(1);
  psi_t.tail(m - 1) = v;
  out.psi = frame_ * psi_t;
  out.lambda1 = lambda;
  Vec resid = field_(z) * out.psi - cx(lambda) * out.psi;
  out.residual = resid.norm() / std::max(1e-300, operator_two_norm(field_(z)) * out.psi.norm());
  if (out.residual > 1e-9)
    throw McLabError("EigensectionField: section residual exceeds 1e-9 (gap too small on the path)");
  return out;
}

Mat EigensectionField::projector(const std::vector<cx>& z) const {
  Section s = section(z);
  return s.psi * s.psi.adjoint() / s.psi.squaredNorm();
}

namespace {

// central differences of the projector field in the 2d real directions;
// returns D[k] = ∂P/∂t_k for t = (x1,y1,...)
std::vector<Mat> projector_real_derivs(const EigensectionField& f, const std::vector<cx>& z, double h) {
  int d = int(z.size());
  std::vector<Mat> out(2 * d);
  for (int a = 0; a < 2 * d; ++a) {
    auto shift = [&](double t) {
      std::vector<cx> w = z;
      if (a % 2 == 0)
        w[a / 2] += t;
      else
        w[a / 2] += cx(0, t);
      return f.projector(w);
    };
    out[a] = (shift(h) - shift(-h)) / (2.0 * h);
  }
  return out;
}

cx hs_inner(const Mat& A, const Mat& B) { return (A * B.adjoint()).trace(); }

}  // namespace

PsiProperties psi_properties(const EigensectionField& field, const std::vector<cx>& z, double h,
                             const Mat& curvature_sample) {
  int d = int(z.size());
  Mat P = field.projector(z);
  auto derivs = [&](double step) {
    std::vector<Mat> re = projector_real_derivs(field, z, step);
    std::vector<Mat> dz(d), dzb(d);
    for (int i = 0; i < d; ++i) {
      dz[i] = 0.5 * (re[2 * i] - cx(0, 1) * re[2 * i + 1]);
      dzb[i] = 0.5 * (re[2 * i] + cx(0, 1) * re[2 * i + 1]);
    }
    return std::make_pair(dz, dzb);
  };
  auto [dza, dzba] = derivs(h);
  auto [dzb2, dzbb2] = derivs(0.5 * h);
  // Richardson on each matrix
  std::vector<Mat> dz(d), dzb(d);
  for (int i = 0; i < d; ++i) {
    dz[i] = (4.0 * dzb2[i] - dza[i]) / 3.0;
    dzb[i] = (4.0 * dzbb2[i] - dzba[i]) / 3.0;
  }
  PsiProperties out{0.0, 0.0, 0.0};
  for (int i = 0; i < d; ++i) {
    out.a_defect = std::max(out.a_defect, std::abs(hs_inner(dz[i], P)));
    out.a_defect = std::max(out.a_defect, std::abs(hs_inner(dzb[i], P)));
  }
  Mat comm = curvature_sample * P - P * curvature_sample;
  out.b_defect = std::abs(hs_inner(comm, P));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      cx lhs = hs_inner(dz[i], dz[j]);
      cx rhs = hs_inner(dzb[j], dzb[i]);
      out.c_defect = std::max(out.c_defect, std::abs(lhs - rhs));
    }
  return out;
}

namespace {

struct FrameData {
  RVec lambdas;
  std::vector<Mat> B;  // ∂̄ components of the type change in the eigenframe
  double gap_p;
  Mat Rtype;
};

FrameData frame_data(const WeightFunction& w, const MetricField& m, int p, const std::vector<cx>& z) {
  require(m.constant_metric(), "error term: constant ambient metrics only");
  geom::CurvatureDbar cd = geom::curvature_dbar(w, m, z);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (cd.Rtype + cd.Rtype.adjoint()));
  int d = int(cd.Rtype.rows());
  FrameData fd;
  fd.lambdas.resize(d);
  Mat W(d, d);
  for (int i = 0; i < d; ++i) {
    fd.lambdas(i) = es.eigenvalues()(d - 1 - i);
    W.col(i) = es.eigenvectors().col(d - 1 - i);
  }
  double scale = std::max(std::abs(fd.lambdas(0)), std::abs(fd.lambdas(d - 1)));
  fd.gap_p = (p >= 1 && p < d) ? fd.lambdas(p - 1) - fd.lambdas(p) : std::numeric_limits<double>::infinity();
  if (p >= 1 && p < d)
    require(fd.gap_p > 1e-6 * std::max(1.0, scale), "error term: degenerate gap at this point");
  fd.B.resize(d);
  for (int k = 0; k < d; ++k) fd.B[k] = W.adjoint() * cd.dbar[k] * W;
  fd.Rtype = cd.Rtype;
  return fd;
}

}  // namespace

double error_term_formula(const WeightFunction& w, const MetricField& m, int p, const std::vector<cx>& z) {
  int d = w.dim();
  require(p >= 0 && p <= d, "error_term_formula: p out of range");
  if (w.is_product()) return 0.0;  // coordinate twist section is constant
  FrameData fd = frame_data(w, m, p, z);
  double acc = 0.0;
  for (int i = 0; i < p; ++i)
    for (int j = p; j < d; ++j) {
      double gap2 = std::pow(fd.lambdas(i) - fd.lambdas(j), 2);
      double num = 0.0;
      for (int k = 0; k < d; ++k) num += std::norm(fd.B[k](i, j)) + std::norm(fd.B[k](j, i));
      acc += num / gap2;
    }
  return acc;
}

EigensectionField twist_field(const WeightFunction& w, const MetricField& m, int p,
                              const std::vector<cx>& z0) {
  require(m.constant_metric(), "twist_field: constant ambient metrics only");
  Mat g = m.g(z0);
  int d = int(g.rows());
  auto space = fiber::make_space(g);
  // cache the (p,0) blocks of 𝓔_{dz^i}𝓘_{dz̄^j}, already conjugated into the
  // orthonormal fiber frame; the field is then a pointwise linear combination
  const Mat& phi = space->transport(p, 0);
  const Mat& phi_inv = space->transport_inv(p, 0);
  int n = space->dim(p, 0);
  auto blocks = std::make_shared<std::vector<Mat>>(d * d, Mat::Zero(n, n));
  for (int i = 0; i < d; ++i) {
    fiber::FiberOperator Ei = fiber::wedge_dz(space, i);
    for (int j = 0; j < d; ++j) {
      fiber::FiberOperator prod = Ei.compose(fiber::contract_dzbar(space, j));
      const Mat* blk = prod.block(p, 0);
      if (blk && blk->size() > 0) (*blocks)[i * d + j] = phi * (*blk) * phi_inv;
    }
  }
  auto field = [w, blocks, d, n, p](const std::vector<cx>& z) {
    Mat R = geom::curvature(w, z).R;
    Mat A = Mat::Zero(n, n);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (R(i, j) != cx(0)) A += R(i, j) * (*blocks)[i * d + j];
    return A;
  };
  return EigensectionField(field, z0);
}

DirectErrorTerm error_term_direct(const WeightFunction& w, const MetricField& m, int p,
                                  const std::vector<cx>& z, double h) {
  int d = w.dim();
  require(p >= 0 && p <= d, "error_term_direct: p out of range");
  if (p == 0 || p == d) return {0.0, 0.0};  // the twist line is trivial at the ends
  EigensectionField field = twist_field(w, m, p, z);
  auto value_at = [&](double step) {
    std::vector<Mat> re = projector_real_derivs(field, z, step);
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      Mat dzb = 0.5 * (re[2 * i] + cx(0, 1) * re[2 * i + 1]);
      acc += dzb.squaredNorm();
    }
    return acc;
  };
  double v1 = value_at(h), v2 = value_at(0.5 * h);
  DirectErrorTerm out;
  out.value = (4.0 * v2 - v1) / 3.0;
  out.budget = std::abs(v2 - v1) / 3.0 + 1e-10 * std::max(1.0, v2);
  return out;
}

ErrorBounds error_bounds(const WeightFunction& w, const MetricField& m, int p, const std::vector<cx>& z) {
  int d = w.dim();
  FrameData fd = frame_data(w, m, p, z);
  double norm2 = 0.0;
  for (int k = 0; k < d; ++k) norm2 += fd.B[k].squaredNorm();
  double gap2 = fd.gap_p * fd.gap_p;
  ErrorBounds out;
  out.gap = fd.gap_p;
  out.main = norm2 / gap2;
  double dtr2 = 0.0;
  for (int k = 0; k < d; ++k) dtr2 += std::norm(fd.B[k].trace());
  out.trace_improved = (norm2 - dtr2 / d) / gap2;
  double rnorm = fd.Rtype.norm();
  if (rnorm > 1e-6 * std::max(1.0, fd.lambdas.cwiseAbs().maxCoeff())) {
    double dabs2 = 0.0;
    for (int k = 0; k < d; ++k) {
      cx s(0);
      for (int i = 0; i < d; ++i) s += fd.lambdas(i) * fd.B[k](i, i);
      dabs2 += std::norm(s);
    }
    out.normR_improved = (norm2 - dabs2 / (rnorm * rnorm)) / gap2;
  }
  return out;
}

ErrorTermReport error_report(const WeightFunction& w, const MetricField& m, int p, const std::vector<cx>& z,
                             double h) {
  ErrorTermReport rep;
  rep.formula_value = error_term_formula(w, m, p, z);
  DirectErrorTerm de = error_term_direct(w, m, p, z, h);
  rep.direct_value = de.value;
  rep.direct_budget = de.budget;
  ErrorBounds b = error_bounds(w, m, p, z);
  rep.bound_main = b.main;
  rep.bound_trace = b.trace_improved;
  rep.bound_normR = b.normR_improved;
  rep.gap = b.gap;
  return rep;
}

}  // namespace mclab::twist
