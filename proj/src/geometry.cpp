#include "mclab/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace mclab::geom {

MetricField MetricField::flat(int d) { return constant(Mat::Identity(d, d)); }

MetricField MetricField::constant(const Mat& g0) {
  require(is_hermitian(g0, 1e-12), "MetricField::constant: not Hermitian");
  MetricField m;
  m.kind_ = MetricKind::Constant;
  m.d_ = int(g0.rows());
  m.kahler_ = true;
  m.g0_ = 0.5 * (g0 + g0.adjoint());
  return m;
}

MetricField MetricField::conformal(const WPoly& u) {
  require(u.is_real(1e-12), "MetricField::conformal: u must be real");
  MetricField m;
  m.kind_ = MetricKind::ConformalFlat;
  m.d_ = u.dim();
  m.kahler_ = false;  // u·I is not Kähler in general for d ≥ 2
  m.u_ = u;
  m.du_.resize(m.d_);
  for (int k = 0; k < m.d_; ++k) m.du_[k] = u.dz(k);
  return m;
}

MetricField MetricField::kahler_potential(const WPoly& psi) {
  require(psi.is_real(1e-12), "MetricField::kahler_potential: psi must be real");
  MetricField m;
  m.kind_ = MetricKind::KahlerPotential;
  m.d_ = psi.dim();
  m.kahler_ = true;
  int d = m.d_;
  m.hess_.resize(d * d);
  m.dhess_.resize(d * d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      m.hess_[i * d + j] = psi.dz(i).dzbar(j);
      for (int k = 0; k < d; ++k) m.dhess_[(k * d + i) * d + j] = m.hess_[i * d + j].dz(k);
    }
  return m;
}

Mat MetricField::g(const std::vector<cx>& z) const {
  switch (kind_) {
    case MetricKind::Constant:
      return g0_;
    case MetricKind::ConformalFlat: {
      double u = u_.eval(z).real();
      require(u > 0, "MetricField: conformal factor must stay positive");
      return u * Mat::Identity(d_, d_);
    }
    case MetricKind::KahlerPotential: {
      Mat g(d_, d_);
      for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) g(i, j) = hess_[i * d_ + j].eval(z);
      return 0.5 * (g + Mat(g.adjoint()));
    }
  }
  return Mat();
}

std::vector<Mat> MetricField::dg(const std::vector<cx>& z) const {
  std::vector<Mat> out(d_, Mat::Zero(d_, d_));
  switch (kind_) {
    case MetricKind::Constant:
      break;
    case MetricKind::ConformalFlat:
      for (int k = 0; k < d_; ++k) out[k] = du_[k].eval(z) * Mat::Identity(d_, d_);
      break;
    case MetricKind::KahlerPotential:
      for (int k = 0; k < d_; ++k)
        for (int i = 0; i < d_; ++i)
          for (int j = 0; j < d_; ++j) out[k](i, j) = dhess_[(k * d_ + i) * d_ + j].eval(z);
      break;
  }
  return out;
}

CurvatureResult curvature(const WeightFunction& w, const std::vector<cx>& z) {
  Mat h = w.hessian(z);
  CurvatureResult res;
  res.herm_defect = (h - Mat(h.adjoint())).norm();
  res.fd_error = w.fd_error_estimate(z);
  require(res.herm_defect <= 1e-6 * std::max(1.0, h.norm()),
          "curvature: Hermitian defect exceeds 1e-6; derivatives unreliable");
  res.R = 0.5 * (h + Mat(h.adjoint()));
  return res;
}

CurvatureSpectrum spectrum(const Mat& R, const Mat& g) {
  GeneralizedEig ge = generalized_hermitian_eig(R, g);  // ascending
  int d = int(R.rows());
  CurvatureSpectrum s;
  s.lambdas.resize(d);
  s.frame.resize(d, d);
  for (int i = 0; i < d; ++i) {
    s.lambdas(i) = ge.lambdas(d - 1 - i);
    s.frame.col(i) = ge.vecs.col(d - 1 - i);
  }
  double scale = std::max(1.0, s.spectral_radius());
  for (int p = 1; p < d; ++p)
    if (s.lambdas(p - 1) - s.lambdas(p) < 1e-9 * scale) s.degenerate = true;
  return s;
}

double CurvatureSpectrum::gap(int p) const {
  int d = int(lambdas.size());
  if (p <= 0 || p >= d) return std::numeric_limits<double>::infinity();
  return lambdas(p - 1) - lambdas(p);
}

double lambda_pq(const CurvatureSpectrum& spec, int p, int q) {
  int d = int(spec.lambdas.size());
  require(p >= 0 && p <= d && q >= 0 && q <= d, "lambda_pq: indices out of range");
  double s = 0.0;
  for (int i = 0; i < p; ++i) s += spec.lambdas(i);
  for (int j = 0; j < d - q; ++j) s -= spec.lambdas(j);
  return s;
}

CurvatureDbar curvature_dbar(const WeightFunction& w, const MetricField& m, const std::vector<cx>& z) {
  int d = w.dim();
  require(m.dim() == d, "curvature_dbar: dimension mismatch");
  Mat M = w.hessian(z);
  M = 0.5 * (M + Mat(M.adjoint()));
  std::vector<Mat> T3 = w.third(z);  // [k](i,j) = ∂_k̄ M_{ij̄}
  Mat g = m.g(z);
  Mat ginv = g.inverse();
  std::vector<Mat> dgk = m.dg(z);

  // type change table N(i,j) = R_i^j = Σ_s M(i,s) g^{js̄} with g^{js̄} = ginv(s,j)
  Mat N = M * ginv;
  // ∂_k̄ N = (∂_k̄ M) ginv − M ginv (∂_k̄ g) ginv, with ∂_k̄ g(i,j) = conj(∂_k g(j,i))
  std::vector<Mat> dN(d);
  for (int k = 0; k < d; ++k) {
    Mat dgbar(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) dgbar(i, j) = std::conj(dgk[k](j, i));
    dN[k] = T3[k] * ginv - N * dgbar * ginv;
  }

  // transport: lower/upper indices via L, anti-holomorphic index via conj(S)
  Eigen::LLT<Mat> llt(g);
  require(llt.info() == Eigen::Success, "curvature_dbar: metric not positive definite");
  Mat L = llt.matrixL();
  Mat Linv = L.inverse();
  Mat S = Linv.transpose();  // dz^i = Σ_a S(i,a) w^a
  CurvatureDbar out;
  out.Rtype = Linv * N * L;
  out.dbar.assign(d, Mat::Zero(d, d));
  for (int b = 0; b < d; ++b)
    for (int k = 0; k < d; ++k) out.dbar[b] += std::conj(S(k, b)) * (Linv * dN[k] * L);
  double acc = 0.0;
  for (int b = 0; b < d; ++b) acc += out.dbar[b].squaredNorm();
  out.norm2 = acc;
  out.fd_error = w.fd_error_estimate(z);
  return out;
}

double dbar_R_norm2(const WeightFunction& w, const MetricField& m, const std::vector<cx>& z) {
  return curvature_dbar(w, m, z).norm2;
}

fiber::TorsionTensor torsion_tensor(const MetricField& m, const std::vector<cx>& z) {
  int d = m.dim();
  std::vector<Mat> dgk = m.dg(z);
  fiber::TorsionTensor T = fiber::TorsionTensor::zero(d);
  for (int i = 0; i < d; ++i)
    for (int p = i + 1; p < d; ++p)
      for (int q = 0; q < d; ++q) T.set(i, p, q, dgk[i](p, q) - dgk[p](i, q));
  return T;
}

double dtheta_norm2(const MetricField& m, const std::vector<cx>& z) {
  auto space = fiber::make_space(m.g(z));
  return fiber::dtheta_norm2(space, torsion_tensor(m, z));
}

std::pair<double, double> two_dim_spectrum_closed_form(const Mat& R2, double u) {
  require(R2.rows() == 2 && R2.cols() == 2, "two_dim_spectrum_closed_form: need 2x2");
  require(is_hermitian(R2, 1e-9), "two_dim_spectrum_closed_form: R not Hermitian");
  Mat M = u * R2;  // type change against g = u⁻¹·I
  double tr = M.trace().real();
  double det = (M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0)).real();
  double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
  return {0.5 * (tr + disc), 0.5 * (tr - disc)};
}

namespace {

// signature of a Hermitian matrix with a safety margin against near-zero
// eigenvalues; returns {plus, minus} or nullopt when some |λ| is tiny
std::optional<std::pair<int, int>> safe_signature(const Mat& h, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
  int plus = 0, minus = 0;
  for (int i = 0; i < h.rows(); ++i) {
    double v = es.eigenvalues()(i);
    if (std::abs(v) < floor) return std::nullopt;
    (v > 0 ? plus : minus)++;
  }
  return std::make_pair(plus, minus);
}

}  // namespace

CutoffResult cutoff_extension(const WeightFunction& w, double eps_start, int max_halvings, int grid_per_axis) {
  int d = w.dim();
  std::vector<cx> zero(d, cx(0));
  require(std::abs(w.phi(zero)) <= 1e-10, "cutoff_extension: weight not normalized (φ(0) ≠ 0)");
  require(w.grad(zero).norm() <= 1e-10, "cutoff_extension: weight not normalized (dφ(0) ≠ 0)");
  require(w.hessian_holo(zero).norm() <= 1e-10,
          "cutoff_extension: weight not normalized ((2,0) Hessian ≠ 0)");

  Mat R0 = curvature(w, zero).R;
  auto sig0 = safe_signature(R0, 1e-9 * std::max(1.0, R0.norm()));
  require(sig0.has_value(), "cutoff_extension: curvature at the base point is degenerate");

  // split φ = φ0 + R3 with φ0 the (1,1)-quadratic part
  const WPoly& phi = w.poly();
  WPoly phi0(d), r3(d);
  for (const auto& [e, c] : phi.terms()) {
    int ztot = 0, btot = 0;
    for (int i = 0; i < d; ++i) {
      ztot += e[i];
      btot += e[d + i];
    }
    if (ztot == 1 && btot == 1)
      phi0.add_term(e, c);
    else
      r3.add_term(e, c);
  }

  double eps = eps_start;
  for (int attempt = 0; attempt <= max_halvings; ++attempt, eps *= 0.5) {
    RadialCutoff zeta{3.0 * eps, 4.0 * eps};
    WeightFunction cand = WeightFunction::cutoff_composite(phi0, r3, zeta, w.domain());
    // grid over the ball of radius 4.5ε (outside, φ̃ = φ0 exactly)
    bool ok = true;
    double max_pert = 0.0;
    int checked = 0;
    std::vector<int> idx(2 * d, 0);
    std::vector<cx> z(d);
    double lo = -4.5 * eps, step = 9.0 * eps / (grid_per_axis - 1);
    long total = 1;
    for (int a = 0; a < 2 * d; ++a) total *= grid_per_axis;
    for (long t = 0; t < total && ok; ++t) {
      long rem = t;
      for (int a = 0; a < 2 * d; ++a) {
        idx[a] = int(rem % grid_per_axis);
        rem /= grid_per_axis;
      }
      for (int i = 0; i < d; ++i) z[i] = cx(lo + step * idx[2 * i], lo + step * idx[2 * i + 1]);
      Mat h = cand.hessian(z);
      Mat h0(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) h0(i, j) = phi0.dz(i).dzbar(j).eval(z);
      max_pert = std::max(max_pert, operator_two_norm(h - h0));
      auto sig = safe_signature(h, 1e-7 * std::max(1.0, R0.norm()));
      if (!sig.has_value() || *sig != *sig0) ok = false;
      ++checked;
    }
    if (ok) return CutoffResult{cand, eps, checked, max_pert};
  }
  throw McLabError("cutoff_extension: no ε in the search range kept the signature constant");
}

std::vector<ScanRow> grid_scan(const WeightFunction& w, const MetricField& m, const quad::Box& box,
                               int per_axis, int p_for_gap) {
  int d = w.dim();
  require(box.dim() == 2 * d, "grid_scan: box dimension");
  long total = 1;
  for (int a = 0; a < 2 * d; ++a) total *= per_axis;
  std::vector<ScanRow> rows(total);
  parallel_for(std::size_t(total), [&](std::size_t t) {
    long rem = long(t);
    std::vector<cx> z(d);
    std::vector<double> val(2 * d);
    for (int a = 0; a < 2 * d; ++a) {
      int i = int(rem % per_axis);
      rem /= per_axis;
      auto [lo, hi] = box.axes[a];
      val[a] = (per_axis == 1) ? 0.5 * (lo + hi) : lo + (hi - lo) * i / double(per_axis - 1);
    }
    for (int i = 0; i < d; ++i) z[i] = cx(val[2 * i], val[2 * i + 1]);
    ScanRow row;
    row.z = z;
    Mat g = m.g(z);
    CurvatureSpectrum sp = spectrum(curvature(w, z).R, g);
    row.lambdas = sp.lambdas;
    row.gap = sp.gap(p_for_gap);
    row.dbar_R2 = dbar_R_norm2(w, m, z);
    row.dtheta2 = dtheta_norm2(m, z);
    rows[t] = std::move(row);
  });
  return rows;
}

}  // namespace mclab::geom
