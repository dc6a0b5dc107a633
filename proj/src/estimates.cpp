#include "mclab/estimates.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace mclab::est {

using fiber::FiberForm;
using fiber::FiberOperator;
using geom::MetricField;
using geom::WeightFunction;

EstimateContext::EstimateContext(WeightFunction weight, MetricField metric, std::optional<WPoly> e_weight)
    : weight_(std::move(weight)), metric_(std::move(metric)), e_weight_(std::move(e_weight)) {
  d_ = weight_.dim();
  require(metric_.dim() == d_, "EstimateContext: dimension mismatch");
  if (e_weight_) {
    require(e_weight_->dim() == d_ && e_weight_->is_real(1e-12), "EstimateContext: E-weight must be real");
    e_grad_.resize(d_);
    e_hess_.resize(d_ * d_);
    for (int i = 0; i < d_; ++i) {
      e_grad_[i] = e_weight_->dz(i);
      for (int j = 0; j < d_; ++j) e_hess_[i * d_ + j] = e_grad_[i].dzbar(j);
    }
  }
  if (metric_.constant_metric()) {
    cached_space_ = fiber::make_space(metric_.g(std::vector<cx>(d_, cx(0))));
    cached_pf_ = point_fiber_impl(metric_.g(std::vector<cx>(d_, cx(0))));
  }
}

EstimateContext::PointFiber EstimateContext::point_fiber_impl(const Mat& g) {
  int d = int(g.rows());
  PointFiber pf;
  pf.gup = g.inverse().transpose();
  pf.det_g = g.determinant().real();
  Eigen::LLT<Mat> llt(g);
  require(llt.info() == Eigen::Success, "point_fiber: metric not positive definite");
  Mat L = llt.matrixL();
  Mat S = Mat(L.inverse()).transpose();  // dz^i = Σ_a S(i,a) w^a
  pf.phi.resize(d + 1);
  for (int q = 0; q <= d; ++q) {
    const auto& sub = fiber::subsets(d, q);
    int n = int(sub.size());
    Mat phi(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Mat m(q, q);
        for (int r = 0; r < q; ++r)
          for (int c = 0; c < q; ++c) m(r, c) = S(sub[b][r], sub[a][c]);
        phi(a, b) = (q == 0) ? cx(1) : std::conj(m.determinant());
      }
    pf.phi[q] = phi;
  }
  return pf;
}

EstimateContext::PointFiber EstimateContext::point_fiber(const std::vector<cx>& z) const {
  if (cached_pf_) return *cached_pf_;
  return point_fiber_impl(metric_.g(z));
}

cx EstimateContext::inner_0q(const PointFiber& pf, int q, const Vec& a, const Vec& b) const {
  Vec ta = pf.phi[q] * a;
  Vec tb = pf.phi[q] * b;
  return (tb.adjoint() * ta)(0, 0);
}

fiber::SpacePtr EstimateContext::space_at(const std::vector<cx>& z) const {
  if (cached_space_) return cached_space_;
  return fiber::make_space(metric_.g(z));
}

namespace {

// Direct combinatorial actions on (0,q) coefficient vectors. These realize
// the same operators as the fiber module (𝓘_{dz^i} dz̄^J = g^{ij̄} δ dz̄^L,
// 𝓔_{dz̄^j} insertion) without building graded operator matrices per node.
Vec wedge_dzbar_0q(int j, int d, int q, const Vec& v) {
  const auto& src = fiber::subsets(d, q);
  const auto& tgt = fiber::subsets(d, q + 1);
  Vec out = Vec::Zero(long(tgt.size()));
  fiber::MultiIndex merged;
  for (std::size_t J = 0; J < src.size(); ++J) {
    if (v(long(J)) == cx(0)) continue;
    int sg = fiber::insertion_sign(src[J], j, &merged);
    if (sg == 0) continue;
    out(fiber::subset_rank(d, merged)) += double(sg) * v(long(J));
  }
  return out;
}

Vec contract_dz_0q(const Mat& gup, int i, int d, int q, const Vec& v) {
  // 𝓘_{dz^i} dz̄^J = Σ_{j∈J} g^{ij̄} (removal sign) dz̄^{J∖j}
  const auto& src = fiber::subsets(d, q);
  int nt = int(fiber::binom(d, q - 1));
  Vec out = Vec::Zero(nt);
  for (std::size_t J = 0; J < src.size(); ++J) {
    if (v(long(J)) == cx(0)) continue;
    for (std::size_t pos = 0; pos < src[J].size(); ++pos) {
      int j = src[J][pos];
      fiber::MultiIndex rest;
      for (std::size_t u = 0; u < src[J].size(); ++u)
        if (u != pos) rest.push_back(src[J][u]);
      double sg = (pos % 2 == 0) ? 1.0 : -1.0;
      out(fiber::subset_rank(d, rest)) += sg * gup(i, j) * v(long(J));
    }
  }
  return out;
}

}  // namespace

Vec EstimateContext::value_vec(const TestForm& s, const std::vector<cx>& z) const {
  int nq = int(fiber::binom(d_, s.degree()));
  Vec v(nq);
  for (int slot = 0; slot < nq; ++slot) v(slot) = s.coeff(slot, z);
  return v;
}

Vec EstimateContext::dbar_vec(const TestForm& s, const std::vector<cx>& z) const {
  int q = s.degree();
  int nq = int(fiber::binom(d_, q));
  Vec out = Vec::Zero(long(fiber::binom(d_, q + 1)));
  if (q + 1 > d_) return out;
  Vec v(nq);
  for (int j = 0; j < d_; ++j) {
    for (int slot = 0; slot < nq; ++slot) v(slot) = s.coeff_dzbar(j, slot, z);
    out += wedge_dzbar_0q(j, d_, q, v);
  }
  return out;
}

Vec EstimateContext::dbar_star_vec(const TestForm& s, const std::vector<cx>& z, int k,
                                   const PointFiber& pf) const {
  int q = s.degree();
  int nq = int(fiber::binom(d_, q));
  Vec out = Vec::Zero(long(fiber::binom(d_, q - 1)));
  if (q == 0) return out;
  Vec phi_d = weight_.grad(z);
  // ∇̃_i s with the L^k and E connection terms; the induced connection on
  // Λ^{0,q} has no (1,0) part on the coefficient frame
  Vec v(nq);
  for (int i = 0; i < d_; ++i) {
    cx wi = double(k) * phi_d(i);
    if (e_weight_) wi += e_grad_[i].eval(z);
    for (int slot = 0; slot < nq; ++slot) v(slot) = s.coeff_dz(i, slot, z) - wi * s.coeff(slot, z);
    out -= contract_dz_0q(pf.gup, i, d_, q, v);
  }
  // torsion term −½ T_{ipq̄} 𝓘_{dz^i} 𝓘_{dz^p} 𝓔_{dz̄^q}
  if (!metric_.kahler() || !metric_.constant_metric()) {
    fiber::TorsionTensor T = geom::torsion_tensor(metric_, z);
    if (T.max_abs() > 0) {
      Vec sv = value_vec(s, z);
      for (int i = 0; i < d_; ++i)
        for (int p = 0; p < d_; ++p)
          for (int qq = 0; qq < d_; ++qq) {
            cx c = T.at(i, p, qq);
            if (c == cx(0)) continue;
            Vec t1 = wedge_dzbar_0q(qq, d_, q, sv);
            Vec t2 = contract_dz_0q(pf.gup, p, d_, q + 1, t1);
            Vec t3 = contract_dz_0q(pf.gup, i, d_, q, t2);
            out -= (0.5 * c) * t3;
          }
    }
  }
  return out;
}

FiberForm EstimateContext::dbar_apply(const TestForm& s, const std::vector<cx>& z) const {
  FiberForm out = FiberForm::zero(space_at(z), 0, s.degree() + 1);
  if (out.coeffs.size() > 0) out.coeffs = dbar_vec(s, z);
  return out;
}

FiberForm EstimateContext::dbar_star_apply(const TestForm& s, const std::vector<cx>& z, int k) const {
  FiberForm out = FiberForm::zero(space_at(z), 0, s.degree() - 1);
  if (out.coeffs.size() > 0) out.coeffs = dbar_star_vec(s, z, k, point_fiber(z));
  return out;
}

double EstimateContext::density(const std::vector<cx>& z, int k) const {
  double e = double(k) * weight_.phi(z) + e_weight_value(z);
  return std::exp(-e) * point_fiber(z).det_g;
}

double EstimateContext::e_weight_value(const std::vector<cx>& z) const {
  return e_weight_ ? e_weight_->eval(z).real() : 0.0;
}

double EstimateContext::lambdaE_p(int p, int q, const std::vector<cx>& z) const {
  if (!e_weight_) return 0.0;
  Mat Re(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) Re(i, j) = e_hess_[i * d_ + j].eval(z);
  Re = 0.5 * (Re + Mat(Re.adjoint()));
  fiber::SpacePtr sp = space_at(z);
  FiberOperator com = fiber::curvature_commutator(sp, Re);
  const Mat* blk = com.block(p, q);
  if (!blk || blk->size() == 0) return 0.0;
  // smallest eigenvalue in the g-inner product on the (p,q) block
  Mat on = sp->transport(p, q) * (*blk) * sp->transport_inv(p, q);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (on + on.adjoint()));
  return std::max(0.0, -es.eigenvalues()(0));
}

double EstimateContext::error_term(int p, const std::vector<cx>& z) const {
  if (weight_.is_product()) return 0.0;
  return twist::error_term_formula(weight_, metric_, p, z);
}

double EstimateContext::kf_pq(int p, int q, int k, const std::vector<cx>& z) const {
  Mat g = metric_.g(z);
  geom::CurvatureSpectrum spec = geom::spectrum(geom::curvature(weight_, z).R, g);
  double lpq = geom::lambda_pq(spec, p, q);
  double le = lambdaE_p(p, q, z);
  double err = error_term(p, z);
  if (metric_.kahler()) return double(k) * lpq - le - err;
  fiber::SpacePtr sp = space_at(z);
  double tb = fiber::torsion_norm_bound(sp, geom::torsion_tensor(metric_, z));
  return (2.0 / 3.0) * double(k) * lpq - (2.0 / 3.0) * le - tb - err;
}

EnergyResult dirac_energy(const EstimateContext& ctx, const TestForm& s, int k, const QuadraturePolicy& pol) {
  int d = ctx.dim();
  int q = s.degree();
  auto fn = [&](const double* x, double* out) {
    std::vector<cx> z(d);
    for (int i = 0; i < d; ++i) z[i] = cx(x[2 * i], x[2 * i + 1]);
    auto pf = ctx.point_fiber(z);
    double w = std::exp(-(double(k) * ctx.weight().phi(z) + ctx.e_weight_value(z))) * pf.det_g;
    Vec db = ctx.dbar_vec(s, z);
    Vec dbs = ctx.dbar_star_vec(s, z, k, pf);
    double nb = (q + 1 <= d) ? ctx.inner_0q(pf, q + 1, db, db).real() : 0.0;
    double nbs = (q >= 1) ? ctx.inner_0q(pf, q - 1, dbs, dbs).real() : 0.0;
    out[0] = (nb + nbs) * w;
  };
  auto breaks = s.axis_breaks();
  quad::LadderResult lr =
      quad::ladder_integrate(s.support(), pol.base_n, pol.max_doublings, pol.rtol, fn, 1, 0, &breaks);
  return EnergyResult{lr.values[0], lr.err_estimates[0], lr.converged};
}

EstimateReport bkn_verify(const EstimateContext& ctx, const TestForm& s, int p, int k,
                          const QuadraturePolicy& pol) {
  int d = ctx.dim();
  int q = s.degree();
  auto fn = [&](const double* x, double* out) {
    std::vector<cx> z(d);
    for (int i = 0; i < d; ++i) z[i] = cx(x[2 * i], x[2 * i + 1]);
    auto pf = ctx.point_fiber(z);
    double w = std::exp(-(double(k) * ctx.weight().phi(z) + ctx.e_weight_value(z))) * pf.det_g;
    Vec db = ctx.dbar_vec(s, z);
    Vec dbs = ctx.dbar_star_vec(s, z, k, pf);
    Vec sv = ctx.value_vec(s, z);
    double s2 = ctx.inner_0q(pf, q, sv, sv).real();
    Mat g = ctx.metric().g(z);
    geom::CurvatureSpectrum spec = geom::spectrum(geom::curvature(ctx.weight(), z).R, g);
    double kf = ctx.kf_pq(p, q, k, z);
    double nb = (q + 1 <= d) ? ctx.inner_0q(pf, q + 1, db, db).real() : 0.0;
    double nbs = (q >= 1) ? ctx.inner_0q(pf, q - 1, dbs, dbs).real() : 0.0;
    out[0] = (nb + nbs) * w;  // ½|D_k s|²
    out[1] = kf * s2 * w;
    out[2] = geom::lambda_pq(spec, p, q) * s2 * w;
    out[3] = s2 * w;
  };
  auto breaks = s.axis_breaks();
  quad::LadderResult lr =
      quad::ladder_integrate(s.support(), pol.base_n, pol.max_doublings, pol.rtol, fn, 4, 0, &breaks);
  EstimateReport rep;
  rep.lhs = lr.values[0];
  rep.rhs = lr.values[1];
  rep.margin = rep.lhs - rep.rhs;
  rep.error_budget = lr.err_estimates[0] + lr.err_estimates[1];
  rep.lambda_pq_mass = lr.values[2];
  rep.norm2 = lr.values[3];
  rep.quadrature_converged = lr.converged;
  return rep;
}

Partition::Partition(std::vector<quad::Box> cover, double transition_width) : cover_(std::move(cover)) {
  require(!cover_.empty(), "Partition: empty cover");
  d_ = cover_[0].dim() / 2;
  for (const auto& b : cover_) {
    require(b.dim() == 2 * d_, "Partition: inconsistent box dimensions");
    std::vector<AxisWindow> axes(2 * d_);
    for (int a = 0; a < 2 * d_; ++a) {
      auto [lo, hi] = b.axes[a];
      require(hi - lo > 3.0 * transition_width, "Partition: insufficient overlap for the transition width");
      axes[a] = AxisWindow{lo, hi, transition_width};
    }
    bumps_.emplace_back(std::move(axes));
  }
}

double Partition::bump_sum(const std::vector<cx>& z) const {
  double s = 0.0;
  for (const auto& b : bumps_) s += b.value(z);
  return s;
}

Vec Partition::bump_dbar(int alpha, const std::vector<cx>& z) const {
  Vec v(d_);
  for (int i = 0; i < d_; ++i) v(i) = bumps_[alpha].dzbar(i, z);
  return v;
}

double Partition::chi(int alpha, const std::vector<cx>& z) const {
  double s = bump_sum(z);
  if (s <= 0) return 0.0;
  return bumps_[alpha].value(z) / s;
}

Vec Partition::chi_dbar(int alpha, const std::vector<cx>& z) const {
  double s = bump_sum(z);
  Vec out = Vec::Zero(d_);
  if (s <= 0) return out;
  Vec num = bump_dbar(alpha, z);
  Vec dsum = Vec::Zero(d_);
  for (int b = 0; b < size(); ++b) dsum += bump_dbar(b, z);
  double val = bumps_[alpha].value(z);
  for (int i = 0; i < d_; ++i) out(i) = num(i) / s - val * dsum(i) / (s * s);
  return out;
}

double Partition::sum(const std::vector<cx>& z) const {
  double s = bump_sum(z);
  if (s <= 0) return 0.0;
  double acc = 0.0;
  for (int a = 0; a < size(); ++a) acc += bumps_[a].value(z) / s;
  return acc;
}

double Partition::g_cover(const std::vector<cx>& z) const {
  double acc = 0.0;
  for (int a = 0; a < size(); ++a) acc += chi_dbar(a, z).squaredNorm();
  return acc;
}

bool Partition::in_region(const std::vector<cx>& z) const { return bump_sum(z) > 0.0; }

double glue(const std::vector<std::function<double(const std::vector<cx>&)>>& local_fs,
            const Partition& partition, const std::vector<cx>& z) {
  require(int(local_fs.size()) == partition.size(), "glue: one local bound per chart");
  require(std::abs(partition.sum(z) - 1.0) <= 1e-8, "glue: partition defect exceeds 1e-8 at this point");
  double inv_sum = 0.0;
  for (int a = 0; a < partition.size(); ++a) {
    if (partition.chi(a, z) == 0.0) continue;
    double fa = local_fs[a](z);
    require(fa > 0.0, "glue: local bounds must be positive on active charts");
    inv_sum += 1.0 / fa;
  }
  require(inv_sum > 0.0, "glue: no active chart at this point");
  return 0.5 / inv_sum - partition.g_cover(z);
}

}  // namespace mclab::est
