#include "mclab/weights.hpp"

#include <cmath>

namespace mclab::geom {

double RadialProfile::value(double r) const {
  if (r >= support) return 0.0;
  if (r <= plateau) return amp;
  return amp * smoothstep((support - r) / (support - plateau));
}

double RadialProfile::d1(double r) const {
  if (r >= support || r <= plateau) return 0.0;
  return -amp * smoothstep_d1((support - r) / (support - plateau)) / (support - plateau);
}

double RadialProfile::enclosed(double s) const {
  double hi = std::min(s, support);
  if (hi <= 0) return 0.0;
  return quad::adaptive_simpson([&](double r) { return value(r) * r; }, 0.0, hi, 1e-13);
}

double RadialProfile::log_moment(double s) const {
  if (s >= support) return 0.0;
  double lo = std::max(s, 1e-300);
  return quad::adaptive_simpson([&](double r) { return value(r) * std::log(r) * r; }, lo, support, 1e-13);
}

void WeightFunction::PolyData::compile() {
  cphi = CompiledPoly(phi);
  auto comp = [](const std::vector<WPoly>& v) {
    std::vector<CompiledPoly> out;
    out.reserve(v.size());
    for (const auto& p : v) out.emplace_back(p);
    return out;
  };
  cgrad = comp(grad);
  chess = comp(hess);
  chess_holo = comp(hess_holo);
  cthird = comp(third);
}

namespace {

std::vector<WPoly> derive_grad(const WPoly& p) {
  int d = p.dim();
  std::vector<WPoly> g(d);
  for (int i = 0; i < d; ++i) g[i] = p.dz(i);
  return g;
}

}  // namespace

WeightFunction WeightFunction::from_poly(WPoly p, WeightFamily fam, bool product, quad::Box domain) {
  require(p.is_real(1e-12), "WeightFunction: potential must be real-valued");
  int d = p.dim();
  require(domain.dim() == 2 * d, "WeightFunction: domain box must have 2d real axes");
  WeightFunction w;
  w.family_ = fam;
  w.d_ = d;
  w.product_ = product;
  w.analytic_ = true;
  w.domain_ = std::move(domain);
  auto data = std::make_shared<PolyData>();
  data->phi = std::move(p);
  data->grad = derive_grad(data->phi);
  data->hess.resize(d * d);
  data->hess_holo.resize(d * d);
  data->third.resize(d * d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      data->hess[i * d + j] = data->grad[i].dzbar(j);
      data->hess_holo[i * d + j] = data->grad[i].dz(j);
      for (int k = 0; k < d; ++k) data->third[(k * d + i) * d + j] = data->hess[i * d + j].dzbar(k);
    }
  w.poly_ = std::move(data);
  return w;
}

const WPoly& WeightFunction::poly() const {
  require(poly_ != nullptr, "WeightFunction: no polynomial backing for this family");
  return poly_->phi;
}

double WeightFunction::phi(const std::vector<cx>& z) const {
  require(int(z.size()) == d_, "WeightFunction::phi: dimension");
  switch (family_) {
    case WeightFamily::Newtonian: {
      double s = 0.0;
      for (int i = 0; i < d_; ++i) {
        const RadialProfile& a = newton_->alphas[i];
        double r = std::abs(z[i]);
        // 4[log(s)·m(s) + ∫_s^R α log(r) r dr]; the log(s) m(s) term vanishes as s→0
        double v = 4.0 * a.log_moment(r);
        if (r > 1e-12) v += 4.0 * std::log(r) * a.enclosed(r);
        s += v;
      }
      return s;
    }
    case WeightFamily::Cutoff: {
      double rho = 0.0;
      for (const auto& c : z) rho += std::norm(c);
      rho = std::sqrt(rho);
      return cutoff_->phi0.phi.eval(z).real() + cutoff_->zeta.value(rho) * cutoff_->r3.phi.eval(z).real();
    }
    case WeightFamily::Custom:
      return custom_(z);
    default:
      return poly_->cphi.eval(z).real();
  }
}

namespace {

// 4th-order central difference along one real direction of a scalar function
template <typename F>
double fd4(const F& f, std::vector<cx>& z, int axis, double h) {
  auto shift = [&](double t) {
    cx save = z[axis / 2];
    if (axis % 2 == 0)
      z[axis / 2] = save + t;
    else
      z[axis / 2] = save + cx(0, t);
    double v = f(z);
    z[axis / 2] = save;
    return v;
  };
  return (-shift(2 * h) + 8 * shift(h) - 8 * shift(-h) + shift(-2 * h)) / (12 * h);
}

}  // namespace

Vec WeightFunction::grad(const std::vector<cx>& z) const {
  Vec g(d_);
  switch (family_) {
    case WeightFamily::Newtonian: {
      for (int i = 0; i < d_; ++i) {
        const RadialProfile& a = newton_->alphas[i];
        double r = std::abs(z[i]);
        g(i) = (r > 1e-12) ? cx(2.0 * a.enclosed(r) / (r * r)) * std::conj(z[i]) : cx(0);
      }
      return g;
    }
    case WeightFamily::Cutoff: {
      double rho2 = 0.0;
      for (const auto& c : z) rho2 += std::norm(c);
      double rho = std::sqrt(rho2);
      double zr = cutoff_->zeta.value(rho), zr1 = cutoff_->zeta.d1(rho);
      double r3 = cutoff_->r3.phi.eval(z).real();
      for (int i = 0; i < d_; ++i) {
        cx drho_i = (rho > 1e-14) ? std::conj(z[i]) / (2.0 * rho) : cx(0);
        g(i) = cutoff_->phi0.grad[i].eval(z) + zr1 * drho_i * r3 + zr * cutoff_->r3.grad[i].eval(z);
      }
      return g;
    }
    case WeightFamily::Custom: {
      std::vector<cx> zz = z;
      double h = std::pow(2.2e-16, 0.2) * fd_scale_;
      for (int i = 0; i < d_; ++i) {
        double dx = fd4(custom_, zz, 2 * i, h);
        double dy = fd4(custom_, zz, 2 * i + 1, h);
        g(i) = 0.5 * cx(dx, -dy);
      }
      return g;
    }
    default: {
      for (int i = 0; i < d_; ++i) g(i) = poly_->cgrad[i].eval(z);
      return g;
    }
  }
}

Mat WeightFunction::hessian(const std::vector<cx>& z) const {
  Mat h = Mat::Zero(d_, d_);
  switch (family_) {
    case WeightFamily::Newtonian: {
      for (int i = 0; i < d_; ++i) h(i, i) = newton_->alphas[i].value(std::abs(z[i]));
      return h;
    }
    case WeightFamily::Cutoff: {
      double rho2 = 0.0;
      for (const auto& c : z) rho2 += std::norm(c);
      double rho = std::sqrt(rho2);
      const auto& C = *cutoff_;
      double zv = C.zeta.value(rho), z1 = C.zeta.d1(rho), z2 = C.zeta.d2(rho);
      double r3 = C.r3.phi.eval(z).real();
      for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) {
          cx di = (rho > 1e-14) ? std::conj(z[i]) / (2.0 * rho) : cx(0);
          cx dj = (rho > 1e-14) ? z[j] / (2.0 * rho) : cx(0);
          cx ddij = (rho > 1e-14)
                        ? cx(i == j ? 1.0 : 0.0) / (2.0 * rho) - z[j] * std::conj(z[i]) / (4.0 * rho * rho * rho)
                        : cx(0);
          cx zeta_ij = z2 * di * dj + z1 * ddij;
          h(i, j) = C.phi0.hess[i * d_ + j].eval(z) + zeta_ij * r3 + z1 * di * std::conj(C.r3.grad[j].eval(z)) +
                    z1 * dj * C.r3.grad[i].eval(z) + zv * C.r3.hess[i * d_ + j].eval(z);
        }
      return h;
    }
    case WeightFamily::Custom: {
      std::vector<cx> zz = z;
      double h1 = std::pow(2.2e-16, 0.2) * fd_scale_;
      // complex mixed partials from the real Hessian
      auto d1 = [&](int axis, const std::vector<cx>& at) {
        std::vector<cx> w = at;
        return fd4(custom_, w, axis, h1);
      };
      for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) {
          auto fxx = [&](const std::vector<cx>& w) { return d1(2 * j, w); };
          auto fyy = [&](const std::vector<cx>& w) { return d1(2 * j + 1, w); };
          double xx = fd4(fxx, zz, 2 * i, h1), xy = fd4(fyy, zz, 2 * i, h1);
          double yx = fd4(fxx, zz, 2 * i + 1, h1), yy = fd4(fyy, zz, 2 * i + 1, h1);
          h(i, j) = 0.25 * cx(xx + yy, xy - yx);
        }
      return h;
    }
    default: {
      for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) h(i, j) = poly_->chess[i * d_ + j].eval(z);
      return h;
    }
  }
}

Mat WeightFunction::hessian_holo(const std::vector<cx>& z) const {
  require(poly_ != nullptr, "hessian_holo: polynomial families only");
  Mat h(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) h(i, j) = poly_->hess_holo[i * d_ + j].eval(z);
  return h;
}

std::vector<Mat> WeightFunction::third(const std::vector<cx>& z) const {
  std::vector<Mat> t(d_, Mat::Zero(d_, d_));
  switch (family_) {
    case WeightFamily::Newtonian: {
      for (int i = 0; i < d_; ++i) {
        double r = std::abs(z[i]);
        t[i](i, i) = (r > 1e-12) ? cx(newton_->alphas[i].d1(r) / (2.0 * r)) * z[i] : cx(0);
      }
      return t;
    }
    case WeightFamily::Cutoff:
    case WeightFamily::Custom: {
      // finite differences of the (analytic or fd) Hessian field
      double h1 = std::pow(2.2e-16, 1.0 / 7.0) * fd_scale_;
      std::vector<cx> zz = z;
      for (int k = 0; k < d_; ++k) {
        auto hx = [&](double t0, int axis) {
          std::vector<cx> w = zz;
          if (axis == 0)
            w[k] += t0;
          else
            w[k] += cx(0, t0);
          return hessian(w);
        };
        Mat dx = (hx(-2 * h1, 0) - 8 * hx(-h1, 0) + 8 * hx(h1, 0) - hx(2 * h1, 0)) / (12 * h1);
        Mat dy = (hx(-2 * h1, 1) - 8 * hx(-h1, 1) + 8 * hx(h1, 1) - hx(2 * h1, 1)) / (12 * h1);
        t[k] = 0.5 * (dx + cx(0, 1) * dy);
      }
      return t;
    }
    default: {
      for (int k = 0; k < d_; ++k)
        for (int i = 0; i < d_; ++i)
          for (int j = 0; j < d_; ++j) t[k](i, j) = poly_->cthird[(k * d_ + i) * d_ + j].eval(z);
      return t;
    }
  }
}

double WeightFunction::fd_error_estimate(const std::vector<cx>& z) const {
  if (analytic_) return 0.0;
  // Richardson check: compare 4th-order stencils at h and h/2 on the Hessian trace
  std::vector<cx> zz = z;
  double h1 = std::pow(2.2e-16, 0.2) * fd_scale_;
  auto lap = [&](double h) {
    double acc = 0.0;
    for (int i = 0; i < d_; ++i) {
      auto f1 = [&](const std::vector<cx>& w) {
        std::vector<cx> u = w;
        return fd4(custom_, u, 2 * i, h);
      };
      auto f2 = [&](const std::vector<cx>& w) {
        std::vector<cx> u = w;
        return fd4(custom_, u, 2 * i + 1, h);
      };
      acc += fd4(f1, zz, 2 * i, h) + fd4(f2, zz, 2 * i + 1, h);
    }
    return acc;
  };
  double a = lap(h1), b = lap(0.5 * h1);
  return std::abs(a - b) / 15.0 + 1e-12 * std::abs(b);
}

WeightFunction WeightFunction::rescaled(double c) const {
  switch (family_) {
    case WeightFamily::Newtonian: {
      auto alphas = newton_->alphas;
      for (auto& a : alphas) a.amp *= c;
      return newtonian(alphas, domain_);
    }
    case WeightFamily::Custom: {
      auto f = custom_;
      return custom([f, c](const std::vector<cx>& z) { return c * f(z); }, d_, domain_, fd_scale_);
    }
    case WeightFamily::Cutoff: {
      return cutoff_composite(cutoff_->phi0.phi * cx(c), cutoff_->r3.phi * cx(c), cutoff_->zeta, domain_);
    }
    default:
      return from_poly(poly_->phi * cx(c), family_, product_, domain_);
  }
}

WeightFunction WeightFunction::quadratic(const std::vector<double>& lam0, quad::Box domain) {
  int d = int(lam0.size());
  WPoly p(d);
  for (int i = 0; i < d; ++i) p += WPoly::var_z(d, i) * WPoly::var_zbar(d, i) * cx(lam0[i]);
  return from_poly(std::move(p), WeightFamily::QuadraticModel, true, std::move(domain));
}

WeightFunction WeightFunction::pullback(const WPoly& f1, const WPoly& f2, double a, double b, quad::Box domain) {
  // holomorphy: conjugate exponents must all vanish
  auto holo = [](const WPoly& f) {
    WPoly probe = f;
    int d = f.dim();
    for (int i = 0; i < d; ++i) {
      if (!f.dzbar(i).empty()) return false;
    }
    (void)probe;
    return true;
  };
  require(holo(f1) && holo(f2), "pullback: maps must be holomorphic polynomials");
  require(a >= 0 && b >= 0, "pullback: profile signs must be (≥0, ≤0)");
  WPoly p = norm_squared(f1) * cx(a) - norm_squared(f2) * cx(b);
  return from_poly(std::move(p), WeightFamily::Pullback, false, std::move(domain));
}

WeightFunction WeightFunction::key_example_general(const WPoly& p, quad::Box domain) {
  int d = 2;
  require(p.dim() == d, "key_example: p lives on C^2");
  WPoly f1 = WPoly::var_z(d, 0) + p;
  WPoly f2 = WPoly::var_z(d, 1) + p;
  WeightFunction w = pullback(f1, f2, 1.0, 1.0, std::move(domain));
  w.family_ = WeightFamily::KeyExample;
  return w;
}

WeightFunction WeightFunction::key_example(quad::Box domain) {
  WPoly w = WPoly::var_z(2, 0) - WPoly::var_z(2, 1);  // z1 − z2
  return key_example_general(w * w, std::move(domain));
}

WeightFunction WeightFunction::key_example_cubic(quad::Box domain) {
  // |z1|² − |z2|² plus the twelve cubic monomials, written out term by term
  int d = 2;
  WPoly z1 = WPoly::var_z(d, 0), z2 = WPoly::var_z(d, 1);
  WPoly b1 = WPoly::var_zbar(d, 0), b2 = WPoly::var_zbar(d, 1);
  WPoly p = z1 * b1 - z2 * b2;
  p += z1 * z1 * b1 + z1 * b1 * b1 - z2 * z2 * b2 - z2 * b2 * b2;
  p += z1 * b2 * b2 + b1 * z2 * z2 - z1 * z1 * b2 - b1 * b1 * z2;
  p += (z1 * b1 * z2) * cx(-2) + (z1 * b1 * b2) * cx(-2) + (z1 * z2 * b2) * cx(2) + (b1 * z2 * b2) * cx(2);
  return from_poly(std::move(p), WeightFamily::KeyExample, false, std::move(domain));
}

WeightFunction WeightFunction::separable(const std::vector<WPoly>& phis1d, quad::Box domain) {
  int d = int(phis1d.size());
  WPoly p(d);
  for (int i = 0; i < d; ++i) {
    require(phis1d[i].dim() == 1, "separable: per-coordinate weights are 1D");
    for (const auto& [e, c] : phis1d[i].terms()) {
      std::vector<int> exps(2 * d, 0);
      exps[i] = e[0];
      exps[d + i] = e[1];
      p.add_term(exps, c);
    }
  }
  return from_poly(std::move(p), WeightFamily::QuadraticModel, true, std::move(domain));
}

WeightFunction WeightFunction::newtonian(const std::vector<RadialProfile>& alphas, quad::Box domain) {
  int d = int(alphas.size());
  require(domain.dim() == 2 * d, "newtonian: domain box must have 2d axes");
  WeightFunction w;
  w.family_ = WeightFamily::Newtonian;
  w.d_ = d;
  w.product_ = true;
  w.analytic_ = true;  // exact curvature via the potential identity
  w.domain_ = std::move(domain);
  auto nd = std::make_shared<NewtonData>();
  nd->alphas = alphas;
  w.newton_ = std::move(nd);
  return w;
}

WeightFunction WeightFunction::custom(std::function<double(const std::vector<cx>&)> f, int dim, quad::Box domain,
                                      double scale) {
  require(domain.dim() == 2 * dim, "custom: domain box must have 2d axes");
  WeightFunction w;
  w.family_ = WeightFamily::Custom;
  w.d_ = dim;
  w.product_ = false;
  w.analytic_ = false;
  w.domain_ = std::move(domain);
  w.custom_ = std::move(f);
  w.fd_scale_ = scale;
  return w;
}

WeightFunction WeightFunction::cutoff_composite(WPoly phi0, WPoly r3, RadialCutoff zeta, quad::Box domain) {
  int d = phi0.dim();
  require(r3.dim() == d, "cutoff_composite: dimension mismatch");
  WeightFunction w;
  w.family_ = WeightFamily::Cutoff;
  w.d_ = d;
  w.product_ = false;
  w.analytic_ = true;  // value/grad/hessian analytic; third falls back to FD
  w.domain_ = std::move(domain);
  auto cd = std::make_shared<CutoffData>();
  auto fill = [&](PolyData& pd, WPoly p) {
    pd.phi = std::move(p);
    pd.grad = derive_grad(pd.phi);
    pd.hess.resize(d * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) pd.hess[i * d + j] = pd.grad[i].dzbar(j);
    pd.cphi = CompiledPoly(pd.phi);
    pd.cgrad.clear();
    for (const auto& g : pd.grad) pd.cgrad.emplace_back(g);
    pd.chess.clear();
    for (const auto& h : pd.hess) pd.chess.emplace_back(h);
  };
  fill(cd->phi0, std::move(phi0));
  fill(cd->r3, std::move(r3));
  cd->zeta = zeta;
  w.cutoff_ = std::move(cd);
  return w;
}

}  // namespace mclab::geom
