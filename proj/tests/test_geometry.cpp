#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "mclab/geometry.hpp"

using namespace mclab;
using namespace mclab::geom;

namespace {

quad::Box box4(double r) { return quad::Box::cube(4, -r, r); }

std::vector<cx> random_point2(Rng& rng, double r) {
  return {cx(rng.uniform(-r, r), rng.uniform(-r, r)), cx(rng.uniform(-r, r), rng.uniform(-r, r))};
}

// p = (z1−z2)² and its derivatives at z
struct KeyP {
  cx p, p1, p2, p11, p12, p22;
  explicit KeyP(const std::vector<cx>& z) {
    cx w = z[0] - z[1];
    p = w * w;
    p1 = 2.0 * w;
    p2 = -2.0 * w;
    p11 = 2.0;
    p12 = -2.0;
    p22 = 2.0;
  }
};

Mat key_R_formula(const std::vector<cx>& z) {
  KeyP k(z);
  Mat M(2, 2);
  M(0, 0) = 1.0 + 2.0 * k.p1.real();
  M(1, 1) = -1.0 - 2.0 * k.p2.real();
  // M(i,j) = ∂_i ∂_j̄ φ; the (1,2̄) entry is conj(p2 − p̄1)
  M(0, 1) = std::conj(k.p2 - std::conj(k.p1));
  M(1, 0) = k.p2 - std::conj(k.p1);
  return M;
}

}  // namespace

TEST_CASE("quadratic model curvature is constant diagonal") {
  WeightFunction w = WeightFunction::quadratic({1.5, -0.5}, box4(2.0));
  Rng rng(1);
  for (int t = 0; t < 5; ++t) {
    auto z = random_point2(rng, 1.5);
    Mat R = curvature(w, z).R;
    Mat expect(2, 2);
    expect << 1.5, 0, 0, -0.5;
    CHECK((R - expect).norm() < 1e-14);
  }
}

TEST_CASE("key example curvature matches the closed form") {
  WeightFunction w = WeightFunction::key_example(box4(1.0));
  Rng rng(2);
  for (int t = 0; t < 25; ++t) {
    auto z = random_point2(rng, 0.8);
    Mat R = curvature(w, z).R;
    CHECK((R - key_R_formula(z)).norm() < 1e-12);
  }
}

TEST_CASE("explicit cubic equals the pullback potential") {
  WeightFunction cubic = WeightFunction::key_example_cubic(box4(1.0));
  WeightFunction pull = WeightFunction::key_example(box4(1.0));
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    auto z = random_point2(rng, 0.9);
    CHECK(std::abs(cubic.phi(z) - pull.phi(z)) < 1e-12);
    CHECK((curvature(cubic, z).R - curvature(pull, z).R).norm() < 1e-8);
  }
}

TEST_CASE("pullback: trivial p and holomorphy rejection") {
  WPoly zero(2);
  WeightFunction w = WeightFunction::key_example_general(zero, box4(1.0));
  auto z = std::vector<cx>{cx(0.3, -0.2), cx(-0.1, 0.5)};
  Mat R = curvature(w, z).R;
  Mat expect(2, 2);
  expect << 1, 0, 0, -1;
  CHECK((R - expect).norm() < 1e-14);

  // p = Σ a_l (z1−z2)^l gives p1 + p2 = 0 identically (symbolic check)
  WPoly wvar = WPoly::var_z(2, 0) - WPoly::var_z(2, 1);
  WPoly p = wvar * cx(0.7) + wvar * wvar * cx(-0.3) + wvar * wvar * wvar * cx(0.2);
  CHECK((p.dz(0) + p.dz(1)).empty());

  // non-holomorphic map rejected
  WPoly badf = WPoly::var_z(2, 0) + WPoly::var_zbar(2, 1);
  CHECK_THROWS_AS(WeightFunction::pullback(badf, WPoly::var_z(2, 1), 1, 1, box4(1.0)), McLabError);
}

TEST_CASE("spectrum: closed forms, dense oracle, frame consistency") {
  // trivial: g=I, R=diag(3,−1)
  Mat g = Mat::Identity(2, 2);
  Mat R(2, 2);
  R << 3, 0, 0, -1;
  CurvatureSpectrum sp = spectrum(R, g);
  CHECK(sp.lambdas(0) == doctest::Approx(3.0));
  CHECK(sp.lambdas(1) == doctest::Approx(-1.0));
  CHECK(sp.gap(1) == doctest::Approx(4.0));

  // key example: λ1·λ2 = −|1+p1+p2|², λ1+λ2 = 2Re(p1−p2)
  WeightFunction w = WeightFunction::key_example(box4(1.0));
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    auto z = random_point2(rng, 0.7);
    KeyP kp(z);
    CurvatureSpectrum s = spectrum(curvature(w, z).R, Mat::Identity(2, 2));
    double prod = s.lambdas(0) * s.lambdas(1);
    double sum = s.lambdas(0) + s.lambdas(1);
    CHECK(prod == doctest::Approx(-std::norm(1.0 + kp.p1 + kp.p2)).epsilon(1e-9));
    CHECK(sum == doctest::Approx(2.0 * (kp.p1 - kp.p2).real()).epsilon(1e-9));
  }

  // random (R, g): eigenvalues match chol⁻¹ R chol⁻ᴴ dense eigensolver; frame g-unitary
  for (int t = 0; t < 10; ++t) {
    int d = 3;
    Mat gg = random_hpd(d, rng, 100);
    Mat RR = random_hermitian(d, rng);
    CurvatureSpectrum s = spectrum(RR, gg);
    Eigen::LLT<Mat> llt(gg);
    Mat L = llt.matrixL();
    Mat C = L.inverse() * RR * Mat(L.inverse()).adjoint();
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (C + C.adjoint()));
    for (int i = 0; i < d; ++i)
      CHECK(s.lambdas(i) == doctest::Approx(es.eigenvalues()(d - 1 - i)).epsilon(1e-11));
    CHECK((s.frame.adjoint() * gg * s.frame - Mat::Identity(d, d)).norm() < 1e-10);
    Mat resid = RR * s.frame - gg * s.frame * s.lambdas.cast<cx>().asDiagonal().toDenseMatrix();
    CHECK(resid.norm() <= 1e-9 * std::max(1.0, RR.norm()));
  }

  // non-positive metric rejected
  Mat bad = Mat::Identity(2, 2);
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(spectrum(R, bad), McLabError);

  // tie flag
  Mat Rtie = Mat::Identity(2, 2);
  CHECK(spectrum(Rtie, g).degenerate);
}

TEST_CASE("lambda_pq values") {
  Mat g = Mat::Identity(2, 2);
  Mat R(2, 2);
  R << 2.3, 0, 0, -0.7;
  CurvatureSpectrum s = spectrum(R, g);
  // p = d−q: identical partial sums cancel
  CHECK(lambda_pq(s, 1, 1) == doctest::Approx(0.0));
  CHECK(lambda_pq(s, 2, 0) == doctest::Approx(0.0));
  // d=2: λ_{1,2} = λ1 and λ_{1,0} = −λ2
  CHECK(lambda_pq(s, 1, 2) == doctest::Approx(2.3));
  CHECK(lambda_pq(s, 1, 0) == doctest::Approx(0.7));
}

TEST_CASE("dbar R norm: quadratic, key example, general p") {
  MetricField flat = MetricField::flat(2);
  WeightFunction quadw = WeightFunction::quadratic({1.0, -1.0}, box4(2.0));
  Rng rng(7);
  auto z0 = random_point2(rng, 1.0);
  CHECK(dbar_R_norm2(quadw, flat, z0) == doctest::Approx(0.0));

  // |∂̄R|² = 32 for p = (z1−z2)², u ≡ 1
  WeightFunction key = WeightFunction::key_example(box4(1.0));
  for (int t = 0; t < 10; ++t) {
    auto z = random_point2(rng, 0.8);
    CHECK(dbar_R_norm2(key, flat, z) == doctest::Approx(32.0).epsilon(1e-10));
  }

  // general polynomial p, u ≡ 1: |∂̄R|² = 2 Σ_{ij} |p_ij|² from exact polynomial derivatives
  WPoly wv = WPoly::var_z(2, 0) - WPoly::var_z(2, 1);
  WPoly p = wv * wv * cx(0.8) + wv * wv * wv * cx(0.25) + WPoly::var_z(2, 0) * WPoly::var_z(2, 1) * cx(0.1);
  WeightFunction gen = WeightFunction::key_example_general(p, box4(1.0));
  for (int t = 0; t < 10; ++t) {
    auto z = random_point2(rng, 0.5);
    double expect = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) expect += 2.0 * std::norm(p.dz(i).dz(j).eval(z));
    CHECK(dbar_R_norm2(gen, flat, z) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("dbar R norm with a conformal metric matches the u-formula") {
  // metric g = u_m·I; the closed form uses u = 1/u_m
  WPoly um = WPoly::constant(2, 1.0) + (WPoly::var_z(2, 0) + WPoly::var_zbar(2, 0)) * cx(0.10) +
             (WPoly::var_z(2, 1) + WPoly::var_zbar(2, 1)) * cx(-0.07);
  MetricField m = MetricField::conformal(um);
  WeightFunction key = WeightFunction::key_example(box4(1.0));
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    auto z = random_point2(rng, 0.6);
    KeyP kp(z);
    double umv = um.eval(z).real();
    double u = 1.0 / umv;
    cx u1b = std::conj(-um.dz(0).eval(z)) / (umv * umv);  // ∂_1̄ (1/u_m)
    cx u2b = std::conj(-um.dz(1).eval(z)) / (umv * umv);
    cx m11 = 1.0 + 2.0 * kp.p1.real(), m12 = kp.p2 - std::conj(kp.p1);
    cx m21 = std::conj(kp.p2) - kp.p1, m22 = -1.0 - 2.0 * kp.p2.real();
    // ∂_k̄ of the type change u·M0, then one factor u from the (0,1) index
    cx q11 = std::conj(kp.p11), q21 = std::conj(kp.p12);
    cx q12 = std::conj(kp.p12), q22 = std::conj(kp.p22);
    double full =
        u * (std::norm(u1b * m11 + u * q11) + std::norm(u1b * m12 - u * q11) + std::norm(u1b * m21 + u * q21) +
             std::norm(u1b * m22 - u * q21) + std::norm(u2b * m11 + u * q12) + std::norm(u2b * m12 - u * q12) +
             std::norm(u2b * m21 + u * q22) + std::norm(u2b * m22 - u * q22));
    CHECK(dbar_R_norm2(key, m, z) == doctest::Approx(full).epsilon(1e-8));
  }
}

TEST_CASE("torsion tensor and |dTheta|^2") {
  Rng rng(13);
  // constant metric: T = 0
  MetricField flat = MetricField::constant(random_hpd(2, rng, 10));
  auto z = random_point2(rng, 1.0);
  CHECK(torsion_tensor(flat, z).max_abs() == 0.0);
  CHECK(dtheta_norm2(flat, z) == doctest::Approx(0.0));

  // conformal g = u·I on C²: T_{12q̄} = ∂_1 u δ_{2q} − ∂_2 u δ_{1q}
  WPoly u = WPoly::constant(2, 2.0) + (WPoly::var_z(2, 0) + WPoly::var_zbar(2, 0)) * cx(0.2) +
            (WPoly::var_z(2, 0) * WPoly::var_zbar(2, 1) + WPoly::var_z(2, 1) * WPoly::var_zbar(2, 0)) * cx(0.05);
  MetricField conf = MetricField::conformal(u);
  for (int t = 0; t < 5; ++t) {
    auto zz = random_point2(rng, 0.8);
    fiber::TorsionTensor T = torsion_tensor(conf, zz);
    cx du1 = u.dz(0).eval(zz), du2 = u.dz(1).eval(zz);
    // T_{12q̄} = ∂_1 g_{2q̄} − ∂_2 g_{1q̄} = ∂_1 u δ_{2q} − ∂_2 u δ_{1q}
    CHECK(std::abs(T.at(0, 1, 0) - (-du2)) < 1e-12);
    CHECK(std::abs(T.at(0, 1, 1) - du1) < 1e-12);
  }

  // Kähler potential metric: torsion vanishes
  WPoly psi = WPoly::var_z(2, 0) * WPoly::var_zbar(2, 0) + WPoly::var_z(2, 1) * WPoly::var_zbar(2, 1) +
              (WPoly::var_z(2, 0) * WPoly::var_z(2, 0) * WPoly::var_zbar(2, 1) +
               WPoly::var_zbar(2, 0) * WPoly::var_zbar(2, 0) * WPoly::var_z(2, 1)) *
                  cx(0.05);
  MetricField pot = MetricField::kahler_potential(psi);
  for (int t = 0; t < 5; ++t) {
    auto zz = random_point2(rng, 0.5);
    CHECK(torsion_tensor(pot, zz).max_abs() < 1e-8);
  }
}

TEST_CASE("two dimensional closed-form spectrum") {
  Mat R(2, 2);
  R << 1, 0, 0, -1;
  auto [l1, l2] = two_dim_spectrum_closed_form(R, 1.0);
  CHECK(l1 == doctest::Approx(1.0));
  CHECK(l2 == doctest::Approx(-1.0));

  // key example: λ1−λ2 = 2u[(Re(p1−p2))² + |1+p1+p2|²]^{1/2}
  WeightFunction key = WeightFunction::key_example(box4(1.0));
  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    auto z = random_point2(rng, 0.7);
    KeyP kp(z);
    double u = rng.uniform(0.4, 2.0);
    auto [a, b] = two_dim_spectrum_closed_form(curvature(key, z).R, u);
    double expect =
        2.0 * u * std::sqrt(std::pow((kp.p1 - kp.p2).real(), 2) + std::norm(1.0 + kp.p1 + kp.p2));
    CHECK(a - b == doctest::Approx(expect).epsilon(1e-10));
  }

  // 200 random Hermitian R vs the generalized eigensolver
  for (int t = 0; t < 200; ++t) {
    Mat RR = random_hermitian(2, rng);
    double u = rng.uniform(0.3, 3.0);
    auto [a, b] = two_dim_spectrum_closed_form(RR, u);
    Mat g = (1.0 / u) * Mat::Identity(2, 2);
    CurvatureSpectrum s = spectrum(RR, g);
    CHECK(std::abs(a - s.lambdas(0)) < 1e-12 * std::max(1.0, s.spectral_radius()));
    CHECK(std::abs(b - s.lambdas(1)) < 1e-12 * std::max(1.0, s.spectral_radius()));
  }
}

TEST_CASE("newtonian weights") {
  // α ≡ 0 → φ ≡ 0
  RadialProfile zero{0.0, 0.3, 0.8};
  WeightFunction w0 = WeightFunction::newtonian({zero, zero}, box4(1.0));
  auto z = std::vector<cx>{cx(0.2, 0.1), cx(-0.3, 0.0)};
  CHECK(std::abs(w0.phi(z)) < 1e-12);

  // radial bump: FD Laplacian of the potential recovers α to 2e-3 relative
  RadialProfile bump{1.0, 0.3, 0.8};
  RadialProfile negbump{-0.6, 0.25, 0.7};
  WeightFunction w = WeightFunction::newtonian({bump, negbump}, box4(1.0));
  auto lap1 = [&](std::vector<cx> p, double h) {
    auto f = [&](double dx, double dy) {
      std::vector<cx> q = p;
      q[0] += cx(dx, dy);
      return w.phi(q);
    };
    double xx = (-f(2 * h, 0) + 16 * f(h, 0) - 30 * f(0, 0) + 16 * f(-h, 0) - f(-2 * h, 0)) / (12 * h * h);
    double yy = (-f(0, 2 * h) + 16 * f(0, h) - 30 * f(0, 0) + 16 * f(0, -h) - f(0, -2 * h)) / (12 * h * h);
    return 0.25 * (xx + yy);
  };
  for (double r : {0.05, 0.2, 0.45}) {
    std::vector<cx> p{cx(r, 0.0), cx(0.1, -0.1)};
    double got = lap1(p, 0.01);
    double expect = bump.value(r);
    CHECK(std::abs(got - expect) <= 2e-3 * std::max(1.0, std::abs(expect)));
  }

  // exact curvature channel: diagonal with the sign pattern λ1 ≥ 0 ≥ λ2
  Rng rng(19);
  for (int t = 0; t < 5; ++t) {
    auto zz = random_point2(rng, 0.6);
    Mat R = curvature(w, zz).R;
    CHECK(std::abs(R(0, 1)) == 0.0);
    CHECK(R(0, 0).real() >= 0.0);
    CHECK(R(1, 1).real() <= 0.0);
  }
}

TEST_CASE("finite-difference fallback agrees with analytic derivatives") {
  WeightFunction key = WeightFunction::key_example(box4(1.0));
  WeightFunction fd = WeightFunction::custom([&](const std::vector<cx>& z) { return key.phi(z); }, 2, box4(1.0));
  Rng rng(23);
  for (int t = 0; t < 4; ++t) {
    auto z = random_point2(rng, 0.5);
    CHECK((fd.hessian(z) - key.hessian(z)).norm() < 1e-7);
    CHECK((fd.grad(z) - key.grad(z)).norm() < 1e-9);
    CHECK(fd.fd_error_estimate(z) < 1e-6);
  }
}

TEST_CASE("cutoff extension") {
  // R3 ≡ 0: φ̃ = φ0 works at the first ε
  WeightFunction quadw = WeightFunction::quadratic({1.0, -1.0}, box4(3.0));
  CutoffResult triv = cutoff_extension(quadw, 0.5, 2, 5);
  CHECK(triv.max_perturbation < 1e-12);
  std::vector<cx> far{cx(2.0, 1.0), cx(-1.5, 0.4)};
  CHECK(std::abs(triv.phi_tilde.phi(far) - quadw.phi(far)) < 1e-12);

  // key-example cubic remainder at z0 = 0: some ε accepted with signature (1,1)
  WeightFunction key = WeightFunction::key_example(box4(3.0));
  CutoffResult res = cutoff_extension(key, 0.5, 10, 7);
  CHECK(res.epsilon > 0.0);
  // φ̃ agrees with φ inside B_{3ε} and with φ0 outside B_{4ε}
  std::vector<cx> inside{cx(res.epsilon, 0.2 * res.epsilon), cx(0.0, -res.epsilon)};
  CHECK(std::abs(res.phi_tilde.phi(inside) - key.phi(inside)) < 1e-12);
  std::vector<cx> outside{cx(5.0 * res.epsilon, 0.0), cx(0.0, 5.0 * res.epsilon)};
  double phi0v = std::norm(outside[0]) - std::norm(outside[1]);
  CHECK(std::abs(res.phi_tilde.phi(outside) - phi0v) < 1e-12);

  // perturbation bound decreases roughly linearly when ε is halved twice
  CutoffResult r1 = cutoff_extension(key, res.epsilon, 0, 7);
  CutoffResult r2 = cutoff_extension(key, res.epsilon / 2, 0, 7);
  CutoffResult r4 = cutoff_extension(key, res.epsilon / 4, 0, 7);
  CHECK(r2.max_perturbation < 0.75 * r1.max_perturbation);
  CHECK(r4.max_perturbation < 0.75 * r2.max_perturbation);
}

TEST_CASE("spectrum continuity along a segment") {
  WeightFunction key = WeightFunction::key_example(box4(1.0));
  int steps = 40;
  std::vector<cx> a{cx(-0.4, 0.1), cx(0.2, -0.3)}, b{cx(0.5, -0.2), cx(-0.1, 0.25)};
  RVec prev;
  double lip = 0.0;
  for (int t = 0; t < steps; ++t) {
    double s0 = double(t) / steps, s1 = double(t + 1) / steps;
    auto zt = [&](double s) {
      return std::vector<cx>{a[0] * (1 - s) + b[0] * s, a[1] * (1 - s) + b[1] * s};
    };
    lip = std::max(lip, operator_two_norm(curvature(key, zt(s1)).R - curvature(key, zt(s0)).R));
  }
  for (int t = 0; t <= steps; ++t) {
    double s = double(t) / steps;
    std::vector<cx> z{a[0] * (1 - s) + b[0] * s, a[1] * (1 - s) + b[1] * s};
    CurvatureSpectrum sp = spectrum(curvature(key, z).R, Mat::Identity(2, 2));
    CHECK(sp.gap(1) > 1.9);  // the key example keeps λ1−λ2 ≥ 2
    if (prev.size()) {
      for (int i = 0; i < 2; ++i) CHECK(std::abs(sp.lambdas(i) - prev(i)) <= 1.2 * lip + 1e-12);
    }
    prev = sp.lambdas;
  }
}

TEST_CASE("grid scan emits consistent rows") {
  WeightFunction key = WeightFunction::key_example(box4(0.5));
  MetricField flat = MetricField::flat(2);
  auto rows = grid_scan(key, flat, box4(0.5), 3, 1);
  CHECK(rows.size() == 81);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.gap));
    CHECK(r.dbar_R2 == doctest::Approx(32.0).epsilon(1e-9));
    CHECK(r.dtheta2 == doctest::Approx(0.0));
  }
}
