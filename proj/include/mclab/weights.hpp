#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "mclab/bump.hpp"
#include "mclab/la.hpp"
#include "mclab/quadrature.hpp"
#include "mclab/wirtinger.hpp"

namespace mclab::geom {

enum class WeightFamily { QuadraticModel, KeyExample, Pullback, Newtonian, Cutoff, Custom };

// Compactly supported radial profile amp·B(r) with a plateau out to
// `plateau` and a C² falloff ending at `support`.
struct RadialProfile {
  double amp = 0.0;
  double plateau = 0.5;
  double support = 1.0;
  double value(double r) const;
  double d1(double r) const;
  double enclosed(double s) const;   // ∫_0^s value(r) r dr
  double log_moment(double s) const; // ∫_s^support value(r) log(r) r dr
};

// A weight φ on a box in C^d with derivative access up to total order 3.
// Built-in families carry exact derivatives; custom weights fall back to
// Richardson-verified finite differences with error estimates.
class WeightFunction {
public:
  WeightFamily family() const { return family_; }
  int dim() const { return d_; }
  bool is_product() const { return product_; }
  bool analytic_derivatives() const { return analytic_; }
  const quad::Box& domain() const { return domain_; }

  double phi(const std::vector<cx>& z) const;
  Vec grad(const std::vector<cx>& z) const;                   // ∂_i φ
  Mat hessian(const std::vector<cx>& z) const;                // ∂_i ∂_j̄ φ
  Mat hessian_holo(const std::vector<cx>& z) const;           // ∂_i ∂_j φ
  std::vector<Mat> third(const std::vector<cx>& z) const;     // [k](i,j) = ∂_k̄ ∂_i ∂_j̄ φ
  // estimated truncation error of the finite-difference fallback (0 when analytic)
  double fd_error_estimate(const std::vector<cx>& z) const;

  WeightFunction rescaled(double c) const;  // c·φ

  static WeightFunction quadratic(const std::vector<double>& lam0, quad::Box domain);
  // φ = a|f1|² − b|f2|² for z-holomorphic polynomials f (rejects non-holomorphic input)
  static WeightFunction pullback(const WPoly& f1, const WPoly& f2, double a, double b, quad::Box domain);
  // the C² example: f = (z1+p, z2+p) with p = P(z1−z2); defaults to p = (z1−z2)²
  static WeightFunction key_example(quad::Box domain);
  static WeightFunction key_example_general(const WPoly& p, quad::Box domain);
  // the twelve cubic monomials written out explicitly (plus |z1|²−|z2|²)
  static WeightFunction key_example_cubic(quad::Box domain);
  // per-coordinate sum of separable 1D weights given by a real polynomial in (ζ, ζ̄)
  static WeightFunction separable(const std::vector<WPoly>& phis1d, quad::Box domain);
  static WeightFunction newtonian(const std::vector<RadialProfile>& alphas, quad::Box domain);
  static WeightFunction custom(std::function<double(const std::vector<cx>&)> f, int dim, quad::Box domain,
                               double scale = 1.0);
  // φ0 + ζ(|z|)·R3 with a radial C² cutoff ζ (all of C^d); see cutoff_extension
  static WeightFunction cutoff_composite(WPoly phi0, WPoly r3, RadialCutoff zeta, quad::Box domain);

  const WPoly& poly() const;  // polynomial backing; throws for non-poly families

private:
  WeightFunction() = default;
  static WeightFunction from_poly(WPoly p, WeightFamily fam, bool product, quad::Box domain);

  WeightFamily family_ = WeightFamily::Custom;
  int d_ = 0;
  bool product_ = false;
  bool analytic_ = false;
  quad::Box domain_;

  // polynomial backing with precomputed derivative polynomials
  struct PolyData {
    WPoly phi;
    std::vector<WPoly> grad, hess, hess_holo, third;  // flattened tables
    CompiledPoly cphi;
    std::vector<CompiledPoly> cgrad, chess, chess_holo, cthird;
    void compile();
  };
  std::shared_ptr<const PolyData> poly_;

  struct NewtonData {
    std::vector<RadialProfile> alphas;
  };
  std::shared_ptr<const NewtonData> newton_;

  struct CutoffData {
    PolyData phi0, r3;
    RadialCutoff zeta;
  };
  std::shared_ptr<const CutoffData> cutoff_;

  std::function<double(const std::vector<cx>&)> custom_;
  double fd_scale_ = 1.0;
};

}  // namespace mclab::geom
