#pragma once

#include "mclab/testform.hpp"
#include "mclab/twist.hpp"

namespace mclab::est {

// Everything the Dirac-energy integrands need at one point, with the fiber
// operators cached when the ambient metric is constant.
class EstimateContext {
public:
  // e_weight: optional weight of an auxiliary trivial line bundle E
  // (its curvature is ∂∂̄ψ_E); empty pointer means E flat.
  EstimateContext(geom::WeightFunction weight, geom::MetricField metric,
                  std::optional<WPoly> e_weight = std::nullopt);

  int dim() const { return d_; }
  const geom::WeightFunction& weight() const { return weight_; }
  const geom::MetricField& metric() const { return metric_; }
  bool has_e() const { return e_weight_.has_value(); }

  fiber::SpacePtr space_at(const std::vector<cx>& z) const;

  // Minimal per-point fiber data for (0,q) coefficient vectors: the raised
  // metric and the Cholesky-coframe transport per degree.
  struct PointFiber {
    Mat gup;                 // g^{ij̄}
    std::vector<Mat> phi;    // transport to the orthonormal coframe, per q
    double det_g;
  };
  PointFiber point_fiber(const std::vector<cx>& z) const;
  cx inner_0q(const PointFiber& pf, int q, const Vec& a, const Vec& b) const;  // ⟨a,b⟩

  // coefficient vectors of s, ∂̄s, ∂̄*_k s at z
  Vec value_vec(const TestForm& s, const std::vector<cx>& z) const;
  Vec dbar_vec(const TestForm& s, const std::vector<cx>& z) const;
  Vec dbar_star_vec(const TestForm& s, const std::vector<cx>& z, int k, const PointFiber& pf) const;

  // ∂̄s as a (0,q+1) fiber form (metric-free, holomorphic trivialization)
  fiber::FiberForm dbar_apply(const TestForm& s, const std::vector<cx>& z) const;
  // formal adjoint with the L^k ⊗ E weight and the metric torsion term
  fiber::FiberForm dbar_star_apply(const TestForm& s, const std::vector<cx>& z, int k) const;

  // pointwise density factor e^{−kφ−ψ_E}·det g
  double density(const std::vector<cx>& z, int k) const;
  double e_weight_value(const std::vector<cx>& z) const;

  // k f_{p,q} at z (Kähler or non-Kähler branch); product-structure weights
  // bypass the gap requirement with a vanishing twist error
  double kf_pq(int p, int q, int k, const std::vector<cx>& z) const;

  double lambdaE_p(int p, int q, const std::vector<cx>& z) const;
  double error_term(int p, const std::vector<cx>& z) const;

private:
  geom::WeightFunction weight_;
  geom::MetricField metric_;
  std::optional<WPoly> e_weight_;
  std::vector<WPoly> e_grad_;
  std::vector<WPoly> e_hess_;
  int d_ = 0;
  fiber::SpacePtr cached_space_;  // constant-metric fast path
  std::optional<PointFiber> cached_pf_;
  static PointFiber point_fiber_impl(const Mat& g);
};

struct QuadraturePolicy {
  int base_n = 10;
  int max_doublings = 3;
  double rtol = 1e-8;
};

struct EnergyResult {
  double value;
  double err_estimate;
  bool converged;
};
// ½‖D_k s‖² = ‖∂̄s‖² + ‖∂̄*s‖² over the support of s
EnergyResult dirac_energy(const EstimateContext& ctx, const TestForm& s, int k,
                          const QuadraturePolicy& pol = {});

struct EstimateReport {
  double lhs;            // ½‖D_k s‖²
  double rhs;            // ∫ kf_{p,q} |s|²
  double margin;         // lhs − rhs
  double error_budget;   // quadrature + differentiation estimates
  double lambda_pq_mass;  // ∫ λ_{p,q} |s|² (slope predictor)
  double norm2;          // ‖s‖²
  bool quadrature_converged;
};
EstimateReport bkn_verify(const EstimateContext& ctx, const TestForm& s, int p, int k,
                          const QuadraturePolicy& pol = {});

// Smooth partition of unity subordinate to a box cover, with closed-form
// ∂̄ components. χ_α = b_α / Σ b with tensor smoothstep bumps b_α.
class Partition {
public:
  Partition(std::vector<quad::Box> cover, double transition_width);

  int size() const { return int(bumps_.size()); }
  double chi(int alpha, const std::vector<cx>& z) const;
  // ∂̄ components of χ_α
  Vec chi_dbar(int alpha, const std::vector<cx>& z) const;
  double sum(const std::vector<cx>& z) const;  // Σ_α χ_α (1 on the covered region)
  double g_cover(const std::vector<cx>& z) const;  // Σ_α |∂̄χ_α|²
  bool in_region(const std::vector<cx>& z) const;  // inside some shrunken core

private:
  int d_;
  std::vector<quad::Box> cover_;
  std::vector<TensorBump> bumps_;
  double bump_sum(const std::vector<cx>& z) const;
  Vec bump_dbar(int alpha, const std::vector<cx>& z) const;
};

// ½ (Σ_{α active} f_α(z)^{-1})^{-1} − g_cover(z); throws when Σχ −1 exceeds 1e-8
double glue(const std::vector<std::function<double(const std::vector<cx>&)>>& local_fs,
            const Partition& partition, const std::vector<cx>& z);

}  // namespace mclab::est
