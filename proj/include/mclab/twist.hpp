#pragma once

#include <functional>
#include <optional>

#include "mclab/geometry.hpp"

namespace mclab::twist {

// A = R_{ij̄} 𝓔_{dz^i} 𝓘_{dz̄^j} restricted to Λ^{p,0}; the matrix acts on
// dz-basis coefficient vectors and is self-adjoint in the g-inner product.
Mat restricted_action(const Mat& R, const Mat& g, int p);

// Tracks the rank-one projector field onto the top eigenspace of a
// self-adjoint matrix field, through the block linear system
// (λ1(z) − a_2^2) v = a_2^1 with v(z0) = 0. Matrices must be given in an
// orthonormal fiber frame.
class EigensectionField {
public:
  using MatrixField = std::function<Mat(const std::vector<cx>&)>;

  // throws when the top eigenvalue at z0 is not simple (relative gap δ)
  EigensectionField(MatrixField field, std::vector<cx> z0, double gap_rtol = 1e-6);

  struct Section {
    Vec psi;        // eigenvector with unit leading coefficient (base frame coords)
    double lambda1;
    double residual;  // ‖Aψ − λψ‖ / (‖A‖‖ψ‖)
  };
  Section section(const std::vector<cx>& z) const;

  // Ψ = ψψᴴ/|ψ|²
  Mat projector(const std::vector<cx>& z) const;

  double base_gap() const { return gap_; }

private:
  MatrixField field_;
  std::vector<cx> z0_;
  Mat frame_;  // unitary; first column spans the top eigenspace at z0
  double gap_ = 0.0;
  double scale_ = 1.0;
};

struct PsiProperties {
  double a_defect;  // max |⟨∇_X Ψ, Ψ⟩|
  double b_defect;  // |⟨[R, Ψ], Ψ⟩| for the supplied curvature matrix
  double c_defect;  // max |⟨∇_X Ψ, ∇_Y Ψ⟩ − ⟨∇_Ȳ Ψ, ∇_X̄ Ψ⟩|
};
PsiProperties psi_properties(const EigensectionField& field, const std::vector<cx>& z, double h,
                             const Mat& curvature_sample);

// |∂̄Ψ^{F_p}|² = Σ_{i≤p<j} (λ_i−λ_j)^{-2} (|∂̄R_i^j|² + |∂̄R_j^i|²) in the
// unitary frame diagonalizing the type-changed curvature. Constant ambient
// metrics only; refuses degenerate gaps.
double error_term_formula(const geom::WeightFunction& w, const geom::MetricField& m, int p,
                          const std::vector<cx>& z);

struct DirectErrorTerm {
  double value;   // Richardson-extrapolated Σ_j ‖∇_j̄ Ψ‖²
  double budget;  // finite-difference error estimate
};
DirectErrorTerm error_term_direct(const geom::WeightFunction& w, const geom::MetricField& m, int p,
                                  const std::vector<cx>& z, double h = 1e-3);

struct ErrorBounds {
  double main;            // gap⁻² |∂̄R|²
  double trace_improved;  // gap⁻² (|∂̄R|² − (1/d)|∂̄Tr R|²)
  std::optional<double> normR_improved;  // gap⁻² (|∂̄R|² − |∂̄|R||²); absent when |R| ≈ 0
  double gap;
};
ErrorBounds error_bounds(const geom::WeightFunction& w, const geom::MetricField& m, int p,
                         const std::vector<cx>& z);

struct ErrorTermReport {
  double formula_value;
  double direct_value;
  double direct_budget;
  double bound_main;
  double bound_trace;
  std::optional<double> bound_normR;
  double gap;
};
ErrorTermReport error_report(const geom::WeightFunction& w, const geom::MetricField& m, int p,
                             const std::vector<cx>& z, double h = 1e-3);

// Shared helper: the orthonormal-frame restricted-action field of a weight
// against a constant ambient metric.
EigensectionField twist_field(const geom::WeightFunction& w, const geom::MetricField& m, int p,
                              const std::vector<cx>& z0);

}  // namespace mclab::twist
