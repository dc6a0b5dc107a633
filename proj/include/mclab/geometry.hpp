#pragma once

#include "mclab/fiber.hpp"
#include "mclab/weights.hpp"

namespace mclab::geom {

enum class MetricKind { Constant, ConformalFlat, KahlerPotential };

// Hermitian metric field on a box in C^d with first-order derivative access.
class MetricField {
public:
  static MetricField flat(int d);
  static MetricField constant(const Mat& g0);
  static MetricField conformal(const WPoly& u);          // g = u(z)·I, u real positive
  static MetricField kahler_potential(const WPoly& psi);  // g_{ij̄} = ∂_i ∂_j̄ ψ

  MetricKind kind() const { return kind_; }
  int dim() const { return d_; }
  bool constant_metric() const { return kind_ == MetricKind::Constant; }
  bool kahler() const { return kahler_; }

  Mat g(const std::vector<cx>& z) const;
  // dg[k](i,j) = ∂_k g_{ij̄}
  std::vector<Mat> dg(const std::vector<cx>& z) const;

private:
  MetricKind kind_ = MetricKind::Constant;
  int d_ = 0;
  bool kahler_ = true;
  Mat g0_;
  WPoly u_;
  std::vector<WPoly> du_;
  std::vector<WPoly> hess_;   // potential metric entries
  std::vector<WPoly> dhess_;  // their z-derivatives
};

struct CurvatureResult {
  Mat R;               // Hermitian part of ∂_i∂_j̄ φ
  double herm_defect;  // asymmetry before symmetrization
  double fd_error;     // derivative error estimate (0 for analytic families)
};
// Throws when the asymmetry defect exceeds 1e-6.
CurvatureResult curvature(const WeightFunction& w, const std::vector<cx>& z);

struct CurvatureSpectrum {
  RVec lambdas;  // descending λ_1 ≥ … ≥ λ_d
  Mat frame;     // g-unitary eigenframe columns, R·v = λ g·v
  bool degenerate = false;
  double spectral_radius() const { return std::max(std::abs(lambdas(0)), std::abs(lambdas(lambdas.size() - 1))); }
  // λ_p − λ_{p+1} with 1-based p; +inf at the ends where no neighbor exists
  double gap(int p) const;
};
CurvatureSpectrum spectrum(const Mat& R, const Mat& g);

// λ_{p,q} = Σ_{i≤p} λ_i − Σ_{j≤d−q} λ_j
double lambda_pq(const CurvatureSpectrum& spec, int p, int q);

struct CurvatureDbar {
  Mat Rtype;              // type-changed curvature in the g-orthonormal frame
  std::vector<Mat> dbar;  // [b](i,j) = ∂̄-components, all indices orthonormal
  double norm2;           // Σ |∂_k̄ R_i^j|²
  double fd_error;
};
CurvatureDbar curvature_dbar(const WeightFunction& w, const MetricField& m, const std::vector<cx>& z);
double dbar_R_norm2(const WeightFunction& w, const MetricField& m, const std::vector<cx>& z);

fiber::TorsionTensor torsion_tensor(const MetricField& m, const std::vector<cx>& z);
double dtheta_norm2(const MetricField& m, const std::vector<cx>& z);

// d = 2, g = u⁻¹·I: eigenvalues of the type change u·R via the trace/det
// closed form, descending.
std::pair<double, double> two_dim_spectrum_closed_form(const Mat& R2, double u);

struct CutoffResult {
  WeightFunction phi_tilde;
  double epsilon;
  int grid_points_checked;
  double max_perturbation;  // max over the grid of ‖∂∂̄(ζ·R3)‖₂
};
// Extends a weight normalized at 0 (φ(0)=0, dφ(0)=0, holomorphic Hessian 0)
// to all of C^d as φ0 + ζ·R3 with constant curvature signature, shrinking ε
// until a grid signature check passes.
CutoffResult cutoff_extension(const WeightFunction& w, double eps_start = 0.5, int max_halvings = 8,
                              int grid_per_axis = 7);

struct ScanRow {
  std::vector<cx> z;
  RVec lambdas;
  double gap;          // smallest interior gap
  double dbar_R2;      // |∂̄R|²
  double dtheta2;      // |∂Θ|²
};
std::vector<ScanRow> grid_scan(const WeightFunction& w, const MetricField& m, const quad::Box& box,
                               int per_axis, int p_for_gap);

}  // namespace mclab::geom
