#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mclab/la.hpp"

namespace mclab::fiber {

// A strictly increasing list of indices in [0, d). Used to label the basis
// monomials dz^I ∧ dz̄^J ⊗ e_a of the fiber Λ^{p,q}(C^d)* ⊗ C^r.
using MultiIndex = std::vector<int>;

long binom(int n, int k);
const std::vector<MultiIndex>& subsets(int d, int p);
int subset_rank(int d, const MultiIndex& I);
// Sign of sorting dz^i into dz^I (i ∉ I): (−1)^{#{j ∈ I : j < i}}.
// Returns 0 if i ∈ I, otherwise ±1 and writes the merged index to `out`.
int insertion_sign(const MultiIndex& I, int i, MultiIndex* out);

struct FiberMetric {
  Mat g;  // Hermitian positive definite, entries g_{ij̄}
  Mat L;  // lower Cholesky factor, g = L Lᴴ
  int dim() const { return int(g.rows()); }
  static FiberMetric identity(int d);
  static FiberMetric from_matrix(const Mat& g);
  // invariant check: L Lᴴ reproduces g to 1e-12 relative
  double factor_defect() const;
};

// Immutable per-metric context: basis enumeration, coframe transport and
// Gram matrices for every bidegree. All fiber objects share one of these.
class FiberSpace {
public:
  FiberSpace(FiberMetric metric, int rank);

  int d() const { return d_; }
  int rank() const { return r_; }
  const FiberMetric& metric() const { return metric_; }

  bool valid_degree(int p, int q) const { return p >= 0 && p <= d_ && q >= 0 && q <= d_; }
  int dim(int p, int q) const;
  int index_of(int p, int q, const MultiIndex& I, const MultiIndex& J, int a) const;

  // Coefficient transport to the g-orthonormal coframe, per bidegree.
  const Mat& transport(int p, int q) const;
  const Mat& transport_inv(int p, int q) const;
  const Mat& gram(int p, int q) const;      // Φᴴ Φ
  const Mat& gram_inv(int p, int q) const;

private:
  int d_, r_;
  FiberMetric metric_;
  Mat S_;  // dz^i = Σ_a S(i,a) w^a with w the orthonormal coframe
  struct DegreeData {
    Mat phi, phi_inv, gram, gram_inv;
  };
  std::vector<DegreeData> deg_;
  int slot(int p, int q) const { return p * (d_ + 1) + q; }
};

using SpacePtr = std::shared_ptr<const FiberSpace>;
SpacePtr make_space(const Mat& g, int rank = 1);
SpacePtr make_space(FiberMetric m, int rank = 1);

// Coefficient vector of one (p,q)-form with bundle values at a point.
struct FiberForm {
  SpacePtr space;
  int p = 0, q = 0;
  Vec coeffs;

  static FiberForm zero(SpacePtr s, int p, int q);
  static FiberForm basis(SpacePtr s, const MultiIndex& I, const MultiIndex& J, int a = 0);
  static FiberForm scalar(SpacePtr s, cx value, int a = 0);
  static FiberForm random(SpacePtr s, int p, int q, Rng& rng);

  cx inner(const FiberForm& other) const;  // linear in *this, conjugate-linear in other
  double norm() const;
  FiberForm operator+(const FiberForm& o) const;
  FiberForm operator-(const FiberForm& o) const;
  FiberForm operator*(cx c) const;
  bool is_zero(double tol = 0.0) const;
};

// Graded linear operator on the full fiber Λ^{•,•} ⊗ C^r. Blocks are stored
// per source bidegree; missing blocks are zero, so out-of-range degrees are
// annihilated automatically.
class FiberOperator {
public:
  FiberOperator() = default;
  FiberOperator(SpacePtr s, int dp, int dq);

  static FiberOperator identity_op(SpacePtr s);
  static FiberOperator zero_op(SpacePtr s, int dp, int dq);

  SpacePtr space;
  int dp = 0, dq = 0;
  int parity() const { return ((dp + dq) % 2 + 2) % 2; }

  const Mat* block(int p, int q) const;
  Mat& ensure_block(int p, int q);

  FiberForm apply(const FiberForm& f) const;
  FiberOperator compose(const FiberOperator& rhs) const;  // (*this) ∘ rhs
  FiberOperator operator+(const FiberOperator& o) const;
  FiberOperator operator-(const FiberOperator& o) const;
  FiberOperator operator*(cx c) const;

  // Adjoint with respect to the g-induced inner product (Gram conjugation).
  FiberOperator adjoint() const;
  // Plain blockwise conjugate transpose; only correct for g = I. Kept as the
  // negative control for the identity suite.
  FiberOperator adjoint_naive() const;

  double op_norm() const;                      // largest singular value, g-norms
  double distance(const FiberOperator& o) const;  // orthonormal-frame Frobenius
  double scale() const;
  bool is_zero(double tol) const;

private:
  std::map<std::pair<int, int>, Mat> blocks_;
};

// [A,B] = AB − (−1)^{|A||B|} BA
FiberOperator supercommutator(const FiberOperator& A, const FiberOperator& B);

// Elementary operators. `OneForm` components are given against dz^i (type
// (1,0)) or dz̄^j (type (0,1)).
enum class FormType { Holomorphic, AntiHolomorphic };
struct OneForm {
  FormType type;
  Vec comp;
  OneForm conjugated() const;
};

FiberOperator wedge_dz(SpacePtr s, int i);
FiberOperator wedge_dzbar(SpacePtr s, int j);
FiberOperator wedge_op(SpacePtr s, const OneForm& eta);
// 𝓘_η = (𝓔_{η̄})*
FiberOperator contract_dz(SpacePtr s, int i);
FiberOperator contract_dzbar(SpacePtr s, int j);
FiberOperator contract_op(SpacePtr s, const OneForm& eta);

FiberForm wedge(const OneForm& eta, const FiberForm& tau);
FiberForm contract(const OneForm& eta, const FiberForm& tau);

struct Lefschetz {
  FiberOperator L;
  FiberOperator Lambda;
};
Lefschetz lefschetz(SpacePtr s);

// [√-1 R_{ij̄} 𝓔_{dz^i} 𝓔_{dz̄^j}, Λ]; rejects R not Hermitian.
FiberOperator curvature_commutator(SpacePtr s, const Mat& R);

// T_{ipq̄}, antisymmetric in (i,p).
struct TorsionTensor {
  int d = 0;
  std::vector<cx> t;  // index (i*d + p)*d + q
  static TorsionTensor zero(int d);
  static TorsionTensor random(int d, Rng& rng, double scale = 1.0);
  cx at(int i, int p, int q) const { return t[(std::size_t(i) * d + p) * d + q]; }
  void set(int i, int p, int q, cx v);  // also sets the (p,i) slot to −v
  double antisymmetry_defect() const;
  double max_abs() const;
};

struct TorsionOperators {
  FiberOperator T;          // 𝒯  = [Λ, ∂Θ]
  FiberOperator T_star;     // 𝒯*
  FiberOperator Tbar;       // 𝒯̄ = [Λ, ∂̄Θ]
  FiberOperator Tbar_star;  // 𝒯̄*
};
TorsionOperators torsion_operators(SpacePtr s, const TorsionTensor& T);

// (1/3)(|𝒯|²op + |𝒯*|²op + |𝒯̄|²op + |𝒯̄*|²op): the computable stand-in for
// the dimensional constant times |∂Θ|².
double torsion_norm_bound(SpacePtr s, const TorsionTensor& T);

// |∂Θ|² of the (2,1)-form Σ_{i<p} T_{ipq̄} dz^i∧dz^p∧dz̄^q in the g-norm.
double dtheta_norm2(SpacePtr s, const TorsionTensor& T);

// Wedge by the full torsion 3-form, used as the commutator-route oracle:
// 𝓔_{∂Θ} with ∂Θ = √-1 ∂_i g_{pq̄} dz^i∧dz^p∧dz̄^q (dg_{ipq} = ∂_i g_{pq̄}).
FiberOperator wedge_dtheta(SpacePtr s, const std::vector<cx>& dg);

// Monte-Carlo + local-refinement estimate of sup over torsion tensors of
// torsion_norm_bound / |∂Θ|²: a numerical, non-rigorous stand-in for the
// dimensional constant.
double cd_estimate(int d, int samples, std::uint64_t seed);

enum class AdjointMode { Metric, Naive };

struct SuiteFailure {
  std::string identity;
  int sample = 0;
  double defect = 0.0;
};
struct SuiteReport {
  bool pass = true;
  int checks_run = 0;
  double max_defect = 0.0;
  std::vector<SuiteFailure> failures;
};

// Verifies the fiber-level commutator identities as matrix identities to
// 1e-12 over `samples` random draws of one-forms and curvature coefficients.
SuiteReport identity_suite(SpacePtr s, int samples, std::uint64_t seed,
                           AdjointMode mode = AdjointMode::Metric);

}  // namespace mclab::fiber
