#include "mclab/fiber.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>

namespace mclab::fiber {

namespace {
const cx kI(0.0, 1.0);
}

long binom(int n, int k) {
  if (k < 0 || k > n || n < 0) return 0;
  long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

const std::vector<MultiIndex>& subsets(int d, int p) {
  static std::map<std::pair<int, int>, std::vector<MultiIndex>> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lk(mtx);
  auto key = std::make_pair(d, p);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<MultiIndex> out;
  if (p >= 0 && p <= d) {
    MultiIndex cur(p);
    // lexicographic enumeration
    std::function<void(int, int)> rec = [&](int start, int pos) {
      if (pos == p) {
        out.push_back(cur);
        return;
      }
      for (int v = start; v < d; ++v) {
        cur[pos] = v;
        rec(v + 1, pos + 1);
      }
    };
    rec(0, 0);
  }
  return cache.emplace(key, std::move(out)).first->second;
}

int subset_rank(int d, const MultiIndex& I) {
  // rank in the lexicographic enumeration above
  int p = int(I.size());
  long rank = 0;
  int prev = -1;
  for (int pos = 0; pos < p; ++pos) {
    for (int v = prev + 1; v < I[pos]; ++v) rank += binom(d - v - 1, p - pos - 1);
    prev = I[pos];
  }
  return int(rank);
}

int insertion_sign(const MultiIndex& I, int i, MultiIndex* out) {
  int below = 0;
  for (int v : I) {
    if (v == i) return 0;
    if (v < i) ++below;
  }
  if (out) {
    out->clear();
    out->reserve(I.size() + 1);
    bool placed = false;
    for (int v : I) {
      if (!placed && v > i) {
        out->push_back(i);
        placed = true;
      }
      out->push_back(v);
    }
    if (!placed) out->push_back(i);
  }
  return (below % 2 == 0) ? 1 : -1;
}

FiberMetric FiberMetric::identity(int d) {
  FiberMetric m;
  m.g = Mat::Identity(d, d);
  m.L = Mat::Identity(d, d);
  return m;
}

FiberMetric FiberMetric::from_matrix(const Mat& g) {
  require(g.rows() == g.cols(), "FiberMetric: square matrix required");
  require(is_hermitian(g, 1e-10), "FiberMetric: metric not Hermitian");
  Eigen::LLT<Mat> llt(0.5 * (g + g.adjoint()));
  require(llt.info() == Eigen::Success, "FiberMetric: metric not positive definite");
  FiberMetric m;
  m.g = 0.5 * (g + g.adjoint());
  m.L = llt.matrixL();
  return m;
}

double FiberMetric::factor_defect() const {
  return (L * L.adjoint() - g).norm() / std::max(1.0, g.norm());
}

FiberSpace::FiberSpace(FiberMetric metric, int rank) : d_(metric.dim()), r_(rank), metric_(std::move(metric)) {
  require(r_ >= 1, "FiberSpace: rank >= 1 required");
  // dz^i = Σ_a S(i,a) w^a with w^a = Σ_i L(i,a) dz^i the orthonormal coframe
  Mat Linv = metric_.L.inverse();
  S_ = Linv.transpose();
  deg_.resize((d_ + 1) * (d_ + 1));
  for (int p = 0; p <= d_; ++p)
    for (int q = 0; q <= d_; ++q) {
      const auto& sp = subsets(d_, p);
      const auto& sq = subsets(d_, q);
      int np = int(sp.size()), nq = int(sq.size());
      int n = np * nq * r_;
      Mat phi = Mat::Zero(n, n);
      // exterior-power minors of S, separately for the dz and dz̄ slots
      Mat mp(np, np), mq(nq, nq);
      for (int a = 0; a < np; ++a)
        for (int b = 0; b < np; ++b) {
          Mat sub(p, p);
          for (int r = 0; r < p; ++r)
            for (int c = 0; c < p; ++c) sub(r, c) = S_(sp[b][r], sp[a][c]);
          mp(a, b) = (p == 0) ? cx(1) : sub.determinant();
        }
      for (int a = 0; a < nq; ++a)
        for (int b = 0; b < nq; ++b) {
          Mat sub(q, q);
          for (int r = 0; r < q; ++r)
            for (int c = 0; c < q; ++c) sub(r, c) = S_(sq[b][r], sq[a][c]);
          mq(a, b) = (q == 0) ? cx(1) : std::conj(sub.determinant());
        }
      for (int a = 0; a < np; ++a)
        for (int b = 0; b < nq; ++b)
          for (int i = 0; i < np; ++i)
            for (int j = 0; j < nq; ++j)
              for (int c = 0; c < r_; ++c)
                phi((a * nq + b) * r_ + c, (i * nq + j) * r_ + c) = mp(a, i) * mq(b, j);
      DegreeData dd;
      dd.phi = phi;
      dd.phi_inv = (n > 0) ? Mat(phi.inverse()) : Mat(phi);
      dd.gram = phi.adjoint() * phi;
      dd.gram_inv = (n > 0) ? Mat(dd.gram.inverse()) : Mat(dd.gram);
      deg_[slot(p, q)] = std::move(dd);
    }
}

int FiberSpace::dim(int p, int q) const {
  if (!valid_degree(p, q)) return 0;
  return int(binom(d_, p) * binom(d_, q)) * r_;
}

int FiberSpace::index_of(int p, int q, const MultiIndex& I, const MultiIndex& J, int a) const {
  require(valid_degree(p, q) && int(I.size()) == p && int(J.size()) == q, "index_of: bad degree");
  require(a >= 0 && a < r_, "index_of: bundle index");
  return (subset_rank(d_, I) * int(binom(d_, q)) + subset_rank(d_, J)) * r_ + a;
}

const Mat& FiberSpace::transport(int p, int q) const { return deg_[slot(p, q)].phi; }
const Mat& FiberSpace::transport_inv(int p, int q) const { return deg_[slot(p, q)].phi_inv; }
const Mat& FiberSpace::gram(int p, int q) const { return deg_[slot(p, q)].gram; }
const Mat& FiberSpace::gram_inv(int p, int q) const { return deg_[slot(p, q)].gram_inv; }

SpacePtr make_space(const Mat& g, int rank) { return std::make_shared<FiberSpace>(FiberMetric::from_matrix(g), rank); }
SpacePtr make_space(FiberMetric m, int rank) { return std::make_shared<FiberSpace>(std::move(m), rank); }

FiberForm FiberForm::zero(SpacePtr s, int p, int q) {
  FiberForm f;
  f.space = std::move(s);
  f.p = p;
  f.q = q;
  f.coeffs = Vec::Zero(f.space->dim(p, q));
  return f;
}

FiberForm FiberForm::basis(SpacePtr s, const MultiIndex& I, const MultiIndex& J, int a) {
  FiberForm f = zero(s, int(I.size()), int(J.size()));
  f.coeffs(f.space->index_of(f.p, f.q, I, J, a)) = cx(1);
  return f;
}

FiberForm FiberForm::scalar(SpacePtr s, cx value, int a) {
  FiberForm f = zero(std::move(s), 0, 0);
  f.coeffs(a) = value;
  return f;
}

FiberForm FiberForm::random(SpacePtr s, int p, int q, Rng& rng) {
  FiberForm f = zero(std::move(s), p, q);
  for (int i = 0; i < f.coeffs.size(); ++i) f.coeffs(i) = rng.cnormal();
  return f;
}

namespace {
bool compatible_spaces(const SpacePtr& a, const SpacePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->d() != b->d() || a->rank() != b->rank()) return false;
  return (a->metric().g - b->metric().g).norm() <= 1e-13 * std::max(1.0, a->metric().g.norm());
}
}  // namespace

cx FiberForm::inner(const FiberForm& other) const {
  require(compatible_spaces(space, other.space), "FiberForm::inner: mixed spaces");
  if (p != other.p || q != other.q) return cx(0);
  if (coeffs.size() == 0) return cx(0);
  const Mat& G = space->gram(p, q);
  return (other.coeffs.adjoint() * (G * coeffs))(0, 0);
}

double FiberForm::norm() const {
  if (coeffs.size() == 0) return 0.0;
  return std::sqrt(std::max(0.0, inner(*this).real()));
}

FiberForm FiberForm::operator+(const FiberForm& o) const {
  require(compatible_spaces(space, o.space) && p == o.p && q == o.q, "FiberForm::+: degree mismatch");
  FiberForm f = *this;
  f.coeffs += o.coeffs;
  return f;
}

FiberForm FiberForm::operator-(const FiberForm& o) const { return *this + o * cx(-1); }

FiberForm FiberForm::operator*(cx c) const {
  FiberForm f = *this;
  f.coeffs *= c;
  return f;
}

bool FiberForm::is_zero(double tol) const { return coeffs.size() == 0 || coeffs.lpNorm<Eigen::Infinity>() <= tol; }

FiberOperator::FiberOperator(SpacePtr s, int dp_, int dq_) : space(std::move(s)), dp(dp_), dq(dq_) {}

FiberOperator FiberOperator::identity_op(SpacePtr s) {
  FiberOperator op(s, 0, 0);
  int d = s->d();
  for (int p = 0; p <= d; ++p)
    for (int q = 0; q <= d; ++q)
      if (s->dim(p, q) > 0) op.ensure_block(p, q) = Mat::Identity(s->dim(p, q), s->dim(p, q));
  return op;
}

FiberOperator FiberOperator::zero_op(SpacePtr s, int dp, int dq) { return FiberOperator(std::move(s), dp, dq); }

const Mat* FiberOperator::block(int p, int q) const {
  auto it = blocks_.find({p, q});
  return it == blocks_.end() ? nullptr : &it->second;
}

Mat& FiberOperator::ensure_block(int p, int q) {
  require(space->valid_degree(p, q) && space->valid_degree(p + dp, q + dq), "ensure_block: degree out of range");
  auto it = blocks_.find({p, q});
  if (it == blocks_.end())
    it = blocks_.emplace(std::make_pair(p, q), Mat::Zero(space->dim(p + dp, q + dq), space->dim(p, q))).first;
  return it->second;
}

FiberForm FiberOperator::apply(const FiberForm& f) const {
  require(space == f.space, "FiberOperator::apply: mixed spaces");
  int tp = f.p + dp, tq = f.q + dq;
  if (!space->valid_degree(tp, tq)) {
    // shifted degree is out of range: zero form of that degree
    FiberForm z;
    z.space = space;
    z.p = tp;
    z.q = tq;
    z.coeffs = Vec::Zero(0);
    return z;
  }
  FiberForm out = FiberForm::zero(space, tp, tq);
  const Mat* b = block(f.p, f.q);
  if (b && b->size() > 0) out.coeffs = (*b) * f.coeffs;
  return out;
}

FiberOperator FiberOperator::compose(const FiberOperator& rhs) const {
  require(space == rhs.space, "FiberOperator::compose: mixed spaces");
  FiberOperator out(space, dp + rhs.dp, dq + rhs.dq);
  for (const auto& [pq, m] : rhs.blocks_) {
    int mp = pq.first + rhs.dp, mq = pq.second + rhs.dq;
    const Mat* b = block(mp, mq);
    if (!b) continue;
    if (!space->valid_degree(pq.first + out.dp, pq.second + out.dq)) continue;
    if (b->size() == 0 || m.size() == 0) continue;
    Mat prod = (*b) * m;
    if (prod.size() == 0) continue;
    Mat& tgt = out.ensure_block(pq.first, pq.second);
    tgt += prod;
  }
  return out;
}

FiberOperator FiberOperator::operator+(const FiberOperator& o) const {
  require(space == o.space && dp == o.dp && dq == o.dq, "FiberOperator::+: incompatible shifts");
  FiberOperator out = *this;
  for (const auto& [pq, m] : o.blocks_) {
    Mat& tgt = out.ensure_block(pq.first, pq.second);
    tgt += m;
  }
  return out;
}

FiberOperator FiberOperator::operator-(const FiberOperator& o) const { return *this + o * cx(-1); }

FiberOperator FiberOperator::operator*(cx c) const {
  FiberOperator out = *this;
  for (auto& [pq, m] : out.blocks_) m *= c;
  return out;
}

FiberOperator FiberOperator::adjoint() const {
  // Conjugate-transpose in the orthonormal frame, then transport back. This
  // grouping keeps the roundoff at one power of the transport conditioning
  // instead of the Gram-squared power.
  FiberOperator out(space, -dp, -dq);
  for (const auto& [pq, m] : blocks_) {
    int p = pq.first, q = pq.second;
    int tp = p + dp, tq = q + dq;
    if (m.size() == 0) continue;
    Mat on = space->transport(tp, tq) * m * space->transport_inv(p, q);
    Mat adj = space->transport_inv(p, q) * on.adjoint() * space->transport(tp, tq);
    out.ensure_block(tp, tq) += adj;
  }
  return out;
}

FiberOperator FiberOperator::adjoint_naive() const {
  FiberOperator out(space, -dp, -dq);
  for (const auto& [pq, m] : blocks_) {
    if (m.size() == 0) continue;
    out.ensure_block(pq.first + dp, pq.second + dq) += m.adjoint();
  }
  return out;
}

double FiberOperator::op_norm() const {
  double best = 0.0;
  for (const auto& [pq, m] : blocks_) {
    if (m.size() == 0) continue;
    const Mat& phi_t = space->transport(pq.first + dp, pq.second + dq);
    const Mat& phi_s_inv = space->transport_inv(pq.first, pq.second);
    best = std::max(best, operator_two_norm(phi_t * m * phi_s_inv));
  }
  return best;
}

double FiberOperator::distance(const FiberOperator& o) const {
  require(space == o.space && dp == o.dp && dq == o.dq, "FiberOperator::distance: incompatible");
  double acc = 0.0;
  auto add = [&](int p, int q) {
    const Mat* a = block(p, q);
    const Mat* b = o.block(p, q);
    if (!a && !b) return;
    Mat diff;
    if (a && b)
      diff = *a - *b;
    else if (a)
      diff = *a;
    else
      diff = -*b;
    if (diff.size() == 0) return;
    Mat on = space->transport(p + dp, q + dq) * diff * space->transport_inv(p, q);
    acc += on.squaredNorm();
  };
  for (const auto& [pq, m] : blocks_) add(pq.first, pq.second);
  for (const auto& [pq, m] : o.blocks_)
    if (!block(pq.first, pq.second)) add(pq.first, pq.second);
  return std::sqrt(acc);
}

double FiberOperator::scale() const {
  double acc = 0.0;
  for (const auto& [pq, m] : blocks_) {
    if (m.size() == 0) continue;
    Mat on = space->transport(pq.first + dp, pq.second + dq) * m * space->transport_inv(pq.first, pq.second);
    acc += on.squaredNorm();
  }
  return std::sqrt(acc);
}

bool FiberOperator::is_zero(double tol) const { return scale() <= tol; }

FiberOperator supercommutator(const FiberOperator& A, const FiberOperator& B) {
  require(A.space == B.space, "supercommutator: mixed spaces");
  double sign = (A.parity() * B.parity()) % 2 == 1 ? -1.0 : 1.0;
  return A.compose(B) - B.compose(A) * cx(sign);
}

OneForm OneForm::conjugated() const {
  OneForm o;
  o.type = (type == FormType::Holomorphic) ? FormType::AntiHolomorphic : FormType::Holomorphic;
  o.comp = comp.conjugate();
  return o;
}

FiberOperator wedge_dz(SpacePtr s, int i) {
  FiberOperator op(s, 1, 0);
  int d = s->d(), r = s->rank();
  for (int p = 0; p + 1 <= d; ++p)
    for (int q = 0; q <= d; ++q) {
      if (s->dim(p, q) == 0 || s->dim(p + 1, q) == 0) continue;
      Mat& b = op.ensure_block(p, q);
      const auto& sp = subsets(d, p);
      const auto& sq = subsets(d, q);
      MultiIndex merged;
      for (std::size_t Ii = 0; Ii < sp.size(); ++Ii) {
        int sg = insertion_sign(sp[Ii], i, &merged);
        if (sg == 0) continue;
        int tr = subset_rank(d, merged);
        for (std::size_t Jj = 0; Jj < sq.size(); ++Jj)
          for (int a = 0; a < r; ++a)
            b((tr * sq.size() + Jj) * r + a, (Ii * sq.size() + Jj) * r + a) = double(sg);
      }
    }
  return op;
}

FiberOperator wedge_dzbar(SpacePtr s, int j) {
  FiberOperator op(s, 0, 1);
  int d = s->d(), r = s->rank();
  for (int p = 0; p <= d; ++p)
    for (int q = 0; q + 1 <= d; ++q) {
      if (s->dim(p, q) == 0 || s->dim(p, q + 1) == 0) continue;
      Mat& b = op.ensure_block(p, q);
      const auto& sp = subsets(d, p);
      const auto& sq = subsets(d, q);
      const auto& sq1 = subsets(d, q + 1);
      double psign = (p % 2 == 0) ? 1.0 : -1.0;  // dz̄^j crosses the dz block
      MultiIndex merged;
      for (std::size_t Jj = 0; Jj < sq.size(); ++Jj) {
        int sg = insertion_sign(sq[Jj], j, &merged);
        if (sg == 0) continue;
        int tr = subset_rank(d, merged);
        for (std::size_t Ii = 0; Ii < sp.size(); ++Ii)
          for (int a = 0; a < r; ++a)
            b((Ii * sq1.size() + tr) * r + a, (Ii * sq.size() + Jj) * r + a) = psign * double(sg);
      }
    }
  return op;
}

FiberOperator wedge_op(SpacePtr s, const OneForm& eta) {
  require(int(eta.comp.size()) == s->d(), "wedge_op: component count");
  bool hol = eta.type == FormType::Holomorphic;
  FiberOperator op(s, hol ? 1 : 0, hol ? 0 : 1);
  for (int i = 0; i < s->d(); ++i) {
    if (eta.comp(i) == cx(0)) continue;
    FiberOperator e = hol ? wedge_dz(s, i) : wedge_dzbar(s, i);
    op = op + e * eta.comp(i);
  }
  return op;
}

FiberOperator contract_dz(SpacePtr s, int i) { return wedge_dzbar(s, i).adjoint(); }
FiberOperator contract_dzbar(SpacePtr s, int j) { return wedge_dz(s, j).adjoint(); }

FiberOperator contract_op(SpacePtr s, const OneForm& eta) {
  // 𝓘_η = (𝓔_{η̄})*
  return wedge_op(s, eta.conjugated()).adjoint();
}

FiberForm wedge(const OneForm& eta, const FiberForm& tau) { return wedge_op(tau.space, eta).apply(tau); }
FiberForm contract(const OneForm& eta, const FiberForm& tau) { return contract_op(tau.space, eta).apply(tau); }

Lefschetz lefschetz(SpacePtr s) {
  int d = s->d();
  const Mat& g = s->metric().g;
  FiberOperator L(s, 1, 1);
  bool first = true;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (g(i, j) == cx(0)) continue;
      FiberOperator term = wedge_dz(s, i).compose(wedge_dzbar(s, j)) * (kI * g(i, j));
      if (first) {
        L = term;
        first = false;
      } else {
        L = L + term;
      }
    }
  Lefschetz out{L, L.adjoint()};
  return out;
}

FiberOperator curvature_commutator(SpacePtr s, const Mat& R) {
  require(R.rows() == s->d() && R.cols() == s->d(), "curvature_commutator: bad R");
  require(is_hermitian(R, 1e-10), "curvature_commutator: R not Hermitian");
  FiberOperator RE(s, 1, 1);
  bool first = true;
  for (int i = 0; i < s->d(); ++i)
    for (int j = 0; j < s->d(); ++j) {
      if (R(i, j) == cx(0)) continue;
      FiberOperator term = wedge_dz(s, i).compose(wedge_dzbar(s, j)) * (kI * R(i, j));
      if (first) {
        RE = term;
        first = false;
      } else {
        RE = RE + term;
      }
    }
  if (first) return FiberOperator::zero_op(s, 0, 0);
  return supercommutator(RE, lefschetz(s).Lambda);
}

TorsionTensor TorsionTensor::zero(int d) {
  TorsionTensor t;
  t.d = d;
  t.t.assign(std::size_t(d) * d * d, cx(0));
  return t;
}

TorsionTensor TorsionTensor::random(int d, Rng& rng, double scale) {
  TorsionTensor t = zero(d);
  for (int i = 0; i < d; ++i)
    for (int p = i + 1; p < d; ++p)
      for (int q = 0; q < d; ++q) t.set(i, p, q, scale * rng.cnormal());
  return t;
}

void TorsionTensor::set(int i, int p, int q, cx v) {
  t[(std::size_t(i) * d + p) * d + q] = v;
  t[(std::size_t(p) * d + i) * d + q] = -v;
}

double TorsionTensor::antisymmetry_defect() const {
  double m = 0;
  for (int i = 0; i < d; ++i)
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q) m = std::max(m, std::abs(at(i, p, q) + at(p, i, q)));
  return m;
}

double TorsionTensor::max_abs() const {
  double m = 0;
  for (const auto& v : t) m = std::max(m, std::abs(v));
  return m;
}

TorsionOperators torsion_operators(SpacePtr s, const TorsionTensor& T) {
  require(T.d == s->d(), "torsion_operators: dimension mismatch");
  require(T.antisymmetry_defect() <= 1e-12 * std::max(1.0, T.max_abs()),
          "torsion_operators: tensor not antisymmetric in (i,p)");
  int d = s->d();
  std::vector<FiberOperator> E(d), Eb(d), I(d), Ib(d);
  for (int i = 0; i < d; ++i) {
    E[i] = wedge_dz(s, i);
    Eb[i] = wedge_dzbar(s, i);
    I[i] = contract_dz(s, i);
    Ib[i] = contract_dzbar(s, i);
  }
  FiberOperator t(s, 1, 0), ts(s, -1, 0), tb(s, 0, 1), tbs(s, 0, -1);
  for (int i = 0; i < d; ++i)
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q) {
        cx c = T.at(i, p, q);
        if (c == cx(0)) continue;
        cx cb = std::conj(c);  // T_{j̄s̄r} = conj(T_{jsr̄})
        // 𝒯 = T_{ipq̄} 𝓘_{dz^i}𝓔_{dz^p}𝓔_{dz̄^q} − ½ T_{ipq̄} 𝓔_{dz^i}𝓔_{dz^p}𝓘_{dz̄^q}
        t = t + I[i].compose(E[p]).compose(Eb[q]) * c - E[i].compose(E[p]).compose(Ib[q]) * (0.5 * c);
        // 𝒯* = T_{j̄s̄r} 𝓘_{dz^r}𝓘_{dz̄^s}𝓔_{dz̄^j} − ½ T_{j̄s̄r} 𝓔_{dz^r}𝓘_{dz̄^s}𝓘_{dz̄^j}, (j,s,r) = (i,p,q)
        ts = ts + I[q].compose(Ib[p]).compose(Eb[i]) * cb - E[q].compose(Ib[p]).compose(Ib[i]) * (0.5 * cb);
        // 𝒯̄ = T_{j̄s̄r} 𝓘_{dz̄^j}𝓔_{dz̄^s}𝓔_{dz^r} − ½ T_{j̄s̄r} 𝓔_{dz̄^j}𝓔_{dz̄^s}𝓘_{dz^r}
        tb = tb + Ib[i].compose(Eb[p]).compose(E[q]) * cb - Eb[i].compose(Eb[p]).compose(I[q]) * (0.5 * cb);
        // 𝒯̄* = T_{ipq̄} 𝓘_{dz̄^q}𝓘_{dz^p}𝓔_{dz^i} − ½ T_{ipq̄} 𝓔_{dz̄^q}𝓘_{dz^p}𝓘_{dz^i}
        tbs = tbs + Ib[q].compose(I[p]).compose(E[i]) * c - Eb[q].compose(I[p]).compose(I[i]) * (0.5 * c);
      }
  return TorsionOperators{t, ts, tb, tbs};
}

double torsion_norm_bound(SpacePtr s, const TorsionTensor& T) {
  TorsionOperators ops = torsion_operators(s, T);
  auto sq = [](double x) { return x * x; };
  return (sq(ops.T.op_norm()) + sq(ops.T_star.op_norm()) + sq(ops.Tbar.op_norm()) + sq(ops.Tbar_star.op_norm())) / 3.0;
}

double dtheta_norm2(SpacePtr s, const TorsionTensor& T) {
  int d = s->d();
  if (d < 2) return 0.0;
  FiberForm f = FiberForm::zero(s, 2, 1);
  for (int i = 0; i < d; ++i)
    for (int p = i + 1; p < d; ++p)
      for (int q = 0; q < d; ++q) {
        cx c = T.at(i, p, q);
        if (c == cx(0)) continue;
        f.coeffs(s->index_of(2, 1, MultiIndex{i, p}, MultiIndex{q}, 0)) += c;
      }
  double n = f.norm();
  return n * n;
}

FiberOperator wedge_dtheta(SpacePtr s, const std::vector<cx>& dg) {
  int d = s->d();
  require(int(dg.size()) == d * d * d, "wedge_dtheta: dg size");
  std::vector<FiberOperator> E(d), Eb(d);
  for (int i = 0; i < d; ++i) {
    E[i] = wedge_dz(s, i);
    Eb[i] = wedge_dzbar(s, i);
  }
  FiberOperator op(s, 2, 1);
  for (int i = 0; i < d; ++i)
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q) {
        cx c = dg[(std::size_t(i) * d + p) * d + q];
        if (c == cx(0)) continue;
        op = op + E[i].compose(E[p]).compose(Eb[q]) * (kI * c);
      }
  return op;
}

double cd_estimate(int d, int samples, std::uint64_t seed) {
  Rng rng(seed);
  SpacePtr s = make_space(Mat::Identity(d, d));
  double best = 0.0;
  TorsionTensor best_t = TorsionTensor::zero(d);
  for (int it = 0; it < samples; ++it) {
    TorsionTensor t = TorsionTensor::random(d, rng);
    double den = dtheta_norm2(s, t);
    if (den < 1e-12) continue;
    double val = torsion_norm_bound(s, t) / den;
    if (val > best) {
      best = val;
      best_t = t;
    }
  }
  // local refinement around the best sample
  double step = 0.3;
  for (int round = 0; round < 6; ++round) {
    bool improved = false;
    for (int trial = 0; trial < 24; ++trial) {
      TorsionTensor t = best_t;
      for (int i = 0; i < d; ++i)
        for (int p = i + 1; p < d; ++p)
          for (int q = 0; q < d; ++q) t.set(i, p, q, t.at(i, p, q) + step * rng.cnormal());
      double den = dtheta_norm2(s, t);
      if (den < 1e-12) continue;
      double val = torsion_norm_bound(s, t) / den;
      if (val > best) {
        best = val;
        best_t = t;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

namespace {

struct SuiteContext {
  SpacePtr s;
  AdjointMode mode;
  SuiteReport* rep;
  int sample;
  double tol;

  FiberOperator adj(const FiberOperator& op) const {
    return mode == AdjointMode::Metric ? op.adjoint() : op.adjoint_naive();
  }

  void check(const std::string& name, const FiberOperator& lhs, const FiberOperator& rhs) {
    double sc = std::max(1.0, std::max(lhs.scale(), rhs.scale()));
    double defect = lhs.distance(rhs) / sc;
    rep->checks_run++;
    rep->max_defect = std::max(rep->max_defect, defect);
    if (!(defect <= tol)) {
      rep->pass = false;
      rep->failures.push_back({name, sample, defect});
    }
  }

  void check_zero(const std::string& name, const FiberOperator& op) {
    check(name, op, FiberOperator::zero_op(s, op.dp, op.dq));
  }
};

}  // namespace

SuiteReport identity_suite(SpacePtr s, int samples, std::uint64_t seed, AdjointMode mode) {
  SuiteReport rep;
  Rng rng(seed);
  int d = s->d();
  const Mat& g = s->metric().g;
  Mat ginv = g.inverse();
  // raised metric g^{ij̄} (satisfies g_{ij̄} g^{kj̄} = δ_i^k)
  auto gup = [&](int i, int j) { return ginv(j, i); };
  auto scalar_op = [&](cx c) { return FiberOperator::identity_op(s) * c; };

  std::vector<FiberOperator> E(d), Eb(d), I(d), Ib(d);
  for (int i = 0; i < d; ++i) {
    E[i] = wedge_dz(s, i);
    Eb[i] = wedge_dzbar(s, i);
    I[i] = (mode == AdjointMode::Metric) ? Eb[i].adjoint() : Eb[i].adjoint_naive();
    Ib[i] = (mode == AdjointMode::Metric) ? E[i].adjoint() : E[i].adjoint_naive();
  }
  std::vector<std::vector<FiberOperator>> EEb(d, std::vector<FiberOperator>(d)),
      IIb(d, std::vector<FiberOperator>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      EEb[i][j] = E[i].compose(Eb[j]);
      IIb[i][j] = I[i].compose(Ib[j]);
    }
  Lefschetz lef = lefschetz(s);
  FiberOperator Lambda = (mode == AdjointMode::Metric) ? lef.L.adjoint() : lef.L.adjoint_naive();

  for (int sample = 0; sample < samples; ++sample) {
    SuiteContext C{s, mode, &rep, sample, 1e-12};

    OneForm eta1{FormType::Holomorphic, Vec(d)}, eta2{FormType::Holomorphic, Vec(d)};
    for (int i = 0; i < d; ++i) {
      eta1.comp(i) = rng.cnormal();
      eta2.comp(i) = rng.cnormal();
    }
    FiberOperator We1 = wedge_op(s, eta1), We2 = wedge_op(s, eta2);
    FiberOperator Ie1 = contract_op(s, eta1), Ie2 = contract_op(s, eta2);

    // graded antisymmetry [A,B] = (−1)^{|A||B|+1}[B,A] on an odd/odd and odd/even pair
    {
      FiberOperator ab = supercommutator(We1, Ie2);
      FiberOperator ba = supercommutator(Ie2, We1);
      C.check("graded_antisymmetry_odd_odd", ab, ba * cx(1.0));  // |A||B| odd: sign +1
      FiberOperator al = supercommutator(We1, lef.L);
      FiberOperator la = supercommutator(lef.L, We1);
      C.check("graded_antisymmetry_odd_even", al, la * cx(-1.0));
    }
    C.check_zero("wedge_wedge", supercommutator(We1, We2));
    C.check_zero("contract_contract", supercommutator(Ie1, Ie2));
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) {
        C.check_zero("E_dz_I_dz", supercommutator(E[i], I[k]));
        C.check("E_dz_I_dzbar", supercommutator(E[i], Ib[k]), scalar_op(gup(i, k)));
        C.check("E_dzbar_I_dz", supercommutator(Eb[k], I[i]), scalar_op(gup(i, k)));
      }
    C.check_zero("E_eta_L", supercommutator(We1, lef.L));
    for (int i = 0; i < d; ++i) {
      C.check("I_dz_L", supercommutator(I[i], lef.L), E[i] * (-kI));
      C.check("I_dzbar_L", supercommutator(Ib[i], lef.L), Eb[i] * kI);
      C.check("E_dz_Lambda", supercommutator(E[i], Lambda), I[i] * kI);
      C.check("E_dzbar_Lambda", supercommutator(Eb[i], Lambda), Ib[i] * (-kI));
    }
    C.check_zero("I_eta_Lambda", supercommutator(Ie1, Lambda));
    // Λ = L*: inner-product adjointness on random forms
    {
      rep.checks_run++;
      double worst = 0.0;
      for (int t = 0; t < 4; ++t) {
        int p = int(rng.next_u64() % (d + 1));
        int q = int(rng.next_u64() % d);
        FiberForm a = FiberForm::random(s, p, q, rng);
        FiberForm b = FiberForm::random(s, p + lef.L.dp <= d ? p + 1 : p, q + 1, rng);
        cx lhs = lef.L.apply(a).inner(b);
        cx rhs = a.inner(Lambda.apply(b));
        double scale = std::max(1.0, a.norm() * b.norm());
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
      }
      rep.max_defect = std::max(rep.max_defect, worst);
      if (!(worst <= 1e-12)) {
        rep.pass = false;
        rep.failures.push_back({"Lambda_is_L_star", sample, worst});
      }
    }
    // mixed bidegree commutator: exhaustive for d ≤ 3, sampled tuples at d = 4
    {
      std::vector<std::array<int, 4>> tuples;
      if (d <= 3) {
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
              for (int l = 0; l < d; ++l) tuples.push_back({i, j, k, l});
      } else {
        for (int t = 0; t < 24; ++t)
          tuples.push_back({int(rng.next_u64() % d), int(rng.next_u64() % d), int(rng.next_u64() % d),
                            int(rng.next_u64() % d)});
      }
      for (auto [i, j, k, l] : tuples) {
        FiberOperator lhs = supercommutator(EEb[i][j], IIb[k][l]);
        FiberOperator rhs = E[i].compose(Ib[l]) * gup(k, j) - I[k].compose(Eb[j]) * gup(i, l);
        C.check("mixed_bidegree", lhs, rhs);
      }
    }
    // curvature-commutator expansion
    {
      Mat R = random_hermitian(d, rng);
      FiberOperator lhs = curvature_commutator(s, R);
      cx trace = (R * ginv).trace();  // Tr of the type change R_i^j = R_{is̄} g^{js̄}
      FiberOperator rhs = scalar_op(-trace);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          if (R(i, j) == cx(0)) continue;
          rhs = rhs + (Eb[j].compose(I[i]) + E[i].compose(Ib[j])) * R(i, j);
        }
      C.check("curvature_commutator_expansion", lhs, rhs);
    }
  }
  return rep;
}

}  // namespace mclab::fiber
