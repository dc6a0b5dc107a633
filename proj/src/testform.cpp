#include "mclab/testform.hpp"

namespace mclab::est {

TestForm::TestForm(int d, int q, quad::Box support, TensorBump bump, std::vector<WPoly> polys, int rank)
    : d_(d), q_(q), r_(rank), support_(std::move(support)), bump_(std::move(bump)), polys_(std::move(polys)) {
  require(support_.dim() == 2 * d_, "TestForm: support box needs 2d axes");
  require(int(polys_.size()) == int(fiber::binom(d_, q_)) * r_, "TestForm: coefficient count");
  dz_.resize(polys_.size());
  dzb_.resize(polys_.size());
  cpolys_.reserve(polys_.size());
  for (std::size_t s = 0; s < polys_.size(); ++s) {
    cpolys_.emplace_back(polys_[s]);
    dz_[s].resize(d_);
    dzb_[s].resize(d_);
    for (int i = 0; i < d_; ++i) {
      dz_[s][i] = CompiledPoly(polys_[s].dz(i));
      dzb_[s][i] = CompiledPoly(polys_[s].dzbar(i));
    }
  }
}

TestForm TestForm::random(int d, int q, const quad::Box& support, Rng& rng, int rank, int max_degree) {
  int n = int(fiber::binom(d, q)) * rank;
  std::vector<WPoly> polys(n, WPoly(d));
  for (int s = 0; s < n; ++s) {
    int terms = 2 + int(rng.next_u64() % 3);
    for (int t = 0; t < terms; ++t) {
      std::vector<int> e(2 * d, 0);
      int deg = int(rng.next_u64() % (max_degree + 1));
      for (int u = 0; u < deg; ++u) e[int(rng.next_u64() % (2 * d))] += 1;
      polys[s].add_term(e, 0.7 * rng.cnormal());
    }
    // keep a constant part so the form rarely degenerates
    polys[s].add_term(std::vector<int>(2 * d, 0), rng.cnormal());
  }
  std::vector<AxisWindow> axes(2 * d);
  for (int a = 0; a < 2 * d; ++a) {
    auto [lo, hi] = support.axes[a];
    axes[a] = AxisWindow{lo, hi, 0.3 * (hi - lo)};
  }
  return TestForm(d, q, support, TensorBump(axes), std::move(polys), rank);
}

std::vector<std::vector<double>> TestForm::axis_breaks() const {
  std::vector<std::vector<double>> breaks(2 * d_);
  for (int a = 0; a < 2 * d_; ++a) {
    const AxisWindow& w = bump_.axes()[a];
    breaks[a] = {w.lo + w.w, w.hi - w.w};
  }
  return breaks;
}

bool TestForm::inside_support(const std::vector<cx>& z) const {
  for (int i = 0; i < d_; ++i) {
    if (z[i].real() <= support_.axes[2 * i].first || z[i].real() >= support_.axes[2 * i].second) return false;
    if (z[i].imag() <= support_.axes[2 * i + 1].first || z[i].imag() >= support_.axes[2 * i + 1].second)
      return false;
  }
  return true;
}

cx TestForm::coeff(int slot, const std::vector<cx>& z) const { return cpolys_[slot].eval(z) * bump_.value(z); }

cx TestForm::coeff_dz(int i, int slot, const std::vector<cx>& z) const {
  return dz_[slot][i].eval(z) * bump_.value(z) + cpolys_[slot].eval(z) * bump_.dz(i, z);
}

cx TestForm::coeff_dzbar(int j, int slot, const std::vector<cx>& z) const {
  return dzb_[slot][j].eval(z) * bump_.value(z) + cpolys_[slot].eval(z) * bump_.dzbar(j, z);
}

fiber::FiberForm TestForm::value(const fiber::SpacePtr& s, const std::vector<cx>& z) const {
  require(s->d() == d_ && s->rank() == r_, "TestForm::value: fiber space mismatch");
  fiber::FiberForm f = fiber::FiberForm::zero(s, 0, q_);
  for (int slot = 0; slot < int(polys_.size()); ++slot) f.coeffs(slot) = coeff(slot, z);
  return f;
}

}  // namespace mclab::est
