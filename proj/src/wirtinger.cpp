#include "mclab/wirtinger.hpp"

#include <cmath>

namespace mclab {

WPoly WPoly::constant(int d, cx c) {
  WPoly p(d);
  p.add_term(std::vector<int>(2 * d, 0), c);
  return p;
}

WPoly WPoly::var_z(int d, int i) {
  require(i >= 0 && i < d, "WPoly::var_z index");
  WPoly p(d);
  std::vector<int> e(2 * d, 0);
  e[i] = 1;
  p.add_term(e, cx(1));
  return p;
}

WPoly WPoly::var_zbar(int d, int i) {
  require(i >= 0 && i < d, "WPoly::var_zbar index");
  WPoly p(d);
  std::vector<int> e(2 * d, 0);
  e[d + i] = 1;
  p.add_term(e, cx(1));
  return p;
}

void WPoly::add_term(const std::vector<int>& exps, cx c) {
  require(int(exps.size()) == 2 * d_, "WPoly::add_term exponent size");
  auto it = terms_.find(exps);
  if (it == terms_.end())
    terms_.emplace(exps, c);
  else
    it->second += c;
}

void WPoly::prune() {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) == 0.0)
      it = terms_.erase(it);
    else
      ++it;
  }
}

WPoly WPoly::operator+(const WPoly& o) const {
  require(d_ == o.d_ || empty() || o.empty(), "WPoly dimension mismatch");
  WPoly r = empty() ? WPoly(o.d_) : WPoly(d_);
  r.terms_ = terms_;
  for (const auto& [e, c] : o.terms_) {
    auto it = r.terms_.find(e);
    if (it == r.terms_.end())
      r.terms_.emplace(e, c);
    else
      it->second += c;
  }
  r.prune();
  return r;
}

WPoly WPoly::operator-(const WPoly& o) const { return *this + o * cx(-1); }

WPoly WPoly::operator*(const WPoly& o) const {
  require(d_ == o.d_, "WPoly dimension mismatch");
  WPoly r(d_);
  for (const auto& [e1, c1] : terms_)
    for (const auto& [e2, c2] : o.terms_) {
      std::vector<int> e(2 * d_);
      for (int k = 0; k < 2 * d_; ++k) e[k] = e1[k] + e2[k];
      auto it = r.terms_.find(e);
      if (it == r.terms_.end())
        r.terms_.emplace(std::move(e), c1 * c2);
      else
        it->second += c1 * c2;
    }
  r.prune();
  return r;
}

WPoly WPoly::operator*(cx c) const {
  WPoly r(d_);
  for (const auto& [e, v] : terms_) r.terms_.emplace(e, v * c);
  r.prune();
  return r;
}

WPoly WPoly::conjugate() const {
  WPoly r(d_);
  for (const auto& [e, c] : terms_) {
    std::vector<int> f(2 * d_);
    for (int i = 0; i < d_; ++i) {
      f[i] = e[d_ + i];
      f[d_ + i] = e[i];
    }
    r.terms_.emplace(std::move(f), std::conj(c));
  }
  return r;
}

WPoly WPoly::dz(int i) const {
  WPoly r(d_);
  for (const auto& [e, c] : terms_) {
    if (e[i] == 0) continue;
    std::vector<int> f = e;
    f[i] -= 1;
    r.add_term(f, c * double(e[i]));
  }
  r.prune();
  return r;
}

WPoly WPoly::dzbar(int i) const {
  WPoly r(d_);
  for (const auto& [e, c] : terms_) {
    if (e[d_ + i] == 0) continue;
    std::vector<int> f = e;
    f[d_ + i] -= 1;
    r.add_term(f, c * double(e[d_ + i]));
  }
  r.prune();
  return r;
}

cx WPoly::eval(const std::vector<cx>& z) const {
  require(int(z.size()) == d_, "WPoly::eval point dimension");
  cx s(0);
  for (const auto& [e, c] : terms_) {
    cx t = c;
    for (int i = 0; i < d_; ++i) {
      for (int k = 0; k < e[i]; ++k) t *= z[i];
      for (int k = 0; k < e[d_ + i]; ++k) t *= std::conj(z[i]);
    }
    s += t;
  }
  return s;
}

WPoly WPoly::linear_substitution(const std::vector<std::vector<cx>>& M) const {
  require(int(M.size()) == d_, "linear_substitution: matrix rows");
  std::vector<WPoly> repl(d_), repl_bar(d_);
  for (int i = 0; i < d_; ++i) {
    require(int(M[i].size()) == d_, "linear_substitution: matrix cols");
    WPoly r(d_), rb(d_);
    for (int j = 0; j < d_; ++j) {
      r += WPoly::var_z(d_, j) * M[i][j];
      rb += WPoly::var_zbar(d_, j) * std::conj(M[i][j]);
    }
    repl[i] = r;
    repl_bar[i] = rb;
  }
  WPoly out(d_);
  for (const auto& [e, c] : terms_) {
    WPoly term = WPoly::constant(d_, c);
    for (int i = 0; i < d_; ++i) {
      for (int k = 0; k < e[i]; ++k) term = term * repl[i];
      for (int k = 0; k < e[d_ + i]; ++k) term = term * repl_bar[i];
    }
    out += term;
  }
  return out;
}

bool WPoly::is_real(double tol) const {
  WPoly diff = *this - conjugate();
  double m = 0;
  for (const auto& [e, c] : diff.terms_) m = std::max(m, std::abs(c));
  return m <= tol;
}

WPoly norm_squared(const WPoly& f) { return f * f.conjugate(); }

CompiledPoly::CompiledPoly(const WPoly& p) : d_(p.dim()) {
  for (const auto& [e, c] : p.terms()) {
    exps_.insert(exps_.end(), e.begin(), e.end());
    coefs_.push_back(c);
  }
}

cx CompiledPoly::eval(const std::vector<cx>& z) const {
  cx acc(0);
  const int* e = exps_.data();
  for (std::size_t t = 0; t < coefs_.size(); ++t, e += 2 * d_) {
    cx term = coefs_[t];
    for (int i = 0; i < d_; ++i) {
      for (int k = 0; k < e[i]; ++k) term *= z[i];
      if (e[d_ + i]) {
        cx zb = std::conj(z[i]);
        for (int k = 0; k < e[d_ + i]; ++k) term *= zb;
      }
    }
    acc += term;
  }
  return acc;
}

}  // namespace mclab
