#pragma once

#include <array>
#include <map>
#include <vector>

#include "mclab/util.hpp"

namespace mclab {

// Polynomial in the Wirtinger variables (z^1..z^d, z̄^1..z̄^d) with complex
// coefficients. Exponents are stored as a flat vector (first d slots: z
// powers, next d: z̄ powers). Supports exact partial derivatives of any
// order, which is what gives the built-in weight families analytic
// derivative access up to order three and beyond.
class WPoly {
public:
  WPoly() : d_(0) {}
  explicit WPoly(int d) : d_(d) {}

  int dim() const { return d_; }
  bool empty() const { return terms_.empty(); }

  static WPoly constant(int d, cx c);
  static WPoly var_z(int d, int i);     // z^i
  static WPoly var_zbar(int d, int i);  // z̄^i

  void add_term(const std::vector<int>& exps, cx c);

  WPoly operator+(const WPoly& o) const;
  WPoly operator-(const WPoly& o) const;
  WPoly operator*(const WPoly& o) const;
  WPoly operator*(cx c) const;
  WPoly& operator+=(const WPoly& o) { return *this = *this + o; }

  WPoly conjugate() const;  // swaps z and z̄ exponents, conjugates coeffs
  WPoly dz(int i) const;    // ∂/∂z^i
  WPoly dzbar(int i) const; // ∂/∂z̄^i

  cx eval(const std::vector<cx>& z) const;

  // substitution z_i ↦ Σ_j M(i,j) z_j (and conjugates on the z̄ slots)
  WPoly linear_substitution(const std::vector<std::vector<cx>>& M) const;

  // true when P equals its own conjugate (real-valued on all of C^d)
  bool is_real(double tol = 1e-13) const;

  std::size_t term_count() const { return terms_.size(); }
  const std::map<std::vector<int>, cx>& terms() const { return terms_; }

private:
  int d_;
  // exponent vector (size 2d) -> coefficient
  std::map<std::vector<int>, cx> terms_;
  void prune();
};

// Convenience: |f|^2 = f * conj(f) for a z-holomorphic polynomial f.
WPoly norm_squared(const WPoly& f);

// Flat-array evaluation form of a WPoly for hot loops (quadrature nodes).
class CompiledPoly {
public:
  CompiledPoly() = default;
  explicit CompiledPoly(const WPoly& p);
  cx eval(const std::vector<cx>& z) const;
  bool empty() const { return coefs_.empty(); }

private:
  int d_ = 0;
  std::vector<int> exps_;  // 2d entries per term
  std::vector<cx> coefs_;
};

}  // namespace mclab
