#pragma once

#include "mclab/bump.hpp"
#include "mclab/fiber.hpp"
#include "mclab/quadrature.hpp"
#include "mclab/wirtinger.hpp"

namespace mclab::est {

// Compactly supported (0,q) test form: each coefficient is a polynomial of
// low degree times a shared C² tensor bump, so all first derivatives are in
// closed form and the Dirac energy needs no numerical differentiation.
class TestForm {
public:
  TestForm(int d, int q, quad::Box support, TensorBump bump, std::vector<WPoly> polys, int rank = 1);

  static TestForm random(int d, int q, const quad::Box& support, Rng& rng, int rank = 1, int max_degree = 3);

  int dim() const { return d_; }
  int degree() const { return q_; }
  int rank() const { return r_; }
  const quad::Box& support() const { return support_; }

  bool inside_support(const std::vector<cx>& z) const;

  // smoothstep knots per real axis; quadrature splits segments here so the
  // piecewise-polynomial bump keeps Gauss-Legendre accuracy
  std::vector<std::vector<double>> axis_breaks() const;

  // coefficient s_{J,a} and its Wirtinger derivatives at z
  cx coeff(int slot, const std::vector<cx>& z) const;
  cx coeff_dz(int i, int slot, const std::vector<cx>& z) const;
  cx coeff_dzbar(int j, int slot, const std::vector<cx>& z) const;

  fiber::FiberForm value(const fiber::SpacePtr& s, const std::vector<cx>& z) const;

private:
  int d_, q_, r_;
  quad::Box support_;
  TensorBump bump_;
  std::vector<WPoly> polys_;  // C(d,q)·rank entries
  std::vector<CompiledPoly> cpolys_;
  std::vector<std::vector<CompiledPoly>> dz_;  // [slot][i]
  std::vector<std::vector<CompiledPoly>> dzb_;
};

}  // namespace mclab::est
