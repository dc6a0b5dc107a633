#pragma once

#include <functional>
#include <vector>

#include "mclab/la.hpp"

namespace mclab::quad {

struct GaussLegendre {
  RVec nodes;    // on (-1, 1)
  RVec weights;
};
// Newton iteration on the Legendre recurrence; rules are cached.
const GaussLegendre& gl_rule(int n);

struct Box {
  std::vector<std::pair<double, double>> axes;  // real axes, lo < hi
  int dim() const { return int(axes.size()); }
  double volume() const;
  static Box cube(int dim, double lo, double hi);
};

// Tensor Gauss–Legendre integration of several integrands in one sweep.
// fn(x, out) must write n_out values for the node x. Summation order is
// fixed (per-slab Kahan accumulators merged in slab order), so results do
// not depend on the thread count. Optional per-axis breakpoints split each
// axis into segments so piecewise-smooth integrands (smoothstep bumps) keep
// spectral convergence; n_per_axis then counts nodes per segment.
std::vector<double> tensor_integrate(const Box& box, int n_per_axis,
                                     const std::function<void(const double*, double*)>& fn, int n_out,
                                     int threads = 0,
                                     const std::vector<std::vector<double>>* breaks = nullptr);

struct LadderResult {
  std::vector<double> values;
  std::vector<double> err_estimates;  // |last change| per component
  bool converged = false;
  int n_per_axis = 0;
};

// Doubles the per-axis count until the relative change drops below rtol,
// with at most max_doublings refinements.
LadderResult ladder_integrate(const Box& box, int base_n, int max_doublings, double rtol,
                              const std::function<void(const double*, double*)>& fn, int n_out,
                              int threads = 0,
                              const std::vector<std::vector<double>>* breaks = nullptr);

// Adaptive Simpson on [a,b]; plumbing for the radial Newtonian potentials.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol);

}  // namespace mclab::quad
