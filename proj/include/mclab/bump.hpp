#pragma once

#include <vector>

#include "mclab/util.hpp"

namespace mclab {

// Quintic smoothstep: s(0)=0, s(1)=1, s'(0)=s'(1)=s''(0)=s''(1)=0 (C²).
double smoothstep(double t);
double smoothstep_d1(double t);
double smoothstep_d2(double t);

// C² window on one real axis: 0 outside [lo,hi], rises over [lo, lo+w],
// equals 1 on [lo+w, hi−w], falls over [hi−w, hi].
struct AxisWindow {
  double lo, hi, w;
  double value(double x) const;
  double d1(double x) const;
  double d2(double x) const;
};

// Product of axis windows over the 2d real coordinates of C^d, with
// closed-form Wirtinger first derivatives.
class TensorBump {
public:
  TensorBump() = default;
  TensorBump(std::vector<AxisWindow> axes);  // size 2d, axes ordered (x1,y1,x2,y2,...)

  int complex_dim() const { return int(axes_.size()) / 2; }
  const std::vector<AxisWindow>& axes() const { return axes_; }

  double value(const std::vector<cx>& z) const;
  cx dz(int i, const std::vector<cx>& z) const;     // ∂/∂z^i
  cx dzbar(int i, const std::vector<cx>& z) const;  // ∂/∂z̄^i

private:
  std::vector<AxisWindow> axes_;
};

// Radial C² cutoff: 1 for ρ ≤ inner, 0 for ρ ≥ outer, quintic in between.
struct RadialCutoff {
  double inner, outer;
  double value(double rho) const;
  double d1(double rho) const;
  double d2(double rho) const;
};

}  // namespace mclab
