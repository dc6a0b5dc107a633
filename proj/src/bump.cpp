#include "mclab/bump.hpp"

#include <cmath>

namespace mclab {

double smoothstep(double t) {
  if (t <= 0) return 0.0;
  if (t >= 1) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double smoothstep_d1(double t) {
  if (t <= 0 || t >= 1) return 0.0;
  double u = t * (1.0 - t);
  return 30.0 * u * u;
}

double smoothstep_d2(double t) {
  if (t <= 0 || t >= 1) return 0.0;
  return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
}

double AxisWindow::value(double x) const {
  if (x <= lo || x >= hi) return 0.0;
  if (x < lo + w) return smoothstep((x - lo) / w);
  if (x > hi - w) return smoothstep((hi - x) / w);
  return 1.0;
}

double AxisWindow::d1(double x) const {
  if (x <= lo || x >= hi) return 0.0;
  if (x < lo + w) return smoothstep_d1((x - lo) / w) / w;
  if (x > hi - w) return -smoothstep_d1((hi - x) / w) / w;
  return 0.0;
}

double AxisWindow::d2(double x) const {
  if (x <= lo || x >= hi) return 0.0;
  if (x < lo + w) return smoothstep_d2((x - lo) / w) / (w * w);
  if (x > hi - w) return smoothstep_d2((hi - x) / w) / (w * w);
  return 0.0;
}

TensorBump::TensorBump(std::vector<AxisWindow> axes) : axes_(std::move(axes)) {
  require(axes_.size() % 2 == 0, "TensorBump: need 2d axes");
  for (const auto& a : axes_) require(a.hi - a.lo > 2.0 * a.w && a.w > 0, "TensorBump: window too wide");
}

double TensorBump::value(const std::vector<cx>& z) const {
  double v = 1.0;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    double x = (k % 2 == 0) ? z[k / 2].real() : z[k / 2].imag();
    v *= axes_[k].value(x);
    if (v == 0.0) return 0.0;
  }
  return v;
}

// ∂/∂z = (∂x − i ∂y)/2, ∂/∂z̄ = (∂x + i ∂y)/2 on the i-th complex axis
cx TensorBump::dz(int i, const std::vector<cx>& z) const {
  double rest = 1.0;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    if (int(k / 2) == i) continue;
    double x = (k % 2 == 0) ? z[k / 2].real() : z[k / 2].imag();
    rest *= axes_[k].value(x);
  }
  double vx = axes_[2 * i].value(z[i].real()), vy = axes_[2 * i + 1].value(z[i].imag());
  double dx = axes_[2 * i].d1(z[i].real()) * vy;
  double dy = vx * axes_[2 * i + 1].d1(z[i].imag());
  return 0.5 * rest * cx(dx, -dy);
}

cx TensorBump::dzbar(int i, const std::vector<cx>& z) const { return std::conj(dz(i, z)); }

double RadialCutoff::value(double rho) const {
  if (rho <= inner) return 1.0;
  if (rho >= outer) return 0.0;
  return smoothstep((outer - rho) / (outer - inner));
}

double RadialCutoff::d1(double rho) const {
  if (rho <= inner || rho >= outer) return 0.0;
  return -smoothstep_d1((outer - rho) / (outer - inner)) / (outer - inner);
}

double RadialCutoff::d2(double rho) const {
  if (rho <= inner || rho >= outer) return 0.0;
  double s = outer - inner;
  return smoothstep_d2((outer - rho) / s) / (s * s);
}

}  // namespace mclab
