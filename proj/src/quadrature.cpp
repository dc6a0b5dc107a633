#include "mclab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "mclab/util.hpp"

namespace mclab::quad {

const GaussLegendre& gl_rule(int n) {
  static std::map<int, GaussLegendre> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lk(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  require(n >= 1, "gl_rule: need n >= 1");
  GaussLegendre r;
  r.nodes.resize(n);
  r.weights.resize(n);
  int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes(i) = -x;
    r.nodes(n - 1 - i) = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    r.weights(i) = w;
    r.weights(n - 1 - i) = w;
  }
  return cache.emplace(n, std::move(r)).first->second;
}

double Box::volume() const {
  double v = 1.0;
  for (const auto& [lo, hi] : axes) v *= (hi - lo);
  return v;
}

Box Box::cube(int dim, double lo, double hi) {
  Box b;
  b.axes.assign(dim, {lo, hi});
  return b;
}

std::vector<double> tensor_integrate(const Box& box, int n_per_axis,
                                     const std::function<void(const double*, double*)>& fn, int n_out,
                                     int threads, const std::vector<std::vector<double>>* breaks) {
  int dim = box.dim();
  require(dim >= 1, "tensor_integrate: empty box");
  require(n_per_axis >= 1 && n_out >= 1, "tensor_integrate: bad sizes");
  const GaussLegendre& rule = gl_rule(n_per_axis);
  std::vector<std::vector<double>> xs(dim), ws(dim);
  for (int a = 0; a < dim; ++a) {
    auto [lo, hi] = box.axes[a];
    require(hi > lo, "tensor_integrate: degenerate axis");
    std::vector<double> knots{lo, hi};
    if (breaks) {
      for (double b : (*breaks)[a])
        if (b > lo + 1e-14 && b < hi - 1e-14) knots.push_back(b);
      std::sort(knots.begin(), knots.end());
    }
    for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
      double mid = 0.5 * (knots[seg] + knots[seg + 1]);
      double half = 0.5 * (knots[seg + 1] - knots[seg]);
      for (int i = 0; i < n_per_axis; ++i) {
        xs[a].push_back(mid + half * rule.nodes(i));
        ws[a].push_back(half * rule.weights(i));
      }
    }
  }
  long inner = 1;
  for (int a = 1; a < dim; ++a) inner *= long(xs[a].size());
  std::size_t n0 = xs[0].size();

  // one slab per outermost node; each slab keeps its own Kahan accumulators
  std::vector<std::vector<double>> slab_sum(n0, std::vector<double>(n_out, 0.0));
  parallel_for(n0, [&](std::size_t s0) {
    std::vector<double> acc(n_out, 0.0), comp(n_out, 0.0), val(n_out);
    std::vector<double> x(dim);
    x[0] = xs[0][s0];
    for (long it = 0; it < inner; ++it) {
      long rem = it;
      double w = ws[0][s0];
      for (int a = dim - 1; a >= 1; --a) {
        int i = int(rem % long(xs[a].size()));
        rem /= long(xs[a].size());
        x[a] = xs[a][i];
        w *= ws[a][i];
      }
      for (int c = 0; c < n_out; ++c) val[c] = 0.0;
      fn(x.data(), val.data());
      for (int c = 0; c < n_out; ++c) {
        double y = w * val[c] - comp[c];
        double t = acc[c] + y;
        comp[c] = (t - acc[c]) - y;
        acc[c] = t;
      }
    }
    slab_sum[s0] = acc;
  }, threads);

  std::vector<double> out(n_out, 0.0);
  for (int c = 0; c < n_out; ++c) {
    std::vector<double> parts(n0);
    for (std::size_t s = 0; s < n0; ++s) parts[s] = slab_sum[s][c];
    out[c] = pairwise_sum(parts);
  }
  return out;
}

LadderResult ladder_integrate(const Box& box, int base_n, int max_doublings, double rtol,
                              const std::function<void(const double*, double*)>& fn, int n_out,
                              int threads, const std::vector<std::vector<double>>* breaks) {
  LadderResult res;
  int n = base_n;
  res.values = tensor_integrate(box, n, fn, n_out, threads, breaks);
  res.err_estimates.assign(n_out, std::abs(rtol));
  for (int step = 0; step < max_doublings; ++step) {
    int n2 = 2 * n;
    std::vector<double> v2 = tensor_integrate(box, n2, fn, n_out, threads, breaks);
    bool ok = true;
    for (int c = 0; c < n_out; ++c) {
      double change = std::abs(v2[c] - res.values[c]);
      res.err_estimates[c] = change;
      if (change > rtol * std::max(1.0, std::abs(v2[c]))) ok = false;
    }
    res.values = v2;
    n = n2;
    if (ok) {
      res.converged = true;
      res.n_per_axis = n;
      return res;
    }
  }
  res.converged = false;
  res.n_per_axis = n;
  return res;
}

namespace {
double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_rec(const std::function<double(double)>& f, double a, double fa, double b, double fb, double m,
                    double fm, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(a, fa, m, fm, flm);
  double right = simpson(m, fm, b, fb, frm);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = simpson(a, fa, b, fb, fm);
  return adaptive_rec(f, a, fa, b, fb, m, fm, whole, tol, 48);
}

}  // namespace mclab::quad
