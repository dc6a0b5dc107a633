#include "mclab/util.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace mclab {

double Rng::normal() {
  if (have_cache_) {
    have_cache_ = false;
    return cache_;
  }
  // Box-Muller; u1 kept away from 0 so log stays finite.
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 1e-300);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  cache_ = r * std::sin(a);
  have_cache_ = true;
  return r * std::cos(a);
}

int env_thread_count() {
  const char* s = std::getenv("MCLAB_THREADS");
  if (s) {
    int n = std::atoi(s);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? int(hw) : 1;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f, int threads) {
  if (threads <= 0) threads = env_thread_count();
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::size_t nt = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::exception_ptr err = nullptr;
  std::mutex* mtx = new std::mutex;
  for (std::size_t t = 0; t < nt; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = t; i < n; i += nt) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(*mtx);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  delete mtx;
  if (err) std::rethrow_exception(err);
}

namespace {
template <typename T>
T pairwise_impl(const T* v, std::size_t n) {
  if (n <= 8) {
    T s{};
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_impl(v, h) + pairwise_impl(v + h, n - h);
}
}  // namespace

double pairwise_sum(const std::vector<double>& v) { return v.empty() ? 0.0 : pairwise_impl(v.data(), v.size()); }
cx pairwise_sum(const std::vector<cx>& v) { return v.empty() ? cx(0) : pairwise_impl(v.data(), v.size()); }

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace mclab
