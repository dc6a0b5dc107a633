#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mclab {

using cx = std::complex<double>;

// Deterministic generator (splitmix64 core). Distributions are hand-rolled so
// that streams are bit-identical across platforms and standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (cached second value)
  double normal();

  cx cnormal() { return cx(normal(), normal()); }

  // derive an independent stream (for parallel trials keyed by index)
  Rng fork(std::uint64_t key) const {
    Rng r(state_ ^ (0xd1342543de82ef95ULL * (key + 1)));
    r.next_u64();
    return r;
  }

private:
  std::uint64_t state_;
  bool have_cache_ = false;
  double cache_ = 0.0;
};

// Runs f(i) for i in [0,n) on up to `threads` workers. Results that must be
// reduced should be written to per-index slots by the caller; the helper only
// guarantees each index runs exactly once. Thread count comes from
// MCLAB_THREADS when `threads` is 0.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f, int threads = 0);

int env_thread_count();

struct McLabError : std::runtime_error {
  explicit McLabError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw McLabError(what);
}

// Fixed-order pairwise summation; deterministic regardless of threading.
double pairwise_sum(const std::vector<double>& v);
cx pairwise_sum(const std::vector<cx>& v);

std::string format_double(double x);

}  // namespace mclab
