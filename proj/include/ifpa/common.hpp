#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ifpa {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kLn2 = 0.6931471805599453;

enum class LogBase { Natural, Two };

inline double to_base(double nats, LogBase base) {
  return base == LogBase::Natural ? nats : nats / kLn2;
}

// Deterministic PRNG (splitmix64 core). std::mt19937 seeding plus the
// standard distributions are implementation-defined; traces must be
// bit-reproducible across runs, so we roll the few draws we need.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // index drawn from a normalized probability vector
  int pick(const std::vector<double>& probs) {
    double u = uniform01();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
      acc += probs[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  std::uint64_t fork(std::uint64_t stream) {
    Rng tmp(state_ ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    return tmp.next_u64();
  }

 private:
  std::uint64_t state_;
};

struct BisectResult {
  double root = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Root of a monotone decreasing function on [lo, hi] (fn(lo) >= 0 >= fn(hi)),
// to absolute tolerance `tol` on the function value.
template <typename Fn>
BisectResult bisect_decreasing(Fn&& fn, double lo, double hi, double tol, int max_iter = 200) {
  BisectResult res;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    mid = 0.5 * (lo + hi);
    double v = fn(mid);
    res.iterations = it + 1;
    if (std::abs(v) <= tol) {
      res.root = mid;
      res.converged = true;
      return res;
    }
    if (v > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= std::numeric_limits<double>::epsilon() * (1.0 + std::abs(mid))) break;
  }
  res.root = 0.5 * (lo + hi);
  // Interval collapse counts as convergence: the function value is as close
  // to zero as representable arguments allow.
  res.converged = (hi - lo) <= std::numeric_limits<double>::epsilon() * (1.0 + std::abs(mid)) * 4.0;
  return res;
}

inline double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double l2_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace ifpa
