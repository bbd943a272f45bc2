// Shared error types, warning sink, thread pool helper and the portable RNG.

#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace defuse {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad parameter value (flag or config); maps to CLI exit code 1.
class ParamError : public Error {
public:
  using Error::Error;
};

/// Malformed input file; maps to CLI exit code 2.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Structurally valid input that violates a documented invariant; exit code 2.
class DataError : public Error {
public:
  using Error::Error;
};

/// An iterative solver missed its tolerance within the iteration budget;
/// carries the final residual. Maps to CLI exit code 3.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

inline void warn(const std::string& msg) {
  std::cerr << "warning: " << msg << std::endl;
}

inline unsigned worker_count() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

/// Runs body(i) for i in [0, n), split into contiguous chunks, one thread per
/// chunk. Each index must write only to its own slots; chunking never affects
/// the result, so output is identical to the serial loop.
template <typename Body>
void parallel_for(int n, Body&& body) {
  if (n <= 0) return;
  unsigned workers = worker_count();
  if (workers <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  if (workers > static_cast<unsigned>(n)) workers = static_cast<unsigned>(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  int chunk = (n + static_cast<int>(workers) - 1) / static_cast<int>(workers);
  for (unsigned w = 0; w < workers; ++w) {
    int lo = static_cast<int>(w) * chunk;
    int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// splitmix64 generator. Seedable and portable: the integer recurrence is
/// fixed by construction and the float mapping always takes the top 53 bits,
/// so a seed produces the same stream on every platform.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Standard normal via Box-Muller (two uniforms per call, no cached spare).
  double normal() {
    double u1 = 1.0 - next_double();  // (0, 1]
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  /// Uniform integer in [0, n). Modulo bias is negligible for the small n
  /// used here and keeps the mapping trivially portable.
  int below(int n) {
    return static_cast<int>(next() % static_cast<std::uint64_t>(n));
  }

private:
  std::uint64_t state_;
};

}  // namespace defuse
