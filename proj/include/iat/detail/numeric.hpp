#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <numbers>
#include <span>
#include <thread>
#include <vector>

namespace iat::detail {

/// Neumaier-compensated running sum. Order of additions is the caller's, so
/// results are reproducible for a fixed traversal.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double sum(std::span<const double> values) {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

inline double norm_sq(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(norm_sq(a, b));
}

inline double norm(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return std::sqrt(acc);
}

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Runs fn(i) for i in [0, n). Each index is visited exactly once; callers
/// write only to slot i, so the result does not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < n; i += threads) fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// Adaptive Simpson quadrature on [a, b].
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 48) {
  struct Rec {
    static double run(F& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth) {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m);
      const double rm = 0.5 * (m + b);
      const double flm = f(lm);
      const double frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
      }
      return run(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
             run(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  };
  if (b <= a) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Rec::run(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace iat::detail
