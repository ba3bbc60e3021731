#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace conewave {

using cplx = std::complex<double>;

// Points in the ambient vector space and in chart coordinates. Dimension is
// at most 3 everywhere in this library; the active length travels with the
// cone or grid that produced the value.
using Vec = std::array<double, 3>;

inline Vec vec0() { return {0.0, 0.0, 0.0}; }

enum class ErrorCode {
  bad_config,
  bad_input,
  unsupported,
  numerical_failure,
  io_failure,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::bad_config: return "bad_config";
    case ErrorCode::bad_input: return "bad_input";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::numerical_failure: return "numerical_failure";
    case ErrorCode::io_failure: return "io_failure";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

// Deterministic reduction: pairwise summation over a contiguous range.
// Summation order depends only on the length, never on thread scheduling.
template <typename T>
T pairwise_sum(const T* data, std::size_t n) {
  if (n == 0) return T{};
  if (n <= 16) {
    T acc = data[0];
    for (std::size_t i = 1; i < n; ++i) acc += data[i];
    return acc;
  }
  std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

template <typename T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(v.data(), v.size());
}

// Maps [0,n) over worker threads; results must be written into
// caller-allocated slots so the outcome is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

std::size_t worker_count();

// Successive-halving refinement: evaluates `value(level)` for level 0,1,...
// until two consecutive values agree within tol, returns the last value.
// `levels_used` reports how many evaluations were spent.
struct Refinement {
  double value = 0.0;
  int levels = 0;
  double last_change = 0.0;
  bool converged = false;
};

Refinement refine_until(const std::function<double(int)>& value, double tol,
                        int max_levels);

// Smooth cutoff machinery. g(s) = exp(-sharpness/s) for s > 0.
// transition(s) rises from 0 at s<=0 to 1 at s>=1 and is C-infinity.
inline double transition(double s, double sharpness) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double a = std::exp(-sharpness / s);
  double b = std::exp(-sharpness / (1.0 - s));
  return a / (a + b);
}

// Falls smoothly from 1 (t <= lo) to 0 (t >= hi).
inline double window_down(double t, double lo, double hi, double sharpness) {
  return transition((hi - t) / (hi - lo), sharpness);
}

// Bump profile on [0,1): exp(-t/(1-t)), extended by 0 for t >= 1.
inline double bump_profile(double t) {
  if (t >= 1.0) return 0.0;
  if (t <= 0.0) return 1.0;
  return std::exp(-t / (1.0 - t));
}

inline double sqr(double x) { return x * x; }

std::string format_double(double v);  // shortest round-trip decimal, %.17g cap

}  // namespace conewave
