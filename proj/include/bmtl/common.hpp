#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bmtl {

using cplx = std::complex<double>;
using Index = std::int64_t;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Raised for every rejected input or configuration.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

// Warn-only hypothesis checks; silenced by setting BMTL_QUIET.
void warn(const std::string& what);

// 1/p' with the conventions 1/p' = 0 for p <= 1.
inline double dual_inverse(double p) { return p > 1.0 ? 1.0 - 1.0 / p : 0.0; }

// min(1, p, q) appearing in every decay threshold.
inline double min_exponent(double p, double q) { return std::min({1.0, p, q}); }

}  // namespace bmtl
