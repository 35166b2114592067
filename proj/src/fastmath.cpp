#include "adalign/fastmath.hpp"

#include <cmath>

namespace adalign {

namespace {

// Argument reduction constants: pi/2 split into three parts so that
// x - k*pi/2 stays accurate for |k| up to ~2^20 (Cody-Waite).
constexpr double kInvPio2 = 6.36619772367581382433e-01;
constexpr double kPio2A = 1.57079632673412561417e+00;
constexpr double kPio2B = 6.07710050630396597660e-11;
constexpr double kPio2C = 2.02226624879595063154e-21;

// Polynomial kernels on [-pi/4, pi/4] (fdlibm coefficients).
constexpr double kS1 = -1.66666666666666324348e-01;
constexpr double kS2 = 8.33333333332248946124e-03;
constexpr double kS3 = -1.98412698298579493134e-04;
constexpr double kS4 = 2.75573137070700676789e-06;
constexpr double kS5 = -2.50507602534068634195e-08;
constexpr double kS6 = 1.58969099521155010221e-10;

constexpr double kC1 = 4.16666666666666019037e-02;
constexpr double kC2 = -1.38888888888741095749e-03;
constexpr double kC3 = 2.48015872894767294178e-05;
constexpr double kC4 = -2.75573143513906633035e-07;
constexpr double kC5 = 2.08757232129817482790e-09;
constexpr double kC6 = -1.13596475577881948265e-11;

constexpr double kFastLimit = 1.0e6;

inline void sincos_block(const double* __restrict x, double* __restrict s_out,
                         double* __restrict c_out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double xi = x[i];
    double kd = std::nearbyint(xi * kInvPio2);
    double r = xi - kd * kPio2A;
    r -= kd * kPio2B;
    r -= kd * kPio2C;
    double z = r * r;
    double ps =
        r + r * z * (kS1 + z * (kS2 + z * (kS3 + z * (kS4 + z * (kS5 + z * kS6)))));
    double pc = 1.0 - 0.5 * z +
                z * z * (kC1 + z * (kC2 + z * (kC3 + z * (kC4 + z * (kC5 + z * kC6)))));
    // quadrant q = k mod 4, exact in double arithmetic
    double q = kd - 4.0 * std::floor(kd * 0.25);
    bool swap = (q == 1.0) || (q == 3.0);
    double s0 = swap ? pc : ps;
    double c0 = swap ? ps : pc;
    double ssign = (q >= 2.0) ? -1.0 : 1.0;
    double csign = (q == 1.0 || q == 2.0) ? -1.0 : 1.0;
    s_out[i] = ssign * s0;
    c_out[i] = csign * c0;
  }
}

}  // namespace

void sincos_array(const double* x, double* sin_out, double* cos_out, std::size_t n) {
  constexpr std::size_t kBlock = 1024;
  std::size_t i = 0;
  while (i < n) {
    std::size_t m = (n - i < kBlock) ? (n - i) : kBlock;
    bool fast = true;
    for (std::size_t j = 0; j < m; ++j) {
      double a = std::fabs(x[i + j]);
      if (!(a <= kFastLimit)) {
        fast = false;
        break;
      }
    }
    if (fast) {
      sincos_block(x + i, sin_out + i, cos_out + i, m);
    } else {
      for (std::size_t j = 0; j < m; ++j) {
        sin_out[i + j] = std::sin(x[i + j]);
        cos_out[i + j] = std::cos(x[i + j]);
      }
    }
    i += m;
  }
}

}  // namespace adalign
