#pragma once

// Reference implementations for the test suite. Kept naive on purpose and
// written against std:: only, so they share no code with the library under
// test.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

// Row-major C(m,n) = A(m,k) * B(k,n), triple loop.
inline std::vector<double> matmul(const std::vector<double>& a,
                                  const std::vector<double>& b, int m, int k,
                                  int n) {
  std::vector<double> c(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p)
        acc += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(p) * n + j];
      c[static_cast<std::size_t>(i) * n + j] = acc;
    }
  return c;
}

// Central-difference gradient of a scalar function.
inline std::vector<double> central_diff(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    x[i] = v + h;
    const double fp = f(x);
    x[i] = v - h;
    const double fm = f(x);
    x[i] = v;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Empirical characteristic function of row-major samples z (n x d) at a
// single frequency t (length d), via std::complex accumulation.
inline std::complex<double> ecf(const std::vector<double>& z, int n, int d,
                                const std::vector<double>& t) {
  std::complex<double> acc(0.0, 0.0);
  for (int i = 0; i < n; ++i) {
    double dot = 0.0;
    for (int j = 0; j < d; ++j) dot += z[static_cast<std::size_t>(i) * d + j] * t[static_cast<std::size_t>(j)];
    acc += std::complex<double>(std::cos(dot), std::sin(dot));
  }
  return acc / static_cast<double>(n);
}

// Step-by-step scalar alignment value: per frequency take the kappa-split
// of the squared CF gap via complex arithmetic, then the weighted sum of
// square roots. Plain sqrt, no epsilon floor.
inline double alignment(const std::vector<double>& zs, int ns,
                        const std::vector<double>& zt, int nt, int d,
                        const std::vector<std::vector<double>>& freqs,
                        const std::vector<double>& weights, double kappa) {
  double total = 0.0;
  for (std::size_t m = 0; m < freqs.size(); ++m) {
    const std::complex<double> ps = ecf(zs, ns, d, freqs[m]);
    const std::complex<double> pt = ecf(zt, nt, d, freqs[m]);
    const double amp_term = (std::abs(ps) - std::abs(pt)) * (std::abs(ps) - std::abs(pt));
    const double phase_term =
        2.0 * std::abs(ps) * std::abs(pt) * (1.0 - std::cos(std::arg(ps) - std::arg(pt)));
    total += weights[m] * std::sqrt(kappa * amp_term + (1.0 - kappa) * phase_term);
  }
  return total;
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double mu = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return s / static_cast<double>(x.size());
}

// Largest eigenvalue of a dense symmetric matrix by shifted power
// iteration on (A + shift*I), which keeps the dominant eigenvalue
// positive for the matrices used in the tests.
inline double power_iteration_max_eig(const std::vector<double>& a, int n,
                                      double shift, int iters) {
  std::vector<double> v(static_cast<std::size_t>(n), 1.0);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      double acc = shift * v[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j)
        acc += a[static_cast<std::size_t>(i) * n + j] * v[static_cast<std::size_t>(j)];
      w[static_cast<std::size_t>(i)] = acc;
    }
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] / norm;
    double num = 0.0;
    for (int i = 0; i < n; ++i) {
      double acc = shift * v[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j)
        acc += a[static_cast<std::size_t>(i) * n + j] * v[static_cast<std::size_t>(j)];
      num += v[static_cast<std::size_t>(i)] * acc;
    }
    lambda = num;
  }
  return lambda - shift;
}

}  // namespace oracle
