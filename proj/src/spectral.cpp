#include "adalign/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "adalign/errors.hpp"

namespace adalign {

std::vector<double> CfEvaluation::amplitude() const {
  const int n = m();
  std::vector<double> amp(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    amp[static_cast<std::size_t>(i)] = std::hypot(real.at(0, i), imag.at(0, i));
  return amp;
}

std::vector<double> CfEvaluation::phase() const {
  const int n = m();
  std::vector<double> ph(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    ph[static_cast<std::size_t>(i)] = std::atan2(imag.at(0, i), real.at(0, i));
  return ph;
}

CfEvaluation empirical_cf(Tape& tape, const Tensor& z, const Tensor& freqs) {
  if (z.shape[1] != freqs.shape[1])
    throw ContractError("empirical_cf: embedding and frequency dims differ");
  if (freqs.shape[0] < 1) throw ContractError("empirical_cf: need at least one frequency");
  if (z.shape[0] < 1) throw ContractError("empirical_cf: need at least one sample");
  for (double v : *freqs.data)
    if (!std::isfinite(v)) throw ContractError("empirical_cf: non-finite frequency entry");
  Tensor proj = matmul(tape, z, transpose(tape, freqs));  // {N, M}
  auto [c, s] = cos_sin(tape, proj);
  CfEvaluation cf;
  cf.real = mean_rows(tape, c);
  cf.imag = mean_rows(tape, s);
  return cf;
}

Tensor pointwise_loss(Tape& tape, const CfEvaluation& s, const CfEvaluation& t) {
  if (s.m() != t.m()) throw DimensionError("pointwise_loss: frequency counts differ");
  Tensor dr = sub(tape, s.real, t.real);
  Tensor di = sub(tape, s.imag, t.imag);
  return add(tape, elementwise_mul(tape, dr, dr), elementwise_mul(tape, di, di));
}

Tensor weighted_pointwise_loss(Tape& tape, const CfEvaluation& s, const CfEvaluation& t,
                               double kappa) {
  if (kappa < 0.0 || kappa > 1.0) throw ConfigError("kappa must lie in [0, 1]");
  if (s.m() != t.m()) throw DimensionError("weighted_pointwise_loss: frequency counts differ");
  Tensor amp_s = sqrt_eps(
      tape, add(tape, elementwise_mul(tape, s.real, s.real), elementwise_mul(tape, s.imag, s.imag)));
  Tensor amp_t = sqrt_eps(
      tape, add(tape, elementwise_mul(tape, t.real, t.real), elementwise_mul(tape, t.imag, t.imag)));
  Tensor amp_diff = sub(tape, amp_s, amp_t);
  Tensor amp_term = elementwise_mul(tape, amp_diff, amp_diff);
  Tensor dot = add(tape, elementwise_mul(tape, s.real, t.real),
                   elementwise_mul(tape, s.imag, t.imag));
  Tensor phase_term = scalar_mul(tape, 2.0, sub(tape, elementwise_mul(tape, amp_s, amp_t), dot));
  return add(tape, scalar_mul(tape, kappa, amp_term), scalar_mul(tape, 1.0 - kappa, phase_term));
}

Tensor alignment_loss(Tape& tape, const Tensor& z_source, const Tensor& z_target,
                      const Tensor& freqs, const Tensor& weights, double kappa) {
  const int m = freqs.shape[0];
  if (weights.shape[0] != 1 || weights.shape[1] != m)
    throw DimensionError("alignment_loss: weights must be {1, M}");
  double sum = 0.0;
  for (double w : *weights.data) {
    if (w < 0.0) throw ContractError("alignment_loss: negative weight");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-6)
    throw ContractError("alignment_loss: weights must sum to one");
  CfEvaluation cf_s = empirical_cf(tape, z_source, freqs);
  CfEvaluation cf_t = empirical_cf(tape, z_target, freqs);
  Tensor lk = weighted_pointwise_loss(tape, cf_s, cf_t, kappa);
  return sum_all(tape, elementwise_mul(tape, sqrt_eps(tape, lk), weights));
}

Tensor uniform_weights(int m) {
  if (m < 1) throw DimensionError("uniform_weights: need m >= 1");
  return Tensor({1, m}, 1.0 / static_cast<double>(m));
}

namespace {

double sq_dist(const double* a, const double* b, int d) {
  double acc = 0.0;
  for (int j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

double mmd_rbf(const Tensor& z_source, const Tensor& z_target, double bandwidth) {
  if (bandwidth <= 0.0) throw ConfigError("mmd_rbf: bandwidth must be positive");
  const int m = z_source.shape[0], n = z_target.shape[0], d = z_source.shape[1];
  if (z_target.shape[1] != d) throw DimensionError("mmd_rbf: dims differ");
  if (m < 2 || n < 2) throw ContractError("mmd_rbf: need at least two samples per side");
  const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);
  const double* xs = z_source.ptr();
  const double* xt = z_target.ptr();
  double kss = 0.0, ktt = 0.0, kst = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      kss += std::exp(-gamma * sq_dist(xs + static_cast<std::size_t>(i) * d,
                                       xs + static_cast<std::size_t>(j) * d, d));
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      ktt += std::exp(-gamma * sq_dist(xt + static_cast<std::size_t>(i) * d,
                                       xt + static_cast<std::size_t>(j) * d, d));
    }
  // With paired sample counts the cross term drops i == j as well, which
  // makes the estimate exactly zero on duplicate sets.
  if (m == n) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        kst += std::exp(-gamma * sq_dist(xs + static_cast<std::size_t>(i) * d,
                                         xt + static_cast<std::size_t>(j) * d, d));
      }
    return (kss + ktt - 2.0 * kst) / (static_cast<double>(m) * (m - 1));
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      kst += std::exp(-gamma * sq_dist(xs + static_cast<std::size_t>(i) * d,
                                       xt + static_cast<std::size_t>(j) * d, d));
  return kss / (static_cast<double>(m) * (m - 1)) + ktt / (static_cast<double>(n) * (n - 1)) -
         2.0 * kst / (static_cast<double>(m) * n);
}

double median_heuristic_bandwidth(const Tensor& z_source, const Tensor& z_target) {
  const int m = z_source.shape[0], n = z_target.shape[0], d = z_source.shape[1];
  if (z_target.shape[1] != d) throw DimensionError("median_heuristic_bandwidth: dims differ");
  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(m + n) * d);
  pooled.insert(pooled.end(), z_source.data->begin(), z_source.data->end());
  pooled.insert(pooled.end(), z_target.data->begin(), z_target.data->end());
  const int total = m + n;
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(total) * (total - 1) / 2);
  for (int i = 0; i < total; ++i)
    for (int j = i + 1; j < total; ++j)
      dists.push_back(std::sqrt(sq_dist(pooled.data() + static_cast<std::size_t>(i) * d,
                                        pooled.data() + static_cast<std::size_t>(j) * d, d)));
  if (dists.empty()) return 1.0;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2),
                   dists.end());
  const double med = dists[dists.size() / 2];
  return med > 0.0 ? med : 1.0;
}

}  // namespace adalign
