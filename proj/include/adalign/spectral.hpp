#pragma once

#include <vector>

#include "adalign/tensor.hpp"

namespace adalign {

// Empirical characteristic function of one embedding set at M
// frequencies. real/imag live on the tape when the inputs do; amplitude
// and phase are plain derived views for reporting.
struct CfEvaluation {
  Tensor real;  // {1, M}
  Tensor imag;  // {1, M}

  int m() const { return real.shape[1]; }
  std::vector<double> amplitude() const;
  std::vector<double> phase() const;  // atan2, in (-pi, pi]
};

// real_m = mean_n cos(t_m . z_n), imag_m = mean_n sin(t_m . z_n).
CfEvaluation empirical_cf(Tape& tape, const Tensor& z, const Tensor& freqs);

// |Psi_S - Psi_T|^2 per frequency, {1, M}.
Tensor pointwise_loss(Tape& tape, const CfEvaluation& s, const CfEvaluation& t);

// kappa * (|Psi_S| - |Psi_T|)^2 + (1 - kappa) * 2 |Psi_S||Psi_T| (1 - cos dtheta),
// with the phase term taken from real/imag dot products so gradients stay
// smooth. At kappa = 0.5 this is exactly half of pointwise_loss.
Tensor weighted_pointwise_loss(Tape& tape, const CfEvaluation& s, const CfEvaluation& t,
                               double kappa);

// sum_m weights_m * sqrt_eps(l_kappa(t_m)). weights is {1, M},
// non-negative, summing to one.
Tensor alignment_loss(Tape& tape, const Tensor& z_source, const Tensor& z_target,
                      const Tensor& freqs, const Tensor& weights, double kappa);

Tensor uniform_weights(int m);

// Unbiased squared MMD with kernel exp(-|x-y|^2 / (2 bw^2)). May dip
// slightly below zero; callers clamp for display only.
double mmd_rbf(const Tensor& z_source, const Tensor& z_target, double bandwidth);

// Median of pooled pairwise distances; falls back to 1 when degenerate.
double median_heuristic_bandwidth(const Tensor& z_source, const Tensor& z_target);

}  // namespace adalign
