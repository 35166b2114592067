#pragma once

#include <vector>

#include "adalign/rng.hpp"
#include "adalign/tensor.hpp"

namespace adalign {

// Learnable K-component normal scale mixture over frequency space.
// sigma_k = exp(log_scales_k) clamped to [e^-6, e^6]; component weights
// are softmax(mixture_logits).
struct SamplerParams {
  Tensor log_scales;      // {K, d_emb}
  Tensor mixture_logits;  // {1, K}

  int k() const { return log_scales.shape[0]; }
  int dim() const { return log_scales.shape[1]; }

  SamplerParams as_leaves(Tape& tape) const;
  std::vector<Tensor*> all();
  std::vector<const Tensor*> all() const;
};

// rho = 0 (unit scales), logits = 0 (uniform mixture).
SamplerParams init_sampler(int k, int d_emb);

// How many log-scale entries sit outside the clamp's active range, i.e.
// where the trust region is binding.
int scale_clamp_count(const SamplerParams& params);
bool scale_clamp_active(const SamplerParams& params);

// Frequencies plus the stratified estimator weights. freqs and weights
// live on the tape when assembled from leaf parameters.
struct FrequencyBatch {
  Tensor freqs;                  // {M, d}
  std::vector<int> component_of; // length M, grouped by component
  Tensor weights;                // {1, M}, w_k / M_k per sample
  std::vector<int> alloc;        // M_k per component
};

// Non-differentiable half of sampling: the stratified allocation
// (largest remainder on round(w_k M), every component kept non-empty)
// and the standard-normal noise block.
struct FrequencyDraw {
  Tensor noise;  // {M, d}
  std::vector<int> component_of;
  std::vector<int> alloc;
};

FrequencyDraw draw_noise(const SamplerParams& params, int m, CounterRng& rng);

// Differentiable half: t = sigma_k (elementwise) eps and the estimator
// weights through softmax(logits). Gradients reach log_scales pathwise
// and mixture_logits through the weights.
FrequencyBatch assemble_batch(Tape& tape, const SamplerParams& params,
                              const FrequencyDraw& draw);

FrequencyBatch sample_frequencies(Tape& tape, const SamplerParams& params, int m,
                                  int d_emb, CounterRng& rng);

enum class BandKind { random, low, high };

// random: t ~ N(0, I). low/high: uniform sphere direction scaled by a
// radius uniform in [f_lo, f_hi]. Uniform estimator weights.
FrequencyBatch fixed_band_frequencies(BandKind kind, double f_lo, double f_hi, int m,
                                      int d_emb, CounterRng& rng);

// Alignment loss on the batch, exposed for the ascent step on the
// sampler parameters.
Tensor sampler_ascent_objective(Tape& tape, const FrequencyBatch& batch,
                                const Tensor& z_source, const Tensor& z_target,
                                double kappa);

}  // namespace adalign
