#include "adalign/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "adalign/errors.hpp"
#include "adalign/spectral.hpp"

namespace adalign {

namespace {

constexpr double kLogScaleLo = -6.0;
constexpr double kLogScaleHi = 6.0;

void check_params(const SamplerParams& params) {
  if (params.log_scales.shape.size() != 2 || params.mixture_logits.shape.size() != 2)
    throw ContractError("sampler: parameters must be 2-d tensors");
  if (params.mixture_logits.shape[0] != 1)
    throw ContractError("sampler: mixture_logits must have shape {1, K}");
  if (params.mixture_logits.shape[1] != params.log_scales.shape[0])
    throw ContractError("sampler: mixture_logits width must match log_scales rows");
  if (params.k() < 1 || params.dim() < 1)
    throw ContractError("sampler: need at least one component and one dimension");
}

std::vector<double> softmax_values(const Tensor& logits) {
  const double* v = logits.ptr();
  const int k = logits.shape[1];
  double mx = v[0];
  for (int i = 1; i < k; ++i) mx = std::max(mx, v[i]);
  std::vector<double> w(k);
  double z = 0.0;
  for (int i = 0; i < k; ++i) {
    w[i] = std::exp(v[i] - mx);
    z += w[i];
  }
  for (int i = 0; i < k; ++i) w[i] /= z;
  return w;
}

// Largest-remainder allocation of m samples across the mixture weights,
// with every component bumped to at least one sample so its estimator
// weight w_k / M_k stays defined.
std::vector<int> allocate(const std::vector<double>& w, int m) {
  const int k = static_cast<int>(w.size());
  std::vector<int> alloc(k);
  std::vector<std::pair<double, int>> rem(k);
  int assigned = 0;
  for (int i = 0; i < k; ++i) {
    const double exact = w[i] * m;
    alloc[i] = static_cast<int>(std::floor(exact));
    assigned += alloc[i];
    rem[i] = {-(exact - alloc[i]), i};
  }
  std::sort(rem.begin(), rem.end());
  for (int i = 0; assigned < m && i < k; ++i) {
    ++alloc[rem[i].second];
    ++assigned;
  }
  while (assigned > m) {
    int big = static_cast<int>(std::max_element(alloc.begin(), alloc.end()) - alloc.begin());
    --alloc[big];
    --assigned;
  }
  for (int i = 0; i < k; ++i) {
    if (alloc[i] > 0) continue;
    int big = static_cast<int>(std::max_element(alloc.begin(), alloc.end()) - alloc.begin());
    --alloc[big];
    ++alloc[i];
  }
  return alloc;
}

Tensor full_like(const Tensor& t, double value) { return Tensor(t.shape, value); }

// clamp(x, lo, hi) = lo + relu(x - lo) - relu(x - hi), recorded on the
// tape so the gradient vanishes outside the trust region.
Tensor clamped_scales(Tape& tape, const Tensor& log_scales) {
  Tensor above_lo = relu(tape, add(tape, log_scales, full_like(log_scales, -kLogScaleLo)));
  Tensor above_hi = relu(tape, add(tape, log_scales, full_like(log_scales, -kLogScaleHi)));
  Tensor clamped =
      add(tape, sub(tape, above_lo, above_hi), full_like(log_scales, kLogScaleLo));
  return exp(tape, clamped);
}

}  // namespace

SamplerParams SamplerParams::as_leaves(Tape& tape) const {
  SamplerParams out;
  out.log_scales = tape.leaf(log_scales);
  out.mixture_logits = tape.leaf(mixture_logits);
  return out;
}

std::vector<Tensor*> SamplerParams::all() { return {&log_scales, &mixture_logits}; }

std::vector<const Tensor*> SamplerParams::all() const {
  return {&log_scales, &mixture_logits};
}

SamplerParams init_sampler(int k, int d_emb) {
  if (k < 1 || d_emb < 1) throw ConfigError("sampler: k and d_emb must be positive");
  SamplerParams params;
  params.log_scales = Tensor({k, d_emb});
  params.mixture_logits = Tensor({1, k});
  return params;
}

int scale_clamp_count(const SamplerParams& params) {
  int count = 0;
  for (double v : *params.log_scales.data)
    if (v < kLogScaleLo || v > kLogScaleHi) ++count;
  return count;
}

bool scale_clamp_active(const SamplerParams& params) {
  return scale_clamp_count(params) > 0;
}

FrequencyDraw draw_noise(const SamplerParams& params, int m, CounterRng& rng) {
  check_params(params);
  if (m < params.k())
    throw ConfigError("sampler: batch size must be at least the component count");
  const int d = params.dim();
  FrequencyDraw draw;
  draw.alloc = allocate(softmax_values(params.mixture_logits), m);
  draw.noise = Tensor({m, d});
  double* out = draw.noise.ptr();
  draw.component_of.reserve(m);
  int row = 0;
  for (int k = 0; k < params.k(); ++k) {
    for (int i = 0; i < draw.alloc[k]; ++i, ++row) {
      draw.component_of.push_back(k);
      for (int j = 0; j < d; ++j) out[row * d + j] = rng.next_normal();
    }
  }
  return draw;
}

FrequencyBatch assemble_batch(Tape& tape, const SamplerParams& params,
                              const FrequencyDraw& draw) {
  check_params(params);
  const int k = params.k();
  const int d = params.dim();
  const int m = draw.noise.shape[0];
  if (static_cast<int>(draw.component_of.size()) != m ||
      static_cast<int>(draw.alloc.size()) != k || draw.noise.shape[1] != d)
    throw ContractError("sampler: draw does not match parameters");

  Tensor sigma = clamped_scales(tape, params.log_scales);

  FrequencyBatch batch;
  batch.component_of = draw.component_of;
  batch.alloc = draw.alloc;
  int row = 0;
  for (int c = 0; c < k; ++c) {
    const int mc = draw.alloc[c];
    if (mc == 0) continue;
    std::vector<int> rows(mc);
    std::iota(rows.begin(), rows.end(), row);
    Tensor eps = gather_rows(tape, draw.noise, rows);
    Tensor scale_row = gather_rows(tape, sigma, {c});
    Tensor block = elementwise_mul(tape, eps, scale_row);
    batch.freqs = row == 0 ? block : concat_rows(tape, batch.freqs, block);
    row += mc;
  }

  // weights_m = w_{k(m)} / M_{k(m)} through a constant selection matrix,
  // so the mixture weights keep their gradient while the integer
  // allocation stays fixed.
  Tensor sel({m, k});
  for (int i = 0; i < m; ++i) {
    const int c = draw.component_of[i];
    sel.at(i, c) = 1.0 / draw.alloc[c];
  }
  Tensor w = exp(tape, log_softmax_rows(tape, params.mixture_logits));
  batch.weights = transpose(tape, matmul(tape, sel, reshape(tape, w, {k, 1})));
  return batch;
}

FrequencyBatch sample_frequencies(Tape& tape, const SamplerParams& params, int m,
                                  int d_emb, CounterRng& rng) {
  check_params(params);
  if (d_emb != params.dim())
    throw ContractError("sampler: embedding dimension does not match log_scales");
  return assemble_batch(tape, params, draw_noise(params, m, rng));
}

FrequencyBatch fixed_band_frequencies(BandKind kind, double f_lo, double f_hi, int m,
                                      int d_emb, CounterRng& rng) {
  if (m < 1 || d_emb < 1) throw ConfigError("sampler: need m >= 1 and d_emb >= 1");
  if (kind != BandKind::random && (f_lo < 0.0 || f_lo >= f_hi))
    throw ConfigError("sampler: band must satisfy 0 <= f_lo < f_hi");
  FrequencyBatch batch;
  batch.freqs = Tensor({m, d_emb});
  batch.component_of.assign(m, 0);
  batch.alloc = {m};
  double* out = batch.freqs.ptr();
  for (int i = 0; i < m; ++i) {
    double* row = out + static_cast<size_t>(i) * d_emb;
    if (kind == BandKind::random) {
      for (int j = 0; j < d_emb; ++j) row[j] = rng.next_normal();
      continue;
    }
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (int j = 0; j < d_emb; ++j) {
        row[j] = rng.next_normal();
        norm2 += row[j] * row[j];
      }
    } while (norm2 == 0.0);
    const double radius = f_lo + (f_hi - f_lo) * rng.next_uniform();
    const double scale = radius / std::sqrt(norm2);
    for (int j = 0; j < d_emb; ++j) row[j] *= scale;
  }
  batch.weights = uniform_weights(m);
  return batch;
}

Tensor sampler_ascent_objective(Tape& tape, const FrequencyBatch& batch,
                                const Tensor& z_source, const Tensor& z_target,
                                double kappa) {
  return alignment_loss(tape, z_source, z_target, batch.freqs, batch.weights, kappa);
}

}  // namespace adalign
