#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adalign/encoder.hpp"
#include "adalign/graph.hpp"
#include "adalign/rng.hpp"
#include "adalign/sampler.hpp"
#include "adalign/tensor.hpp"

namespace adalign {

enum class SamplerKind { adaptive, random, low, high };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);  // ConfigError

struct TrainConfig {
  double lambda = 1.0;         // alignment weight; 0 disables alignment entirely
  double kappa = 0.7;
  int m = 2048;                // frequencies per step
  int k = 4;                   // mixture components
  double lr_delta = 3e-3;
  double lr_phi = 3e-3;
  int epochs = 150;            // 0 runs evaluation only
  double grad_clip_norm = 5.0;
  std::uint64_t seed = 0;
  SamplerKind sampler = SamplerKind::adaptive;
  int extra_propagation = 0;   // target-branch propagation steps
  int eval_every = 10;
  int sampler_steps = 1;       // ascent steps per epoch
  std::vector<int> hidden_dims = {64};
  int embed_dim = 16;
};

void validate_config(const TrainConfig& config);  // ConfigError

// First/second moment accumulators, one pair per parameter tensor.
struct AdamState {
  std::vector<Tensor> m1;
  std::vector<Tensor> m2;
  long step = 0;
};

AdamState init_adam(const std::vector<const Tensor*>& params);

// Standard Adam, bias-corrected, beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
// step is the 1-based count including this update.
void adam_update(Tensor& param, const Tensor& grad, Tensor& m1, Tensor& m2, long step,
                 double lr);
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr);

// Scales all gradients in place when their global L2 norm exceeds
// max_norm. Returns the pre-clip norm.
double clip_gradients(std::vector<Tensor>& grads, double max_norm);

struct TrainState {
  EncoderParams delta;
  SamplerParams phi;
  AdamState adam_delta;
  AdamState adam_phi;
  CounterRng rng{0, 0};  // frequency draws during training steps
  int epoch = 0;
};

// micro/macro are -1 when the target graph carries no labels.
struct MetricsRecord {
  int epoch = 0;
  double source_loss = 0.0;
  double align_loss = 0.0;
  double micro_f1 = -1.0;
  double macro_f1 = -1.0;
  int clamp_count = 0;
  double wall_ms = 0.0;
};

std::string metrics_line(const MetricsRecord& record);
MetricsRecord parse_metrics_line(const std::string& line);  // FormatError
void save_metrics_log(const std::string& path, const std::vector<MetricsRecord>& log);
std::vector<MetricsRecord> load_metrics_log(const std::string& path);

struct StepResult {
  double source_loss = 0.0;
  double align_loss = 0.0;
};

// Descent on the encoder and classifier for L_source + lambda * L_align,
// with the sampler frozen. Never touches phi or its optimizer state.
StepResult train_step_model(TrainState& state, const SparseMatrix& adj_source,
                            const Tensor& source_features,
                            const std::vector<int>& source_labels,
                            const SparseMatrix& adj_target,
                            const Tensor& target_features, const TrainConfig& config);

// Ascent on the sampler for L_align with the encoder frozen. No-op for
// fixed-band sampler kinds and for lambda = 0.
void train_step_sampler(TrainState& state, const SparseMatrix& adj_source,
                        const Tensor& source_features, const SparseMatrix& adj_target,
                        const Tensor& target_features, const TrainConfig& config);

struct FitResult {
  TrainState state;
  std::vector<MetricsRecord> metrics;
};

// Alternating minimax loop over full-graph steps. Target labels are read
// only when filling evaluation records.
FitResult fit(const DomainGraph& source, const DomainGraph& target,
              const TrainConfig& config);

// Micro/macro F1 of the encoder's predictions on one graph.
std::pair<double, double> graph_f1(const EncoderParams& params, const SparseMatrix& adj,
                                   const Tensor& features, const std::vector<int>& labels,
                                   int extra_propagation);

}  // namespace adalign
