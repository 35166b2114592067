#include "adalign/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "adalign/errors.hpp"
#include "adalign/eval.hpp"
#include "adalign/spectral.hpp"

namespace adalign {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kLowBandLo = 1.0, kLowBandHi = 10.0;
constexpr double kHighBandLo = 10.0, kHighBandHi = 20.0;

FrequencyBatch make_batch(Tape& tape, const SamplerParams& phi, const TrainConfig& cfg,
                          CounterRng& rng) {
  switch (cfg.sampler) {
    case SamplerKind::adaptive:
      return sample_frequencies(tape, phi, cfg.m, cfg.embed_dim, rng);
    case SamplerKind::random:
      return fixed_band_frequencies(BandKind::random, 0.0, 1.0, cfg.m, cfg.embed_dim, rng);
    case SamplerKind::low:
      return fixed_band_frequencies(BandKind::low, kLowBandLo, kLowBandHi, cfg.m,
                                    cfg.embed_dim, rng);
    case SamplerKind::high:
      return fixed_band_frequencies(BandKind::high, kHighBandLo, kHighBandHi, cfg.m,
                                    cfg.embed_dim, rng);
  }
  throw ConfigError("trainer: unknown sampler kind");
}

void check_finite(double value, const char* what, int epoch) {
  if (std::isfinite(value)) return;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "trainer: %s is non-finite (%g) at epoch %d", what,
                value, epoch);
  throw TrainingError(buf);
}

std::vector<Tensor> collect_grads(const GradientMap& map,
                                  const std::vector<Tensor*>& leaves) {
  std::vector<Tensor> grads;
  grads.reserve(leaves.size());
  for (const Tensor* leaf : leaves) grads.push_back(map.wrt(*leaf));
  return grads;
}

MetricsRecord evaluate_epoch(const TrainState& state, const SparseMatrix& adj_s,
                             const Tensor& xs, const std::vector<int>& ys,
                             const SparseMatrix& adj_t, const Tensor& xt,
                             const std::vector<int>& yt, const TrainConfig& cfg,
                             CounterRng& eval_rng) {
  MetricsRecord rec;
  Tape tape;
  Tensor zs = encode(tape, adj_s, xs, state.delta, 0);
  Tensor logits = classify(tape, zs, state.delta);
  rec.source_loss = source_loss(tape, logits, ys).ptr()[0];
  Tensor zt = encode(tape, adj_t, xt, state.delta, cfg.extra_propagation);
  FrequencyBatch batch = make_batch(tape, state.phi, cfg, eval_rng);
  rec.align_loss =
      alignment_loss(tape, zs, zt, batch.freqs, batch.weights, cfg.kappa).ptr()[0];
  if (!yt.empty()) {
    std::vector<int> pred = predict(classify(tape, zt, state.delta));
    rec.micro_f1 = micro_f1(yt, pred);
    rec.macro_f1 = macro_f1(yt, pred);
  }
  rec.clamp_count = scale_clamp_count(state.phi);
  return rec;
}

}  // namespace

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::adaptive: return "adaptive";
    case SamplerKind::random: return "random";
    case SamplerKind::low: return "low";
    case SamplerKind::high: return "high";
  }
  return "adaptive";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "adaptive") return SamplerKind::adaptive;
  if (name == "random") return SamplerKind::random;
  if (name == "low") return SamplerKind::low;
  if (name == "high") return SamplerKind::high;
  throw ConfigError("trainer: unknown sampler kind '" + name + "'");
}

void validate_config(const TrainConfig& cfg) {
  if (cfg.lambda < 0.0) throw ConfigError("trainer: lambda must be >= 0");
  if (cfg.kappa < 0.0 || cfg.kappa > 1.0)
    throw ConfigError("trainer: kappa must lie in [0, 1]");
  if (cfg.k < 1) throw ConfigError("trainer: k must be >= 1");
  if (cfg.m < cfg.k) throw ConfigError("trainer: m must be >= k");
  if (cfg.lr_delta <= 0.0 || cfg.lr_phi <= 0.0)
    throw ConfigError("trainer: learning rates must be positive");
  if (cfg.epochs < 0) throw ConfigError("trainer: epochs must be >= 0");
  if (cfg.grad_clip_norm <= 0.0)
    throw ConfigError("trainer: grad_clip_norm must be positive");
  if (cfg.extra_propagation < 0)
    throw ConfigError("trainer: extra_propagation must be >= 0");
  if (cfg.eval_every < 1) throw ConfigError("trainer: eval_every must be >= 1");
  if (cfg.sampler_steps < 0) throw ConfigError("trainer: sampler_steps must be >= 0");
  if (cfg.embed_dim < 1) throw ConfigError("trainer: embed_dim must be >= 1");
  for (int h : cfg.hidden_dims)
    if (h < 1) throw ConfigError("trainer: hidden dims must be >= 1");
}

AdamState init_adam(const std::vector<const Tensor*>& params) {
  AdamState state;
  for (const Tensor* p : params) {
    state.m1.emplace_back(p->shape);
    state.m2.emplace_back(p->shape);
  }
  return state;
}

void adam_update(Tensor& param, const Tensor& grad, Tensor& m1, Tensor& m2, long step,
                 double lr) {
  if (param.shape != grad.shape || param.shape != m1.shape || param.shape != m2.shape)
    throw ContractError("adam: parameter, gradient, and accumulator shapes differ");
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  double* p = param.ptr();
  const double* g = grad.ptr();
  double* m = m1.ptr();
  double* v = m2.ptr();
  const std::size_t n = param.numel();
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
    v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kAdamEps);
  }
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m1.size())
    throw ContractError("adam: parameter count mismatch");
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i)
    adam_update(*params[i], grads[i], state.m1[i], state.m2[i], state.step, lr);
}

double clip_gradients(std::vector<Tensor>& grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double v : *g.data) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (Tensor& g : grads)
      for (double& v : *g.data) v *= scale;
  }
  return norm;
}

StepResult train_step_model(TrainState& state, const SparseMatrix& adj_source,
                            const Tensor& source_features,
                            const std::vector<int>& source_labels,
                            const SparseMatrix& adj_target,
                            const Tensor& target_features, const TrainConfig& cfg) {
  Tape tape;
  EncoderParams dp = state.delta.as_leaves(tape);
  Tensor zs = encode(tape, adj_source, source_features, dp, 0);
  Tensor logits = classify(tape, zs, dp);
  Tensor l_src = source_loss(tape, logits, source_labels);

  StepResult result;
  result.source_loss = l_src.ptr()[0];
  check_finite(result.source_loss, "source loss", state.epoch);

  Tensor total = l_src;
  if (cfg.lambda > 0.0) {
    Tensor zt = encode(tape, adj_target, target_features, dp, cfg.extra_propagation);
    FrequencyBatch batch = make_batch(tape, state.phi, cfg, state.rng);
    Tensor l_align = alignment_loss(tape, zs, zt, batch.freqs, batch.weights, cfg.kappa);
    result.align_loss = l_align.ptr()[0];
    check_finite(result.align_loss, "alignment loss", state.epoch);
    total = add(tape, l_src, scalar_mul(tape, cfg.lambda, l_align));
  }

  GradientMap map = tape.backward(total);
  std::vector<Tensor*> leaves = dp.all();
  std::vector<Tensor> grads = collect_grads(map, leaves);
  clip_gradients(grads, cfg.grad_clip_norm);
  adam_step(state.delta.all(), grads, state.adam_delta, cfg.lr_delta);
  return result;
}

void train_step_sampler(TrainState& state, const SparseMatrix& adj_source,
                        const Tensor& source_features, const SparseMatrix& adj_target,
                        const Tensor& target_features, const TrainConfig& cfg) {
  if (cfg.sampler != SamplerKind::adaptive || cfg.lambda == 0.0) return;
  Tape tape;
  Tensor zs = encode(tape, adj_source, source_features, state.delta, 0);
  Tensor zt = encode(tape, adj_target, target_features, state.delta,
                     cfg.extra_propagation);
  SamplerParams pp = state.phi.as_leaves(tape);
  FrequencyBatch batch = sample_frequencies(tape, pp, cfg.m, cfg.embed_dim, state.rng);
  Tensor objective = sampler_ascent_objective(tape, batch, zs, zt, cfg.kappa);
  check_finite(objective.ptr()[0], "sampler objective", state.epoch);

  GradientMap map = tape.backward(objective);
  std::vector<Tensor*> leaves = pp.all();
  std::vector<Tensor> grads = collect_grads(map, leaves);
  clip_gradients(grads, cfg.grad_clip_norm);
  for (Tensor& g : grads)
    for (double& v : *g.data) v = -v;
  adam_step(state.phi.all(), grads, state.adam_phi, cfg.lr_phi);
}

FitResult fit(const DomainGraph& source, const DomainGraph& target,
              const TrainConfig& cfg) {
  validate_config(cfg);
  validate(source);
  validate(target);
  if (!source.has_labels())
    throw ContractError("trainer: the source graph must carry labels");
  if (source.feature_dim() != target.feature_dim())
    throw ContractError("trainer: source and target feature widths differ");
  if (target.has_labels() && target.num_classes != source.num_classes)
    throw ContractError("trainer: class counts differ between domains");

  const SparseMatrix adj_s = to_csr(normalize_adjacency(source));
  const SparseMatrix adj_t = to_csr(normalize_adjacency(target));

  FitResult out;
  TrainState& st = out.state;
  std::vector<int> dims;
  dims.push_back(source.feature_dim());
  for (int h : cfg.hidden_dims) dims.push_back(h);
  dims.push_back(cfg.embed_dim);
  CounterRng init_rng(cfg.seed, "train.init.encoder");
  st.delta = init_encoder(dims, source.num_classes, init_rng);
  st.phi = init_sampler(cfg.k, cfg.embed_dim);
  {
    const EncoderParams& cd = st.delta;
    st.adam_delta = init_adam(cd.all());
    const SamplerParams& cp = st.phi;
    st.adam_phi = init_adam(cp.all());
  }
  st.rng = CounterRng(cfg.seed, "train.frequencies");
  CounterRng eval_rng(cfg.seed, "train.eval.frequencies");

  MetricsRecord rec = evaluate_epoch(st, adj_s, source.features, source.labels, adj_t,
                                     target.features, target.labels, cfg, eval_rng);
  rec.epoch = 0;
  out.metrics.push_back(rec);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    st.epoch = epoch;
    train_step_model(st, adj_s, source.features, source.labels, adj_t, target.features,
                     cfg);
    for (int i = 0; i < cfg.sampler_steps; ++i)
      train_step_sampler(st, adj_s, source.features, adj_t, target.features, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
      rec = evaluate_epoch(st, adj_s, source.features, source.labels, adj_t,
                           target.features, target.labels, cfg, eval_rng);
      rec.epoch = epoch;
      rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      out.metrics.push_back(rec);
    }
  }
  return out;
}

std::pair<double, double> graph_f1(const EncoderParams& params, const SparseMatrix& adj,
                                   const Tensor& features, const std::vector<int>& labels,
                                   int extra_propagation) {
  Tape tape;
  Tensor z = encode(tape, adj, features, params, extra_propagation);
  std::vector<int> pred = predict(classify(tape, z, params));
  return {micro_f1(labels, pred), macro_f1(labels, pred)};
}

std::string metrics_line(const MetricsRecord& r) {
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "epoch:%d source_loss:%.17g align_loss:%.17g micro_f1:%.17g "
                "macro_f1:%.17g clamp_count:%d wall_ms:%.17g",
                r.epoch, r.source_loss, r.align_loss, r.micro_f1, r.macro_f1,
                r.clamp_count, r.wall_ms);
  return buf;
}

MetricsRecord parse_metrics_line(const std::string& line) {
  MetricsRecord r;
  std::istringstream in(line);
  std::string token;
  int seen = 0;
  while (in >> token) {
    const std::size_t colon = token.find(':');
    if (colon == std::string::npos)
      throw FormatError("metrics: malformed token '" + token + "'");
    const std::string key = token.substr(0, colon);
    const std::string value = token.substr(colon + 1);
    try {
      if (key == "epoch") r.epoch = std::stoi(value);
      else if (key == "source_loss") r.source_loss = std::stod(value);
      else if (key == "align_loss") r.align_loss = std::stod(value);
      else if (key == "micro_f1") r.micro_f1 = std::stod(value);
      else if (key == "macro_f1") r.macro_f1 = std::stod(value);
      else if (key == "clamp_count") r.clamp_count = std::stoi(value);
      else if (key == "wall_ms") r.wall_ms = std::stod(value);
      else throw FormatError("metrics: unknown key '" + key + "'");
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception&) {
      throw FormatError("metrics: bad value in token '" + token + "'");
    }
    ++seen;
  }
  if (seen != 7) throw FormatError("metrics: expected 7 fields, found " +
                                   std::to_string(seen));
  return r;
}

void save_metrics_log(const std::string& path, const std::vector<MetricsRecord>& log) {
  std::ofstream out(path);
  if (!out) throw FormatError("metrics: cannot open '" + path + "' for writing");
  for (const MetricsRecord& r : log) out << metrics_line(r) << '\n';
}

std::vector<MetricsRecord> load_metrics_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("metrics: cannot open '" + path + "'");
  std::vector<MetricsRecord> log;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      log.push_back(parse_metrics_line(line));
    } catch (const FormatError& e) {
      throw FormatError(std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
    }
  }
  return log;
}

}  // namespace adalign
