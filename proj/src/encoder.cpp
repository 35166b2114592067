#include "adalign/encoder.hpp"

#include <cmath>
#include <string>

#include "adalign/errors.hpp"

namespace adalign {

void EncoderParams::check() const {
  if (weights.empty() || weights.size() != biases.size())
    throw ContractError("encoder needs matching weight and bias lists");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (biases[l].shape != std::vector<int>{1, weights[l].shape[1]})
      throw ContractError("bias shape does not match layer " + std::to_string(l));
    if (l + 1 < weights.size() && weights[l].shape[1] != weights[l + 1].shape[0])
      throw ContractError("layer dimensions do not chain at layer " + std::to_string(l));
  }
  if (cls_weight.shape[0] != weights.back().shape[1])
    throw ContractError("classifier input dim does not equal the embedding dim");
  if (cls_bias.shape != std::vector<int>{1, cls_weight.shape[1]})
    throw ContractError("classifier bias shape mismatch");
}

EncoderParams EncoderParams::as_leaves(Tape& tape) const {
  EncoderParams out;
  out.weights.reserve(weights.size());
  out.biases.reserve(biases.size());
  for (const Tensor& w : weights) out.weights.push_back(tape.leaf(w));
  for (const Tensor& b : biases) out.biases.push_back(tape.leaf(b));
  out.cls_weight = tape.leaf(cls_weight);
  out.cls_bias = tape.leaf(cls_bias);
  return out;
}

std::vector<Tensor*> EncoderParams::all() {
  std::vector<Tensor*> out;
  for (Tensor& w : weights) out.push_back(&w);
  for (Tensor& b : biases) out.push_back(&b);
  out.push_back(&cls_weight);
  out.push_back(&cls_bias);
  return out;
}

std::vector<const Tensor*> EncoderParams::all() const {
  std::vector<const Tensor*> out;
  for (const Tensor& w : weights) out.push_back(&w);
  for (const Tensor& b : biases) out.push_back(&b);
  out.push_back(&cls_weight);
  out.push_back(&cls_bias);
  return out;
}

EncoderParams init_encoder(const std::vector<int>& dims, int num_classes, CounterRng& rng) {
  if (dims.size() < 2) throw ConfigError("encoder needs at least input and output dims");
  for (int d : dims)
    if (d <= 0) throw ConfigError("encoder dims must be positive");
  if (num_classes <= 0) throw ConfigError("num_classes must be positive");
  EncoderParams p;
  auto uniform_init = [&rng](Tensor& t, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : *t.data) v = bound * (2.0 * rng.next_uniform() - 1.0);
  };
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Tensor w({dims[l], dims[l + 1]});
    Tensor b({1, dims[l + 1]});
    uniform_init(w, dims[l]);
    uniform_init(b, dims[l]);
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  p.cls_weight = Tensor({dims.back(), num_classes});
  p.cls_bias = Tensor({1, num_classes});
  uniform_init(p.cls_weight, dims.back());
  uniform_init(p.cls_bias, dims.back());
  return p;
}

Tensor encode(Tape& tape, const SparseMatrix& adj, const Tensor& x,
              const EncoderParams& params, int extra_propagation) {
  params.check();
  if (x.shape[1] != params.input_dim())
    throw ContractError("feature width does not match the first encoder layer");
  if (adj.rows != x.shape[0])
    throw ContractError("adjacency size does not match the feature rows");
  if (extra_propagation < 0) throw ContractError("extra_propagation must be >= 0");
  Tensor h = x;
  const int layers = params.layers();
  for (int l = 0; l < layers; ++l) {
    h = sparse_dense_matmul(tape, adj, matmul(tape, h, params.weights[static_cast<std::size_t>(l)]));
    h = add(tape, h, params.biases[static_cast<std::size_t>(l)]);
    if (l + 1 < layers) h = relu(tape, h);
  }
  for (int s = 0; s < extra_propagation; ++s) h = sparse_dense_matmul(tape, adj, h);
  return h;
}

Tensor encode(Tape& tape, const NormalizedAdjacency& adj, const Tensor& x,
              const EncoderParams& params, int extra_propagation) {
  return encode(tape, to_csr(adj), x, params, extra_propagation);
}

Tensor classify(Tape& tape, const Tensor& z, const EncoderParams& params) {
  if (z.shape[1] != params.cls_weight.shape[0])
    throw ContractError("embedding width does not match the classifier head");
  return add(tape, matmul(tape, z, params.cls_weight), params.cls_bias);
}

Tensor source_loss(Tape& tape, const Tensor& logits, const std::vector<int>& labels) {
  const int n = logits.shape[0], c = logits.shape[1];
  if (static_cast<int>(labels.size()) != n)
    throw DimensionError("label count does not match the logit rows");
  for (int y : labels)
    if (y < 0 || y >= c) throw RangeError("label outside [0, C)");
  Tensor onehot({n, c});
  for (int i = 0; i < n; ++i) onehot.at(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  Tensor lsm = log_softmax_rows(tape, logits);
  Tensor picked = sum_all(tape, elementwise_mul(tape, lsm, onehot));
  return scalar_mul(tape, -1.0 / static_cast<double>(n), picked);
}

std::vector<int> predict(const Tensor& logits) {
  const int n = logits.shape[0], c = logits.shape[1];
  std::vector<int> out(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int j = 1; j < c; ++j)
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

}  // namespace adalign
