#pragma once

#include <vector>

#include "adalign/graph.hpp"
#include "adalign/rng.hpp"
#include "adalign/tensor.hpp"

namespace adalign {

// GCN weights plus the linear classifier head. Layer l computes
// relu(A_hat * H * W_l + b_l); the last layer drops the relu and its
// output is the embedding fed to both the classifier and the alignment
// loss.
struct EncoderParams {
  std::vector<Tensor> weights;  // W_l, {in_dim, out_dim}
  std::vector<Tensor> biases;   // b_l, {1, out_dim}
  Tensor cls_weight;            // {d_emb, C}
  Tensor cls_bias;              // {1, C}

  int layers() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return weights.front().shape[0]; }
  int embed_dim() const { return weights.back().shape[1]; }
  int num_classes() const { return cls_weight.shape[1]; }

  // Same storage, every tensor registered as a differentiable leaf.
  EncoderParams as_leaves(Tape& tape) const;
  // Pointers over all tensors in a fixed order (weights, biases, head).
  std::vector<Tensor*> all();
  std::vector<const Tensor*> all() const;

  // Checks the layer dimension chain and the head shape.
  void check() const;
};

// dims = {input, hidden..., d_emb}; weights and biases start uniform in
// [-1/sqrt(fan_in), +1/sqrt(fan_in)].
EncoderParams init_encoder(const std::vector<int>& dims, int num_classes, CounterRng& rng);

// Z = layer_L(...layer_1(X)...), optionally followed by extra parameter-
// free propagation steps (used on the target branch).
Tensor encode(Tape& tape, const SparseMatrix& adj, const Tensor& x,
              const EncoderParams& params, int extra_propagation = 0);
Tensor encode(Tape& tape, const NormalizedAdjacency& adj, const Tensor& x,
              const EncoderParams& params, int extra_propagation = 0);

// logits = Z * W_cls + b_cls
Tensor classify(Tape& tape, const Tensor& z, const EncoderParams& params);

// Mean cross-entropy of log-softmax(logits) against integer labels.
Tensor source_loss(Tape& tape, const Tensor& logits, const std::vector<int>& labels);

// Row argmax; ties go to the lowest class index.
std::vector<int> predict(const Tensor& logits);

}  // namespace adalign
