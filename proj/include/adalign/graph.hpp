#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adalign/tensor.hpp"

namespace adalign {

// One domain: undirected graph, node features, optional labels.
// Edges are stored once with src < dst; self-loops only appear through
// adjacency normalization, never in the raw list.
struct DomainGraph {
  int num_nodes = 0;
  int num_classes = 0;
  std::vector<std::pair<int, int>> edges;
  Tensor features;
  std::vector<int> labels;

  bool has_labels() const { return !labels.empty(); }
  int feature_dim() const { return features.shape[1]; }
};

// Throws if any structural invariant is broken.
void validate(const DomainGraph& g);

// Symmetric GCN propagation matrix D^{-1/2}(A+I)D^{-1/2} in coordinate
// form, sorted by (row, col).
struct NormalizedAdjacency {
  int num_nodes = 0;
  std::vector<std::tuple<int, int, double>> entries;
};

NormalizedAdjacency normalize_adjacency(const DomainGraph& g);
SparseMatrix to_csr(const NormalizedAdjacency& adj);

struct EdgeListResult {
  std::vector<std::pair<int, int>> edges;
  int self_loops_dropped = 0;
};

// One edge per line as "src dst"; '#' lines are comments. Duplicates are
// merged, self-loops dropped and counted.
EdgeListResult load_edge_list(const std::string& path, int num_nodes);
Tensor load_features(const std::string& path);
std::vector<int> load_labels(const std::string& path, int num_classes);

void save_edge_list(const std::string& path, const std::vector<std::pair<int, int>>& edges);
void save_features(const std::string& path, const Tensor& features);
void save_labels(const std::string& path, const std::vector<int>& labels);

// Builds and validates a DomainGraph from loaded pieces. Pass an empty
// label vector for the unlabeled case.
DomainGraph assemble_graph(int num_classes, Tensor features,
                           std::vector<std::pair<int, int>> edges,
                           std::vector<int> labels);

// Contextual stochastic block model with a controlled source-to-target
// shift: class means are rotated in the (0,1) feature plane and
// translated, and the edge probabilities are offset.
struct CsbmSpec {
  int num_nodes = 1000;  // per domain
  int feature_dim = 16;
  int num_classes = 2;
  Tensor class_means;  // {C, d}
  double feature_sigma = 1.0;
  double p_in = 0.05;
  double p_out = 0.02;
  std::vector<double> shift_translation;  // empty means zero
  double shift_rotation_degrees = 0.0;
  double shift_delta_p_in = 0.0;
  double shift_delta_p_out = 0.0;
  std::uint64_t seed = 0;
};

// Axis-aligned class means: mu_c = separation * e_c. Needs C <= d.
Tensor simplex_means(int num_classes, int dim, double separation);

std::pair<DomainGraph, DomainGraph> generate_csbm(const CsbmSpec& spec);

}  // namespace adalign
