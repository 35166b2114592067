#include "adalign/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "adalign/errors.hpp"
#include "adalign/rng.hpp"

namespace adalign {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& token, int line_no) {
  const std::string t = trim(token);
  if (t.empty())
    throw FormatError("line " + std::to_string(line_no) + ": empty field");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw FormatError("line " + std::to_string(line_no) + ": bad number '" + t + "'");
  return v;
}

std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

void validate(const DomainGraph& g) {
  if (g.num_nodes <= 0) throw ContractError("graph must have at least one node");
  if (g.num_classes <= 0) throw ContractError("graph must declare at least one class");
  if (g.features.shape[0] != g.num_nodes)
    throw DimensionError("feature rows do not match the node count");
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(g.edges.size() * 2);
  for (const auto& [a, b] : g.edges) {
    if (a < 0 || a >= g.num_nodes || b < 0 || b >= g.num_nodes)
      throw RangeError("edge endpoint out of range");
    if (a == b) throw ContractError("self-loop in raw edge list");
    if (!seen.insert(edge_key(std::min(a, b), std::max(a, b))).second)
      throw ContractError("duplicate undirected edge");
  }
  if (!g.labels.empty()) {
    if (static_cast<int>(g.labels.size()) != g.num_nodes)
      throw DimensionError("label count does not match the node count");
    for (int y : g.labels)
      if (y < 0 || y >= g.num_classes) throw RangeError("label outside [0, C)");
  }
}

NormalizedAdjacency normalize_adjacency(const DomainGraph& g) {
  validate(g);
  std::vector<int> deg(static_cast<std::size_t>(g.num_nodes), 1);
  for (const auto& [a, b] : g.edges) {
    ++deg[static_cast<std::size_t>(a)];
    ++deg[static_cast<std::size_t>(b)];
  }
  NormalizedAdjacency adj;
  adj.num_nodes = g.num_nodes;
  adj.entries.reserve(static_cast<std::size_t>(g.num_nodes) + 2 * g.edges.size());
  for (int i = 0; i < g.num_nodes; ++i)
    adj.entries.emplace_back(i, i, 1.0 / deg[static_cast<std::size_t>(i)]);
  for (const auto& [a, b] : g.edges) {
    const double w = 1.0 / std::sqrt(static_cast<double>(deg[static_cast<std::size_t>(a)]) *
                                     static_cast<double>(deg[static_cast<std::size_t>(b)]));
    adj.entries.emplace_back(a, b, w);
    adj.entries.emplace_back(b, a, w);
  }
  std::sort(adj.entries.begin(), adj.entries.end());
  return adj;
}

SparseMatrix to_csr(const NormalizedAdjacency& adj) {
  SparseMatrix m;
  m.rows = adj.num_nodes;
  m.cols = adj.num_nodes;
  m.row_ptr.assign(static_cast<std::size_t>(adj.num_nodes) + 1, 0);
  m.col_idx.reserve(adj.entries.size());
  m.values.reserve(adj.entries.size());
  for (const auto& [r, c, w] : adj.entries) ++m.row_ptr[static_cast<std::size_t>(r) + 1];
  for (int i = 0; i < adj.num_nodes; ++i)
    m.row_ptr[static_cast<std::size_t>(i) + 1] += m.row_ptr[static_cast<std::size_t>(i)];
  for (const auto& [r, c, w] : adj.entries) {
    m.col_idx.push_back(c);
    m.values.push_back(w);
  }
  return m;
}

EdgeListResult load_edge_list(const std::string& path, int num_nodes) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open edge list: " + path);
  EdgeListResult result;
  std::unordered_set<std::uint64_t> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream iss(t);
    long long a = -1, b = -1;
    if (!(iss >> a >> b))
      throw FormatError("line " + std::to_string(line_no) + ": expected 'src dst'");
    std::string rest;
    if (iss >> rest)
      throw FormatError("line " + std::to_string(line_no) + ": trailing content '" + rest + "'");
    if (a < 0 || b < 0 || a >= num_nodes || b >= num_nodes)
      throw RangeError("line " + std::to_string(line_no) + ": endpoint outside [0, " +
                       std::to_string(num_nodes) + ")");
    if (a == b) {
      ++result.self_loops_dropped;
      continue;
    }
    const int lo = static_cast<int>(std::min(a, b));
    const int hi = static_cast<int>(std::max(a, b));
    if (seen.insert(edge_key(lo, hi)).second) result.edges.emplace_back(lo, hi);
  }
  return result;
}

Tensor load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open features: " + path);
  std::vector<double> values;
  int cols = -1;
  int rows = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    int row_cols = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = t.find(',', start);
      const std::string token = t.substr(start, comma == std::string::npos ? std::string::npos
                                                                           : comma - start);
      values.push_back(parse_double(token, line_no));
      ++row_cols;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cols < 0)
      cols = row_cols;
    else if (row_cols != cols)
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cols) + " fields, found " + std::to_string(row_cols));
    ++rows;
  }
  if (rows == 0) throw FormatError("feature file has no rows: " + path);
  return Tensor::from_values({rows, cols}, std::move(values));
}

std::vector<int> load_labels(const std::string& path, int num_classes) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open labels: " + path);
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size())
      throw FormatError("line " + std::to_string(line_no) + ": bad label '" + t + "'");
    if (v < 0 || v >= num_classes)
      throw RangeError("line " + std::to_string(line_no) + ": label " + std::to_string(v) +
                       " outside [0, " + std::to_string(num_classes) + ")");
    labels.push_back(static_cast<int>(v));
  }
  if (labels.empty()) throw FormatError("label file has no rows: " + path);
  return labels;
}

void save_edge_list(const std::string& path, const std::vector<std::pair<int, int>>& edges) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write edge list: " + path);
  for (const auto& [a, b] : edges) out << a << ' ' << b << '\n';
}

void save_features(const std::string& path, const Tensor& features) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write features: " + path);
  char buf[40];
  for (int i = 0; i < features.shape[0]; ++i) {
    for (int j = 0; j < features.shape[1]; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", features.at(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

void save_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write labels: " + path);
  for (int y : labels) out << y << '\n';
}

DomainGraph assemble_graph(int num_classes, Tensor features,
                           std::vector<std::pair<int, int>> edges,
                           std::vector<int> labels) {
  DomainGraph g;
  g.num_nodes = features.shape[0];
  g.num_classes = num_classes;
  g.features = std::move(features);
  g.edges = std::move(edges);
  g.labels = std::move(labels);
  validate(g);
  return g;
}

Tensor simplex_means(int num_classes, int dim, double separation) {
  if (num_classes > dim)
    throw ConfigError("simplex_means needs feature_dim >= num_classes");
  Tensor means({num_classes, dim});
  for (int c = 0; c < num_classes; ++c) means.at(c, c) = separation;
  return means;
}

namespace {

DomainGraph sample_domain(const CsbmSpec& spec, const Tensor& means, double p_in,
                          double p_out, CounterRng& feat_rng, CounterRng& edge_rng) {
  const int n = spec.num_nodes, d = spec.feature_dim, c = spec.num_classes;
  DomainGraph g;
  g.num_nodes = n;
  g.num_classes = c;
  g.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g.labels[static_cast<std::size_t>(i)] = i % c;
  g.features = Tensor({n, d});
  for (int i = 0; i < n; ++i) {
    const int yc = i % c;
    for (int f = 0; f < d; ++f)
      g.features.at(i, f) = means.at(yc, f) + spec.feature_sigma * feat_rng.next_normal();
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = (i % c == j % c) ? p_in : p_out;
      if (edge_rng.next_uniform() < p) g.edges.emplace_back(i, j);
    }
  }
  return g;
}

}  // namespace

std::pair<DomainGraph, DomainGraph> generate_csbm(const CsbmSpec& spec) {
  const int d = spec.feature_dim, c = spec.num_classes;
  if (spec.num_nodes <= 0 || d <= 0 || c <= 0)
    throw ConfigError("csbm sizes must be positive");
  if (spec.feature_sigma <= 0.0) throw ConfigError("feature_sigma must be positive");
  if (!(0.0 <= spec.p_out && spec.p_out <= spec.p_in && spec.p_in <= 1.0))
    throw ConfigError("need 0 <= p_out <= p_in <= 1");
  if (spec.class_means.shape != std::vector<int>{c, d})
    throw ConfigError("class_means must be shaped {num_classes, feature_dim}");
  if (!spec.shift_translation.empty() &&
      static_cast<int>(spec.shift_translation.size()) != d)
    throw ConfigError("shift_translation length must equal feature_dim");
  if (spec.shift_rotation_degrees != 0.0 && d < 2)
    throw ConfigError("rotation shift needs feature_dim >= 2");
  const double tp_in = spec.p_in + spec.shift_delta_p_in;
  const double tp_out = spec.p_out + spec.shift_delta_p_out;
  if (tp_in < 0.0 || tp_in > 1.0 || tp_out < 0.0 || tp_out > 1.0)
    throw ConfigError("shifted edge probabilities leave [0, 1]");

  Tensor target_means = spec.class_means.clone();
  const double theta = spec.shift_rotation_degrees * (3.14159265358979323846 / 180.0);
  const double ct = std::cos(theta), st = std::sin(theta);
  for (int k = 0; k < c; ++k) {
    if (d >= 2 && theta != 0.0) {
      const double m0 = target_means.at(k, 0), m1 = target_means.at(k, 1);
      target_means.at(k, 0) = ct * m0 - st * m1;
      target_means.at(k, 1) = st * m0 + ct * m1;
    }
    if (!spec.shift_translation.empty())
      for (int f = 0; f < d; ++f)
        target_means.at(k, f) += spec.shift_translation[static_cast<std::size_t>(f)];
  }

  CounterRng src_feat(spec.seed, "csbm.source.features");
  CounterRng src_edge(spec.seed, "csbm.source.edges");
  CounterRng tgt_feat(spec.seed, "csbm.target.features");
  CounterRng tgt_edge(spec.seed, "csbm.target.edges");
  DomainGraph source =
      sample_domain(spec, spec.class_means, spec.p_in, spec.p_out, src_feat, src_edge);
  DomainGraph target = sample_domain(spec, target_means, tp_in, tp_out, tgt_feat, tgt_edge);
  return {std::move(source), std::move(target)};
}

}  // namespace adalign
