#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adalign/graph.hpp"
#include "adalign/trainer.hpp"

namespace adalign {

using KvMap = std::map<std::string, std::string>;

// Flat key=value format: one pair per line, '#' starts a comment, blank
// lines ignored. Duplicate keys are rejected.
KvMap parse_kv_text(const std::string& text);   // FormatError
KvMap parse_kv_file(const std::string& path);   // FormatError, message has line number
void save_kv_file(const std::string& path, const KvMap& map);

// Keys are the kebab-case CLI flag names (lambda, kappa, m, k, lr-delta,
// lr-phi, epochs, grad-clip-norm, seed, sampler, extra-propagation,
// eval-every, sampler-steps, hidden-dims, embed-dim).
void apply_train_entry(TrainConfig& config, const std::string& key,
                       const std::string& value);  // ConfigError
TrainConfig train_config_from(const KvMap& map);   // defaults + entries, validated
KvMap train_config_map(const TrainConfig& config); // every field materialized

// File-level synthetic-task spec; class means are axis-aligned at the
// given separation, a single shift-translation value broadcasts over all
// feature dimensions.
struct SynthSpec {
  int num_nodes = 1000;
  int feature_dim = 16;
  int num_classes = 2;
  double mean_separation = 2.0;
  double feature_sigma = 1.0;
  double p_in = 0.05;
  double p_out = 0.02;
  std::vector<double> shift_translation;
  double shift_rotation_degrees = 0.0;
  double shift_delta_p_in = 0.0;
  double shift_delta_p_out = 0.0;
  std::uint64_t seed = 0;
};

SynthSpec synth_spec_from(const KvMap& map);  // ConfigError
KvMap synth_spec_map(const SynthSpec& spec);
CsbmSpec to_csbm(const SynthSpec& spec);

}  // namespace adalign
