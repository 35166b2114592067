#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adalign/sampler.hpp"
#include "adalign/tensor.hpp"

namespace adalign {

// Rows are true classes, columns predicted.
struct ConfusionCounts {
  int num_classes = 0;
  std::vector<long> counts;

  long at(int truth, int pred) const {
    return counts[static_cast<std::size_t>(truth) * num_classes + pred];
  }
  long total() const;
};

ConfusionCounts confusion_counts(const std::vector<int>& truth,
                                 const std::vector<int>& pred);

// Global accuracy for single-label multiclass.
double micro_f1(const std::vector<int>& truth, const std::vector<int>& pred);

// Unweighted mean of per-class F1. Classes absent from both vectors are
// excluded; a class with no correct hits scores 0.
double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred);

struct DiscrepancyConfig {
  int m = 8192;        // frequencies for the headline alignment values
  int band_m = 2048;   // frequencies per radius band
  double kappa = 0.7;
  int k = 4;           // mixture components when no sampler is supplied
  std::uint64_t seed = 0;
};

struct DiscrepancyReport {
  double nsd = 0.0;        // at the configured kappa
  double nsd_amplitude = 0.0;  // kappa = 1
  double nsd_phase = 0.0;      // kappa = 0
  double mmd = 0.0;            // rbf, median-heuristic bandwidth
  double band_low = 0.0;       // radius [0, 1)
  double band_mid = 0.0;       // radius [1, 10)
  double band_high = 0.0;      // radius [10, 20)
};

// Frozen-embedding comparison of the alignment discrepancy against MMD,
// plus the radius-band breakdown. Deterministic given the seed.
DiscrepancyReport discrepancy_report(const Tensor& z_source, const Tensor& z_target,
                                     const DiscrepancyConfig& config);
DiscrepancyReport discrepancy_report(const Tensor& z_source, const Tensor& z_target,
                                     const DiscrepancyConfig& config,
                                     const SamplerParams& sampler);

std::string report_line(const DiscrepancyReport& report);
std::string report_csv_header();
std::string report_csv_row(const DiscrepancyReport& report);

}  // namespace adalign
