#include "adalign/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "adalign/errors.hpp"
#include "adalign/rng.hpp"
#include "adalign/spectral.hpp"

namespace adalign {

namespace {

double scalar_value(const Tensor& t) { return t.ptr()[0]; }

std::string formatted(const char* fmt, const DiscrepancyReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, r.nsd, r.nsd_amplitude, r.nsd_phase, r.mmd,
                r.band_low, r.band_mid, r.band_high);
  return buf;
}

}  // namespace

long ConfusionCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0L);
}

ConfusionCounts confusion_counts(const std::vector<int>& truth,
                                 const std::vector<int>& pred) {
  if (truth.size() != pred.size())
    throw ContractError("eval: label vectors differ in length");
  if (truth.empty()) throw ContractError("eval: empty label vectors");
  int c = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || pred[i] < 0) throw RangeError("eval: negative class id");
    c = std::max(c, std::max(truth[i], pred[i]) + 1);
  }
  ConfusionCounts cc;
  cc.num_classes = c;
  cc.counts.assign(static_cast<std::size_t>(c) * c, 0);
  for (std::size_t i = 0; i < truth.size(); ++i)
    ++cc.counts[static_cast<std::size_t>(truth[i]) * c + pred[i]];
  return cc;
}

double micro_f1(const std::vector<int>& truth, const std::vector<int>& pred) {
  ConfusionCounts cc = confusion_counts(truth, pred);
  long correct = 0;
  for (int i = 0; i < cc.num_classes; ++i) correct += cc.at(i, i);
  return static_cast<double>(correct) / static_cast<double>(cc.total());
}

double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred) {
  ConfusionCounts cc = confusion_counts(truth, pred);
  double sum = 0.0;
  int included = 0;
  for (int c = 0; c < cc.num_classes; ++c) {
    long tp = cc.at(c, c);
    long fp = 0;
    long fn = 0;
    for (int o = 0; o < cc.num_classes; ++o) {
      if (o == c) continue;
      fp += cc.at(o, c);
      fn += cc.at(c, o);
    }
    if (tp + fp + fn == 0) continue;
    sum += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    ++included;
  }
  return sum / included;
}

DiscrepancyReport discrepancy_report(const Tensor& z_source, const Tensor& z_target,
                                     const DiscrepancyConfig& config,
                                     const SamplerParams& sampler) {
  if (z_source.shape.size() != 2 || z_target.shape.size() != 2 ||
      z_source.cols() != z_target.cols())
    throw ContractError("eval: embedding dimensions do not match");
  if (z_source.cols() != sampler.dim())
    throw ContractError("eval: sampler dimension does not match embeddings");
  if (config.band_m < 1) throw ConfigError("eval: band_m must be positive");

  const int d = z_source.cols();
  DiscrepancyReport r;

  Tape tape;
  CounterRng rng(config.seed, "report.frequencies");
  FrequencyBatch batch = sample_frequencies(tape, sampler, config.m, d, rng);
  r.nsd = scalar_value(
      alignment_loss(tape, z_source, z_target, batch.freqs, batch.weights, config.kappa));
  r.nsd_amplitude = scalar_value(
      alignment_loss(tape, z_source, z_target, batch.freqs, batch.weights, 1.0));
  r.nsd_phase = scalar_value(
      alignment_loss(tape, z_source, z_target, batch.freqs, batch.weights, 0.0));

  r.mmd = mmd_rbf(z_source, z_target, median_heuristic_bandwidth(z_source, z_target));

  const struct {
    double lo, hi;
    const char* stream;
    double DiscrepancyReport::* field;
  } bands[] = {
      {0.0, 1.0, "report.band.low", &DiscrepancyReport::band_low},
      {1.0, 10.0, "report.band.mid", &DiscrepancyReport::band_mid},
      {10.0, 20.0, "report.band.high", &DiscrepancyReport::band_high},
  };
  for (const auto& band : bands) {
    CounterRng band_rng(config.seed, band.stream);
    FrequencyBatch fb = fixed_band_frequencies(BandKind::low, band.lo, band.hi,
                                               config.band_m, d, band_rng);
    r.*band.field = scalar_value(
        alignment_loss(tape, z_source, z_target, fb.freqs, fb.weights, config.kappa));
  }
  return r;
}

DiscrepancyReport discrepancy_report(const Tensor& z_source, const Tensor& z_target,
                                     const DiscrepancyConfig& config) {
  return discrepancy_report(z_source, z_target, config,
                            init_sampler(config.k, z_source.cols()));
}

std::string report_line(const DiscrepancyReport& r) {
  return formatted(
      "nsd:%.17g nsd_amplitude:%.17g nsd_phase:%.17g mmd:%.17g "
      "band_low:%.17g band_mid:%.17g band_high:%.17g",
      r);
}

std::string report_csv_header() {
  return "nsd,nsd_amplitude,nsd_phase,mmd,band_low,band_mid,band_high";
}

std::string report_csv_row(const DiscrepancyReport& r) {
  return formatted("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r);
}

}  // namespace adalign
