#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adalign/checkpoint.hpp"
#include "adalign/config.hpp"
#include "adalign/encoder.hpp"
#include "adalign/errors.hpp"
#include "adalign/eval.hpp"
#include "adalign/graph.hpp"
#include "adalign/manifest.hpp"
#include "adalign/tensor.hpp"
#include "adalign/trainer.hpp"
#include "adalign/verify.hpp"

namespace fs = std::filesystem;
using namespace adalign;

namespace {

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ADALIGN_OUT_DIR"); env && *env) return env;
  return ".";
}

// CLI flag > config file > built-in default: the file is parsed first and
// flag values overwrite its entries before anything is validated.
KvMap merged_entries(const std::string& config_path, const KvMap& overrides) {
  KvMap map = config_path.empty() ? KvMap{} : parse_kv_file(config_path);
  for (const auto& [key, value] : overrides) map[key] = value;
  return map;
}

void bind_keys(CLI::App* cmd, KvMap& overrides, const std::vector<const char*>& keys) {
  for (const char* key : keys) {
    const std::string k = key;
    cmd->add_option_function<std::string>(
        "--" + k, [&overrides, k](const std::string& v) { overrides[k] = v; },
        "Overrides the config-file value of '" + k + "'");
  }
}

struct LoadedPair {
  DomainGraph source;
  DomainGraph target;
  KvMap inputs;  // label -> path, for the manifest
};

// num_classes < 1 means "infer from the source labels"; eval passes the
// checkpoint's class count instead and tolerates a missing source label
// file.
LoadedPair load_pair(const std::string& dir, int num_classes, bool require_source_labels) {
  LoadedPair out;
  const std::string sf = dir + "/source_features.txt";
  const std::string sl = dir + "/source_labels.txt";
  const std::string se = dir + "/source_edges.txt";
  const std::string tf = dir + "/target_features.txt";
  const std::string tl = dir + "/target_labels.txt";
  const std::string te = dir + "/target_edges.txt";

  Tensor xs = load_features(sf);
  std::vector<int> ys;
  if (require_source_labels || fs::exists(sl)) {
    const int bound = num_classes >= 1 ? num_classes : std::numeric_limits<int>::max();
    ys = load_labels(sl, bound);
  }
  if (num_classes < 1) {
    if (ys.empty()) throw ContractError("train needs source labels: " + sl);
    num_classes = 1 + *std::max_element(ys.begin(), ys.end());
  }
  out.source = assemble_graph(num_classes, xs, load_edge_list(se, xs.shape[0]).edges, ys);
  out.inputs["source_features"] = sf;
  out.inputs["source_edges"] = se;
  if (!out.source.labels.empty()) out.inputs["source_labels"] = sl;

  Tensor xt = load_features(tf);
  std::vector<int> yt;
  if (fs::exists(tl)) yt = load_labels(tl, num_classes);
  out.target = assemble_graph(num_classes, xt, load_edge_list(te, xt.shape[0]).edges, yt);
  out.inputs["target_features"] = tf;
  out.inputs["target_edges"] = te;
  if (!out.target.labels.empty()) out.inputs["target_labels"] = tl;
  return out;
}

int run_synth(const std::string& config_path, const KvMap& overrides,
              const std::string& out_flag) {
  const SynthSpec spec = synth_spec_from(merged_entries(config_path, overrides));
  const std::string out = resolve_out_dir(out_flag);
  fs::create_directories(out);

  const auto [source, target] = generate_csbm(to_csbm(spec));
  save_edge_list(out + "/source_edges.txt", source.edges);
  save_features(out + "/source_features.txt", source.features);
  save_labels(out + "/source_labels.txt", source.labels);
  save_edge_list(out + "/target_edges.txt", target.edges);
  save_features(out + "/target_features.txt", target.features);
  save_labels(out + "/target_labels.txt", target.labels);
  save_kv_file(out + "/resolved_spec.txt", synth_spec_map(spec));

  std::cout << "synth: source " << source.num_nodes << " nodes / " << source.edges.size()
            << " edges, target " << target.num_nodes << " nodes / "
            << target.edges.size() << " edges -> " << out << "\n";
  return 0;
}

int run_train(const std::string& config_path, const KvMap& overrides,
              const std::string& data_dir, const std::string& out_flag) {
  const TrainConfig cfg = train_config_from(merged_entries(config_path, overrides));
  const std::string out = resolve_out_dir(out_flag);
  fs::create_directories(out);

  const LoadedPair data = load_pair(data_dir, 0, true);

  RunManifest manifest;
  manifest.command = "train";
  manifest.config = train_config_map(cfg);
  manifest.seed = cfg.seed;
  manifest.inputs = data.inputs;
  manifest.out_dir = out;
  const std::string manifest_path = out + "/manifest.json";
  save_manifest(manifest_path, manifest);

  const FitResult result = fit(data.source, data.target, cfg);

  const std::string metrics_path = out + "/metrics.log";
  const std::string checkpoint_path = out + "/checkpoint.bin";
  save_metrics_log(metrics_path, result.metrics);
  save_checkpoint(checkpoint_path, result.state.delta, result.state.phi);
  manifest.artifacts["metrics.log"] = checksum_hex(fnv1a64_file(metrics_path));
  manifest.artifacts["checkpoint.bin"] = checksum_hex(fnv1a64_file(checkpoint_path));
  save_manifest(manifest_path, manifest);

  for (const auto& record : result.metrics) std::cout << metrics_line(record) << "\n";
  std::cout << "train: wrote " << metrics_path << ", " << checkpoint_path << ", "
            << manifest_path << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& data_dir,
             const std::string& out_flag, const DiscrepancyConfig& dcfg,
             int extra_propagation) {
  if (dcfg.kappa < 0.0 || dcfg.kappa > 1.0)
    throw ConfigError("eval: kappa must lie in [0, 1]");
  if (dcfg.m < 1 || dcfg.band_m < 1 || dcfg.k < 1)
    throw ConfigError("eval: m, band-m, and k must be positive");
  if (extra_propagation < 0)
    throw ConfigError("eval: extra-propagation must be non-negative");

  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const LoadedPair data = load_pair(data_dir, ckpt.encoder.num_classes(), false);
  const int want = ckpt.encoder.input_dim();
  if (data.source.feature_dim() != want)
    throw DimensionError("eval: checkpoint expects " + std::to_string(want) +
                         "-dim features, source graph has " +
                         std::to_string(data.source.feature_dim()));
  if (data.target.feature_dim() != want)
    throw DimensionError("eval: checkpoint expects " + std::to_string(want) +
                         "-dim features, target graph has " +
                         std::to_string(data.target.feature_dim()));

  const SparseMatrix adj_s = to_csr(normalize_adjacency(data.source));
  const SparseMatrix adj_t = to_csr(normalize_adjacency(data.target));
  Tape tape;
  Tensor zs = encode(tape, adj_s, data.source.features, ckpt.encoder, 0);
  Tensor zt = encode(tape, adj_t, data.target.features, ckpt.encoder, extra_propagation);
  const DiscrepancyReport report = ckpt.has_sampler
                                       ? discrepancy_report(zs, zt, dcfg, ckpt.sampler)
                                       : discrepancy_report(zs, zt, dcfg);

  std::ostringstream text;
  char line[128];
  if (data.source.has_labels()) {
    const auto [micro, macro] =
        graph_f1(ckpt.encoder, adj_s, data.source.features, data.source.labels, 0);
    std::snprintf(line, sizeof(line), "source micro_f1:%.17g macro_f1:%.17g", micro, macro);
    text << line << "\n";
  }
  if (data.target.has_labels()) {
    const auto [micro, macro] = graph_f1(ckpt.encoder, adj_t, data.target.features,
                                         data.target.labels, extra_propagation);
    std::snprintf(line, sizeof(line), "target micro_f1:%.17g macro_f1:%.17g", micro, macro);
    text << line << "\n";
  }
  text << report_line(report) << "\n";

  const std::string out = resolve_out_dir(out_flag);
  fs::create_directories(out);
  const std::string report_path = out + "/report.txt";
  std::ofstream file(report_path);
  if (!file) throw FormatError("eval: cannot open '" + report_path + "' for writing");
  file << text.str();

  std::cout << text.str();
  std::cout << "eval: wrote " << report_path << "\n";
  return 0;
}

int run_export(const std::string& log_path, const std::string& out_path) {
  const std::vector<MetricsRecord> log = load_metrics_log(log_path);
  std::ofstream out(out_path);
  if (!out) throw FormatError("export-curves: cannot open '" + out_path + "' for writing");
  out << "epoch,source_loss,align_loss,micro_f1,macro_f1,clamp_count,wall_ms\n";
  char row[320];
  for (const MetricsRecord& r : log) {
    std::snprintf(row, sizeof(row), "%d,%.17g,%.17g,%.17g,%.17g,%d,%.17g", r.epoch,
                  r.source_loss, r.align_loss, r.micro_f1, r.macro_f1, r.clamp_count,
                  r.wall_ms);
    out << row << "\n";
  }
  std::cout << "export-curves: wrote " << out_path << " (" << log.size() << " rows)\n";
  return 0;
}

int run_verify(const std::string& suite) {
  const bool ok = run_verify_suite(suite, std::cout);
  std::cout << "verify " << suite << ": " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adalign: adaptive spectral alignment for graph domain adaptation"};
  app.require_subcommand(1);

  std::string synth_config, synth_out;
  KvMap synth_overrides;
  CLI::App* synth = app.add_subcommand("synth", "Generate a shifted source/target graph pair");
  synth->add_option("--config", synth_config, "Spec file (key=value lines)");
  synth->add_option("--out-dir", synth_out, "Output directory (default $ADALIGN_OUT_DIR or .)");
  bind_keys(synth, synth_overrides,
            {"num-nodes", "feature-dim", "num-classes", "mean-separation", "feature-sigma",
             "p-in", "p-out", "shift-translation", "shift-rotation-degrees",
             "shift-delta-p-in", "shift-delta-p-out", "seed"});

  std::string train_config, train_data, train_out;
  KvMap train_overrides;
  CLI::App* train = app.add_subcommand("train", "Run the alternating minimax loop");
  train->add_option("--config", train_config, "Config file (key=value lines)");
  train->add_option("--data", train_data, "Directory with source/target graph files")
      ->required();
  train->add_option("--out-dir", train_out, "Output directory (default $ADALIGN_OUT_DIR or .)");
  bind_keys(train, train_overrides,
            {"lambda", "kappa", "m", "k", "lr-delta", "lr-phi", "epochs", "grad-clip-norm",
             "seed", "sampler", "extra-propagation", "eval-every", "sampler-steps",
             "hidden-dims", "embed-dim"});

  std::string eval_checkpoint, eval_data, eval_out;
  DiscrepancyConfig eval_dcfg;
  int eval_extra_propagation = 0;
  CLI::App* eval = app.add_subcommand("eval", "Score a checkpoint on a graph pair");
  eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", eval_data, "Directory with source/target graph files")
      ->required();
  eval->add_option("--out-dir", eval_out, "Report directory (default $ADALIGN_OUT_DIR or .)");
  eval->add_option("--m", eval_dcfg.m, "Frequencies for the headline discrepancy");
  eval->add_option("--band-m", eval_dcfg.band_m, "Frequencies per radius band");
  eval->add_option("--kappa", eval_dcfg.kappa, "Amplitude/phase weight in [0, 1]");
  eval->add_option("--k", eval_dcfg.k, "Mixture components when the checkpoint has no sampler");
  eval->add_option("--seed", eval_dcfg.seed, "Seed for the report's frequency draws");
  eval->add_option("--extra-propagation", eval_extra_propagation,
                   "Extra propagation steps on the target branch");

  std::string verify_suite;
  CLI::App* verify = app.add_subcommand("verify", "Run one property suite");
  verify->add_option("suite", verify_suite, "gradcheck | cf | decomposition | mc")
      ->required();

  std::string export_log, export_out;
  CLI::App* export_curves =
      app.add_subcommand("export-curves", "Convert a metrics log to CSV");
  export_curves->add_option("--log", export_log, "Metrics log file")->required();
  export_curves->add_option("--out", export_out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return run_synth(synth_config, synth_overrides, synth_out);
    if (train->parsed())
      return run_train(train_config, train_overrides, train_data, train_out);
    if (eval->parsed())
      return run_eval(eval_checkpoint, eval_data, eval_out, eval_dcfg,
                      eval_extra_propagation);
    if (verify->parsed()) return run_verify(verify_suite);
    if (export_curves->parsed()) return run_export(export_log, export_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
