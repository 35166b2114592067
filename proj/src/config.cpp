#include "adalign/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "adalign/errors.hpp"

namespace adalign {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for '" + key + "': " + value);
  }
  if (used != value.size())
    throw ConfigError("config: trailing characters in '" + key + "': " + value);
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for '" + key + "': " + value);
  }
  if (used != value.size())
    throw ConfigError("config: trailing characters in '" + key + "': " + value);
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: bad unsigned value for '" + key + "': " + value);
  }
  if (used != value.size())
    throw ConfigError("config: trailing characters in '" + key + "': " + value);
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (double v : parse_double_list(key, value)) {
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
      throw ConfigError("config: expected integers in '" + key + "': " + value);
    out.push_back(i);
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt(v[i]);
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

KvMap parse_kv_text(const std::string& text) {
  KvMap map;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config: missing '=' (line " + std::to_string(lineno) + ")");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw FormatError("config: empty key (line " + std::to_string(lineno) + ")");
    if (value.empty())
      throw FormatError("config: empty value for '" + key + "' (line " +
                        std::to_string(lineno) + ")");
    if (!map.emplace(key, value).second)
      throw FormatError("config: duplicate key '" + key + "' (line " +
                        std::to_string(lineno) + ")");
  }
  return map;
}

KvMap parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_kv_text(buf.str());
}

void save_kv_file(const std::string& path, const KvMap& map) {
  std::ofstream out(path);
  if (!out) throw FormatError("config: cannot open '" + path + "' for writing");
  for (const auto& [key, value] : map) out << key << '=' << value << '\n';
}

void apply_train_entry(TrainConfig& cfg, const std::string& key,
                       const std::string& value) {
  if (key == "lambda") cfg.lambda = parse_double(key, value);
  else if (key == "kappa") cfg.kappa = parse_double(key, value);
  else if (key == "m") cfg.m = static_cast<int>(parse_int(key, value));
  else if (key == "k") cfg.k = static_cast<int>(parse_int(key, value));
  else if (key == "lr-delta") cfg.lr_delta = parse_double(key, value);
  else if (key == "lr-phi") cfg.lr_phi = parse_double(key, value);
  else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(key, value));
  else if (key == "grad-clip-norm") cfg.grad_clip_norm = parse_double(key, value);
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "sampler") cfg.sampler = sampler_kind_from_string(value);
  else if (key == "extra-propagation")
    cfg.extra_propagation = static_cast<int>(parse_int(key, value));
  else if (key == "eval-every") cfg.eval_every = static_cast<int>(parse_int(key, value));
  else if (key == "sampler-steps")
    cfg.sampler_steps = static_cast<int>(parse_int(key, value));
  else if (key == "hidden-dims") cfg.hidden_dims = parse_int_list(key, value);
  else if (key == "embed-dim") cfg.embed_dim = static_cast<int>(parse_int(key, value));
  else throw ConfigError("config: unknown key '" + key + "'");
}

TrainConfig train_config_from(const KvMap& map) {
  TrainConfig cfg;
  for (const auto& [key, value] : map) apply_train_entry(cfg, key, value);
  validate_config(cfg);
  return cfg;
}

KvMap train_config_map(const TrainConfig& cfg) {
  KvMap map;
  map["lambda"] = fmt(cfg.lambda);
  map["kappa"] = fmt(cfg.kappa);
  map["m"] = std::to_string(cfg.m);
  map["k"] = std::to_string(cfg.k);
  map["lr-delta"] = fmt(cfg.lr_delta);
  map["lr-phi"] = fmt(cfg.lr_phi);
  map["epochs"] = std::to_string(cfg.epochs);
  map["grad-clip-norm"] = fmt(cfg.grad_clip_norm);
  map["seed"] = std::to_string(cfg.seed);
  map["sampler"] = to_string(cfg.sampler);
  map["extra-propagation"] = std::to_string(cfg.extra_propagation);
  map["eval-every"] = std::to_string(cfg.eval_every);
  map["sampler-steps"] = std::to_string(cfg.sampler_steps);
  map["hidden-dims"] = join_ints(cfg.hidden_dims);
  map["embed-dim"] = std::to_string(cfg.embed_dim);
  return map;
}

SynthSpec synth_spec_from(const KvMap& map) {
  SynthSpec spec;
  for (const auto& [key, value] : map) {
    if (key == "num-nodes") spec.num_nodes = static_cast<int>(parse_int(key, value));
    else if (key == "feature-dim")
      spec.feature_dim = static_cast<int>(parse_int(key, value));
    else if (key == "num-classes")
      spec.num_classes = static_cast<int>(parse_int(key, value));
    else if (key == "mean-separation") spec.mean_separation = parse_double(key, value);
    else if (key == "feature-sigma") spec.feature_sigma = parse_double(key, value);
    else if (key == "p-in") spec.p_in = parse_double(key, value);
    else if (key == "p-out") spec.p_out = parse_double(key, value);
    else if (key == "shift-translation")
      spec.shift_translation = parse_double_list(key, value);
    else if (key == "shift-rotation-degrees")
      spec.shift_rotation_degrees = parse_double(key, value);
    else if (key == "shift-delta-p-in") spec.shift_delta_p_in = parse_double(key, value);
    else if (key == "shift-delta-p-out")
      spec.shift_delta_p_out = parse_double(key, value);
    else if (key == "seed") spec.seed = parse_u64(key, value);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  if (!spec.shift_translation.empty() && spec.shift_translation.size() != 1 &&
      spec.shift_translation.size() != static_cast<std::size_t>(spec.feature_dim))
    throw ConfigError("config: shift-translation needs 1 or feature-dim values");
  return spec;
}

KvMap synth_spec_map(const SynthSpec& spec) {
  KvMap map;
  map["num-nodes"] = std::to_string(spec.num_nodes);
  map["feature-dim"] = std::to_string(spec.feature_dim);
  map["num-classes"] = std::to_string(spec.num_classes);
  map["mean-separation"] = fmt(spec.mean_separation);
  map["feature-sigma"] = fmt(spec.feature_sigma);
  map["p-in"] = fmt(spec.p_in);
  map["p-out"] = fmt(spec.p_out);
  map["shift-translation"] =
      spec.shift_translation.empty() ? "0" : join(spec.shift_translation);
  map["shift-rotation-degrees"] = fmt(spec.shift_rotation_degrees);
  map["shift-delta-p-in"] = fmt(spec.shift_delta_p_in);
  map["shift-delta-p-out"] = fmt(spec.shift_delta_p_out);
  map["seed"] = std::to_string(spec.seed);
  return map;
}

CsbmSpec to_csbm(const SynthSpec& spec) {
  CsbmSpec out;
  out.num_nodes = spec.num_nodes;
  out.feature_dim = spec.feature_dim;
  out.num_classes = spec.num_classes;
  out.class_means = simplex_means(spec.num_classes, spec.feature_dim,
                                  spec.mean_separation);
  out.feature_sigma = spec.feature_sigma;
  out.p_in = spec.p_in;
  out.p_out = spec.p_out;
  if (spec.shift_translation.size() == 1)
    out.shift_translation.assign(static_cast<std::size_t>(spec.feature_dim),
                                 spec.shift_translation[0]);
  else
    out.shift_translation = spec.shift_translation;
  out.shift_rotation_degrees = spec.shift_rotation_degrees;
  out.shift_delta_p_in = spec.shift_delta_p_in;
  out.shift_delta_p_out = spec.shift_delta_p_out;
  out.seed = spec.seed;
  return out;
}

}  // namespace adalign
