#include "adalign/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "adalign/errors.hpp"

namespace adalign {

namespace {

constexpr const char* kMagic = "adalign-checkpoint 1";

// Doubles are written verbatim; the format is defined as little-endian,
// which matches every platform this builds on.
void write_section(std::ofstream& out, const std::string& name, const Tensor& t) {
  out << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
  out.write(reinterpret_cast<const char*>(t.ptr()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

void write_file(const std::string& path, const EncoderParams& encoder,
                const SamplerParams* sampler) {
  encoder.check();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("checkpoint: cannot open '" + path + "' for writing");
  out << kMagic << '\n';
  for (std::size_t i = 0; i < encoder.weights.size(); ++i) {
    write_section(out, "encoder.weight." + std::to_string(i), encoder.weights[i]);
    write_section(out, "encoder.bias." + std::to_string(i), encoder.biases[i]);
  }
  write_section(out, "classifier.weight", encoder.cls_weight);
  write_section(out, "classifier.bias", encoder.cls_bias);
  if (sampler != nullptr) {
    write_section(out, "sampler.log_scales", sampler->log_scales);
    write_section(out, "sampler.mixture_logits", sampler->mixture_logits);
  }
  if (!out) throw FormatError("checkpoint: write to '" + path + "' failed");
}

}  // namespace

void save_checkpoint(const std::string& path, const EncoderParams& encoder) {
  write_file(path, encoder, nullptr);
}

void save_checkpoint(const std::string& path, const EncoderParams& encoder,
                     const SamplerParams& sampler) {
  write_file(path, encoder, &sampler);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw FormatError("checkpoint: bad magic line in '" + path + "'");

  std::map<std::string, Tensor> sections;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream header(line);
    std::string tag, name;
    int rows = 0, cols = 0;
    if (!(header >> tag >> name >> rows >> cols) || tag != "tensor" || rows < 1 ||
        cols < 1)
      throw FormatError("checkpoint: malformed section header '" + line + "'");
    if (sections.count(name))
      throw FormatError("checkpoint: duplicate section '" + name + "'");
    Tensor t({rows, cols});
    in.read(reinterpret_cast<char*>(t.ptr()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != t.numel() * sizeof(double))
      throw FormatError("checkpoint: truncated payload for section '" + name + "'");
    sections.emplace(name, std::move(t));
  }

  const auto take = [&](const std::string& name) {
    auto it = sections.find(name);
    if (it == sections.end())
      throw FormatError("checkpoint: missing section '" + name + "'");
    Tensor t = it->second;
    sections.erase(it);
    return t;
  };

  Checkpoint ckpt;
  for (std::size_t i = 0; sections.count("encoder.weight." + std::to_string(i)); ++i) {
    ckpt.encoder.weights.push_back(take("encoder.weight." + std::to_string(i)));
    ckpt.encoder.biases.push_back(take("encoder.bias." + std::to_string(i)));
  }
  if (ckpt.encoder.weights.empty())
    throw FormatError("checkpoint: no encoder layers in '" + path + "'");
  ckpt.encoder.cls_weight = take("classifier.weight");
  ckpt.encoder.cls_bias = take("classifier.bias");
  const bool has_scales = sections.count("sampler.log_scales") > 0;
  const bool has_logits = sections.count("sampler.mixture_logits") > 0;
  if (has_scales != has_logits)
    throw FormatError("checkpoint: incomplete sampler state in '" + path + "'");
  if (has_scales) {
    ckpt.sampler.log_scales = take("sampler.log_scales");
    ckpt.sampler.mixture_logits = take("sampler.mixture_logits");
    ckpt.has_sampler = true;
  }
  if (!sections.empty())
    throw FormatError("checkpoint: unrecognized section '" +
                      sections.begin()->first + "'");
  try {
    ckpt.encoder.check();
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint: inconsistent tensors: ") + e.what());
  }
  return ckpt;
}

}  // namespace adalign
