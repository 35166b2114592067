#pragma once

#include <string>

#include "adalign/encoder.hpp"
#include "adalign/sampler.hpp"

namespace adalign {

struct Checkpoint {
  EncoderParams encoder;
  SamplerParams sampler;
  bool has_sampler = false;
};

// One section per tensor: a textual "tensor <name> <rows> <cols>" header
// followed by rows*cols little-endian 64-bit floats.
void save_checkpoint(const std::string& path, const EncoderParams& encoder);
void save_checkpoint(const std::string& path, const EncoderParams& encoder,
                     const SamplerParams& sampler);

Checkpoint load_checkpoint(const std::string& path);  // FormatError

}  // namespace adalign
