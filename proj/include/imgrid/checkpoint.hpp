#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "imgrid/net.hpp"

namespace imgrid::nn {

/// Named-network checkpoint. Serialized as JSON with explicit shapes and a
/// format_version header; doubles round-trip bit-exactly.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  std::map<std::string, DenseNet> nets;
  std::map<std::string, double> meta;  // e.g. latent_dim for VAE checkpoints
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace imgrid::nn
