#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tabnet/model/adam.hpp"
#include "tabnet/model/unet.hpp"

namespace tabnet::model {

/// Everything in a checkpoint besides the tensors.
struct CheckpointInfo {
  NetworkSpec spec;
  std::uint64_t config_hash = 0;
  std::string config_text;  // effective configuration of the producing run
  int epoch = 0;            // epochs completed
  double best_metric = -1.0;
  int best_epoch = -1;
};

/// Binary container: magic, format version, info, per-parameter weights and
/// Adam moments, CRC-32 trailer. Written to a temporary file and renamed.
void save_checkpoint(const std::filesystem::path& path, const UNet& net, const Adam* optimizer,
                     const CheckpointInfo& info);

/// Reads info only (validates the checksum).
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

/// Restores weights into net (and moments into optimizer when given).
/// Throws ParseError for damaged files and ConfigError when the stored
/// NetworkSpec differs from net.spec().
CheckpointInfo load_checkpoint(const std::filesystem::path& path, UNet& net,
                               Adam* optimizer = nullptr);

}  // namespace tabnet::model
