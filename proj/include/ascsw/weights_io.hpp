#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "ascsw/neural_blocks.hpp"

namespace ascsw::nn {

/// One of the three block parameter sets a weight container can hold.
using BlockParams = std::variant<ASConvParams, ASCSPPParams, ChannelAttentionParams>;

/// Writes `<stem>.json` (manifest: block topology, tensor names, shapes,
/// dtype, byte offsets) and `<stem>.bin` (little-endian float32 blob).
/// `manifest_path` names the JSON file; the blob sits next to it.
void save_weights(const std::filesystem::path& manifest_path, const BlockParams& block);

/// Throws IoError for unreadable files and ValidationError for manifests
/// whose shapes or offsets disagree with the blob.
BlockParams load_weights(const std::filesystem::path& manifest_path);

std::string block_type_name(const BlockParams& block);

}  // namespace ascsw::nn
