#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "selfie/adapter.hpp"

namespace selfie {

/// Adapter checkpoint (.siad):
///
///   "SIAD"  u16 version  u32 header_len  JSON header (header_len bytes)
///   float32 tensors, little-endian, row-major, in the order alpha, b, U, V, W
///
/// The header carries {kind, d, r, alpha_init, training_config_digest, seed}.
/// Decoding reports a bad magic/version/JSON as corrupt_header, an unknown kind
/// or kind/rank disagreement as kind_mismatch, a short tensor section as
/// truncated_tensor, and trailing bytes as dimension_mismatch.
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_adapter(const Adapter& adapter);
Adapter decode_adapter(std::span<const std::uint8_t> bytes);

void save_adapter(const Adapter& adapter, const std::filesystem::path& path);
Adapter load_adapter(const std::filesystem::path& path);

}  // namespace selfie
