#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace selfie {

/// 64-bit FNV-1a. Used for config/dataset digests and weight checksums,
/// never for anything security-relevant.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;

std::string to_hex(std::uint64_t value);

}  // namespace selfie
