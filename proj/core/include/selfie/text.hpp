#pragma once

#include <span>
#include <string>
#include <string_view>

namespace selfie {

/// Locale-independent simple uppercasing of UTF-8 text. Covers ASCII,
/// Latin-1, Latin Extended-A, Greek and Cyrillic one-to-one mappings; every
/// other code point (and any invalid byte) passes through unchanged.
std::string to_upper_simple(std::string_view utf8);

/// True iff the text has at least one cased letter and none is lowercase.
/// Non-alphabetic and caseless characters are ignored.
bool is_all_caps(std::string_view utf8);

/// Collapses runs of whitespace to one ASCII space and trims both ends.
std::string normalize_whitespace(std::string_view text);

/// Case-insensitive substring match on whitespace-normalized text.
bool contains_alias(std::string_view text, std::string_view alias);
bool contains_any_alias(std::string_view text, std::span<const std::string> aliases);

std::string trim(std::string_view text);

}  // namespace selfie
