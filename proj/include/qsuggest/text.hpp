#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qsuggest {

/// Decodes UTF-8; malformed sequences become U+FFFD.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

/// Lowercases ASCII, Latin-1, Greek and Cyrillic letters. Other code points
/// pass through unchanged.
char32_t fold_case(char32_t cp);

/// Lowercase and split on non-alphanumeric characters. Non-ASCII letters and
/// digits are kept inside tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Lowercase, collapse internal whitespace, strip the ends. No stemming.
std::string normalize_query(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// FNV-1a, used wherever a stable (platform independent) string hash is needed.
std::uint64_t stable_hash(std::string_view text);

}  // namespace qsuggest
