// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace revsum::text {

/// True when `s` is well-formed UTF-8 (no overlongs, no surrogates).
bool is_valid_utf8(std::string_view s);

/// Number of Unicode scalar values in a valid UTF-8 string.
std::size_t utf8_length(std::string_view s);

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool iequals_prefix(std::string_view s, std::string_view prefix);

std::vector<std::string> split(std::string_view s, std::string_view delim);
std::string join(const std::vector<std::string>& parts, std::string_view delim);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

/// Lowercases ASCII and splits on runs of characters that are not ASCII
/// alphanumerics. Bytes >= 0x80 count as word characters so multi-byte
/// letters stay inside their token. Empty tokens are never produced.
std::vector<std::string> tokenize(std::string_view s);

std::optional<long long> parse_int(std::string_view s);
std::optional<double> parse_double(std::string_view s);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace revsum::text
