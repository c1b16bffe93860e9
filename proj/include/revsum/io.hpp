// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace revsum::io {

enum class Format { Tsv, Csv };

Format parse_format(std::string_view name);

/// One data row as read from disk. `row_number` is 1-based and counts data
/// rows only (the header is row 0). `error` is set for malformed rows.
struct RawRow {
  std::size_t row_number = 0;
  std::vector<std::string> fields;
  std::optional<std::string> error;
};

struct DelimitedFile {
  std::vector<std::string> header;
  std::vector<RawRow> rows;

  /// Index of `name` in the header, if present.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// Parses delimited text with a header line.
///
/// CSV follows RFC 4180 quoting (quoted fields may span lines). TSV fields
/// use backslash escapes for tab, newline, carriage return and backslash.
/// Rows whose field count differs from the header are kept with `error` set.
DelimitedFile parse_delimited(std::string_view content, Format format);
DelimitedFile read_delimited(const std::filesystem::path& path, Format format);

std::string escape_tsv(std::string_view field);
std::string unescape_tsv(std::string_view field);

/// Writes a TSV header plus rows, each field escaped.
std::string format_tsv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames over the target.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Appends one line under an exclusive advisory lock.
void append_line_locked(const std::filesystem::path& path, std::string_view line);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace revsum::io
