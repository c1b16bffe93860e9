// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/io.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "revsum/error.hpp"

namespace revsum::io {

Format parse_format(std::string_view name) {
  if (name == "tsv") return Format::Tsv;
  if (name == "csv") return Format::Csv;
  throw ArgumentError("unknown format '" + std::string(name) + "' (expected tsv or csv)");
}

std::optional<std::size_t> DelimitedFile::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::string escape_tsv(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (const char c : field) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_tsv(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] != '\\' || i + 1 == field.size()) {
      out += field[i];
      continue;
    }
    switch (field[i + 1]) {
      case '\\': out += '\\'; ++i; break;
      case 't': out += '\t'; ++i; break;
      case 'n': out += '\n'; ++i; break;
      case 'r': out += '\r'; ++i; break;
      default: out += '\\';
    }
  }
  return out;
}

namespace {

std::vector<std::vector<std::string>> split_tsv_lines(std::string_view content) {
  std::vector<std::vector<std::string>> records;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    std::size_t fs = 0;
    while (true) {
      const auto tab = line.find('\t', fs);
      if (tab == std::string_view::npos) {
        fields.push_back(unescape_tsv(line.substr(fs)));
        break;
      }
      fields.push_back(unescape_tsv(line.substr(fs, tab - fs)));
      fs = tab + 1;
    }
    records.push_back(std::move(fields));
    start = end + 1;
  }
  return records;
}

struct CsvRecord {
  std::vector<std::string> fields;
  bool unterminated = false;
};

std::vector<CsvRecord> split_csv_records(std::string_view content) {
  std::vector<CsvRecord> records;
  CsvRecord rec;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  const auto finish_field = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  const auto finish_record = [&] {
    finish_field();
    records.push_back(std::move(rec));
    rec = CsvRecord{};
  };
  while (i < content.size()) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      finish_field();
    } else if (c == '\n') {
      finish_record();
    } else if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') {
      // CRLF: the LF closes the record
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) {
    rec.unterminated = true;
    finish_record();
  } else if (field_started || !rec.fields.empty() || !field.empty()) {
    finish_record();
  }
  return records;
}

}  // namespace

DelimitedFile parse_delimited(std::string_view content, Format format) {
  DelimitedFile file;
  std::vector<std::vector<std::string>> records;
  std::vector<bool> unterminated;
  if (format == Format::Tsv) {
    records = split_tsv_lines(content);
    unterminated.assign(records.size(), false);
  } else {
    for (auto& r : split_csv_records(content)) {
      unterminated.push_back(r.unterminated);
      records.push_back(std::move(r.fields));
    }
  }
  if (records.empty()) return file;
  file.header = std::move(records.front());
  std::size_t row_number = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    // blank lines are not data rows
    if (records[i].size() == 1 && records[i][0].empty() && !unterminated[i]) continue;
    RawRow row;
    row.row_number = ++row_number;
    row.fields = std::move(records[i]);
    if (unterminated[i]) {
      row.error = "unterminated quoted field";
    } else if (row.fields.size() != file.header.size()) {
      row.error = "expected " + std::to_string(file.header.size()) + " fields, found " +
                  std::to_string(row.fields.size());
    }
    file.rows.push_back(std::move(row));
  }
  return file;
}

DelimitedFile read_delimited(const std::filesystem::path& path, Format format) {
  return parse_delimited(read_file(path), format);
}

std::string format_tsv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  const auto emit = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += '\t';
      out += escape_tsv(fields[i]);
    }
    out += '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename onto " + path.string() + ": " + ec.message());
}

void append_line_locked(const std::filesystem::path& path, std::string_view line) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  if (::flock(fd, LOCK_EX) != 0) {
    ::close(fd);
    throw IoError("cannot lock " + path.string());
  }
  std::string buf(line);
  buf += '\n';
  std::size_t off = 0;
  bool ok = true;
  while (off < buf.size()) {
    const auto n = ::write(fd, buf.data() + off, buf.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ok = false;
      break;
    }
    off += static_cast<std::size_t>(n);
  }
  ::flock(fd, LOCK_UN);
  ::close(fd);
  if (!ok) throw IoError("append failed on " + path.string());
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                               EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_file(path));
}

}  // namespace revsum::io
