// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace revsum {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Missing or malformed column layout. column() names the offender.
class SchemaError : public Error {
 public:
  SchemaError(std::string column, const std::string& what)
      : Error(what), column_(std::move(column)) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Raised when review text would collide with a prompt separator or marker.
class ContentCollisionError : public Error {
 public:
  using Error::Error;
};

// Parse failure that keeps the raw text around for auditing.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

class VectorizationError : public Error {
 public:
  using Error::Error;
};

// HTTP failure. status() is 0 for transport errors (connect, timeout).
class HttpError : public Error {
 public:
  HttpError(int status, bool permanent, const std::string& what)
      : Error(what), status_(status), permanent_(permanent) {}
  int status() const { return status_; }
  bool permanent() const { return permanent_; }

 private:
  int status_;
  bool permanent_;
};

}  // namespace revsum
