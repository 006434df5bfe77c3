#pragma once

#include <stdexcept>
#include <string>

namespace sumscore {

// Base class for all errors raised by this library.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed external input: bad JSON/CSV syntax, wrong field types,
// unparseable numbers. Carries enough context to locate the offending line.
class parse_error : public error {
 public:
  explicit parse_error(const std::string& what) : error(what) {}
};

// Structurally valid input that violates a documented precondition:
// out-of-range parameter, unknown id, empty collection where one is required.
class argument_error : public error {
 public:
  explicit argument_error(const std::string& what) : error(what) {}
};

// A persisted artifact does not match the data it claims to describe
// (hash mismatch, version mismatch, truncated file).
class integrity_error : public error {
 public:
  explicit integrity_error(const std::string& what) : error(what) {}
};

// Input is valid but the requested statistic is undefined on it
// (zero variance, empty weight table, too few points).
class degenerate_input_error : public error {
 public:
  explicit degenerate_input_error(const std::string& what) : error(what) {}
};

}  // namespace sumscore
