#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace steel {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible array shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: unknown operator, bad hyperparameter, bad scheme.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (token ids out of range, bad JSON lines, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. calling Backward on a non-scalar.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A binary snapshot or shard could not be decoded. Carries the byte offset
/// at which decoding failed.
class RestoreError : public Error {
 public:
  RestoreError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Content that is already registered (MD5 collision with a known file).
class DuplicateDataError : public Error {
 public:
  DuplicateDataError(const std::string& what, std::string registered_path)
      : Error(what), registered_path_(std::move(registered_path)) {}

  const std::string& registered_path() const { return registered_path_; }

 private:
  std::string registered_path_;
};

/// Checkpoint bundle on disk failed verification.
class CorruptCheckpointError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required (e.g. NaN gradients).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace steel
