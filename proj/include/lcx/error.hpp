#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace lcx {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, inconsistent shapes, missing files.
class InputError : public Error {
 public:
  using Error::Error;
};

// Decode failure in a binary or CSV file. The message names the byte offset
// (binary) or the 1-based row (CSV) where decoding stopped.
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

// Failure inside a classifier oracle: the subprocess died, timed out, or
// violated the NDJSON protocol.
class OracleError : public Error {
 public:
  OracleError(const std::string& what, std::optional<std::size_t> batch = std::nullopt)
      : Error(batch ? what + " (batch " + std::to_string(*batch) + ")" : what), batch_(batch) {}

  std::optional<std::size_t> batch() const noexcept { return batch_; }

 private:
  std::optional<std::size_t> batch_;
};

}  // namespace lcx
