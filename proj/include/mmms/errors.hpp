#pragma once

#include <stdexcept>
#include <string>

namespace mmms {

// Base of every error the library raises on purpose. The CLI maps the
// subclasses below onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class PredictorError : public Error {
 public:
  using Error::Error;
};

// Child sent something that does not follow the wire protocol.
class ProtocolError : public PredictorError {
 public:
  ProtocolError(const std::string& what, std::string payload)
      : PredictorError(what), payload_(std::move(payload)) {}
  const std::string& payload() const noexcept { return payload_; }

 private:
  std::string payload_;
};

class TimeoutError : public PredictorError {
 public:
  using PredictorError::PredictorError;
};

class ChildExitError : public PredictorError {
 public:
  using PredictorError::PredictorError;
};

// Child reported {"type":"error"}.
class RemoteError : public PredictorError {
 public:
  using PredictorError::PredictorError;
};

}  // namespace mmms
