#pragma once

#include <stdexcept>
#include <string>

namespace manimeval {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (empty sequence, size mismatch,
/// non-finite input, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values (weights not summing to one, bad enums).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Missing executables, unreadable/unwritable paths.
class EnvironmentError : public Error {
 public:
  using Error::Error;
};

/// Video decoding failures. `what()` carries decoder diagnostics.
class MediaError : public Error {
 public:
  using Error::Error;
};

/// Embedding provider failures (transport, HTTP status, malformed body).
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// Chat-completion endpoint failures after retries are exhausted.
class EndpointError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset files and reference renders that fail.
class DatasetError : public Error {
 public:
  using Error::Error;
};

}  // namespace manimeval
