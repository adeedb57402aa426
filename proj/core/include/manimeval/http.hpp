#pragma once

#include <chrono>
#include <string>

#include "manimeval/error.hpp"

namespace manimeval::http {

struct EndpointConfig {
  /// Full URL including path, e.g. "http://127.0.0.1:8000/v1/embeddings".
  std::string url;
  /// Name of the environment variable holding a bearer token; empty for none.
  std::string api_key_env;
  std::chrono::milliseconds timeout{std::chrono::seconds(60)};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_factor = 2.0;
};

/// Thrown once retries are exhausted or on a non-retryable response.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status) : Error(what), status_(status) {}
  /// HTTP status, or 0 when no response arrived.
  [[nodiscard]] int status() const { return status_; }

 private:
  int status_;
};

/// POSTs JSON bodies to one endpoint. Connection failures, 408, 429 and 5xx
/// are retried with exponential backoff; other statuses fail immediately.
/// Thread-safe: every call opens its own connection.
class JsonClient {
 public:
  explicit JsonClient(EndpointConfig config);

  /// Returns the response body of a 2xx reply.
  [[nodiscard]] std::string post(const std::string& json_body) const;

  [[nodiscard]] const EndpointConfig& config() const { return config_; }

 private:
  EndpointConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

}  // namespace manimeval::http
