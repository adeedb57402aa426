#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "manimeval/http.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <spdlog/spdlog.h>

#include "manimeval/error.hpp"

namespace manimeval::http {
namespace {

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

JsonClient::JsonClient(EndpointConfig config) : config_(std::move(config)) {
  const auto& url = config_.url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint url needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (config_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

std::string JsonClient::post(const std::string& json_body) const {
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* token = std::getenv(config_.api_key_env.c_str()); token && *token) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout).count() % 1000000;

  std::string last_error;
  int last_status = 0;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      auto delay = std::chrono::duration<double, std::milli>(config_.initial_backoff.count() *
                                                             std::pow(config_.backoff_factor, attempt - 1));
      spdlog::debug("retrying {} in {:.0f} ms ({})", config_.url, delay.count(), last_error);
      std::this_thread::sleep_for(delay);
    }
    httplib::Client client(origin_);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    auto res = client.Post(path_, headers, json_body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = "request to " + config_.url + " failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_status = res->status;
    last_error = "HTTP " + std::to_string(res->status) + " from " + config_.url + ": " + res->body.substr(0, 300);
    if (!retryable(res->status)) break;
  }
  throw TransportError(last_error, last_status);
}

}  // namespace manimeval::http
