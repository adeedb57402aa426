#include "manimeval/providers.hpp"

#include <json.hpp>

#include "manimeval/error.hpp"
#include "manimeval/image.hpp"

namespace manimeval::providers {
namespace {

using nlohmann::json;

std::vector<std::vector<double>> request_embeddings(const http::JsonClient& client, json body, std::size_t expected) {
  std::string reply;
  try {
    reply = client.post(body.dump());
  } catch (const http::TransportError& e) {
    throw ProviderError(std::string("embedding provider: ") + e.what());
  }
  try {
    auto parsed = json::parse(reply);
    std::vector<std::vector<double>> out;
    for (const auto& item : parsed.at("data")) out.push_back(item.at("embedding").get<std::vector<double>>());
    if (out.size() != expected) {
      throw ProviderError("embedding provider returned " + std::to_string(out.size()) + " vectors for " +
                          std::to_string(expected) + " inputs");
    }
    return out;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed embedding response: ") + e.what());
  }
}

}  // namespace

HttpCodeEmbedder::HttpCodeEmbedder(http::EndpointConfig endpoint, std::string model)
    : client_(std::move(endpoint)), model_(std::move(model)) {}

std::vector<codemetrics::EmbeddingVector> HttpCodeEmbedder::embed(std::span<const std::string> inputs) {
  json body{{"input", json(std::vector<std::string>(inputs.begin(), inputs.end()))}};
  if (!model_.empty()) body["model"] = model_;
  return request_embeddings(client_, std::move(body), inputs.size());
}

HttpImageEmbedder::HttpImageEmbedder(http::EndpointConfig endpoint, std::string model, std::size_t batch_size)
    : client_(std::move(endpoint)), model_(std::move(model)), batch_size_(std::max<std::size_t>(1, batch_size)) {}

std::vector<std::vector<double>> HttpImageEmbedder::embed(std::span<const RgbImage> frames) {
  std::vector<std::vector<double>> out;
  out.reserve(frames.size());
  for (std::size_t start = 0; start < frames.size(); start += batch_size_) {
    auto batch = frames.subspan(start, std::min(batch_size_, frames.size() - start));
    json inputs = json::array();
    for (const auto& f : batch) inputs.push_back(base64_encode(encode_png(f)));
    json body{{"input", std::move(inputs)}, {"kind", "image"}};
    if (!model_.empty()) body["model"] = model_;
    auto vectors = request_embeddings(client_, std::move(body), batch.size());
    for (auto& v : vectors) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace manimeval::providers
