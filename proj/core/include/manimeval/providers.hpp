#pragma once

#include "manimeval/codemetrics.hpp"
#include "manimeval/http.hpp"
#include "manimeval/videometrics.hpp"

namespace manimeval::providers {

/// Code encoder behind {"input": [...]} -> {"data": [{"embedding": [...]}]}.
class HttpCodeEmbedder final : public codemetrics::CodeEmbedder {
 public:
  /// `model` is sent as "model" when non-empty.
  explicit HttpCodeEmbedder(http::EndpointConfig endpoint, std::string model = {});
  std::vector<codemetrics::EmbeddingVector> embed(std::span<const std::string> inputs) override;

 private:
  http::JsonClient client_;
  std::string model_;
};

/// Image encoder behind {"input": [<base64 PNG>, ...], "kind": "image"}
/// -> {"data": [{"embedding": [...]}]}. Frames are sent in batches.
class HttpImageEmbedder final : public videometrics::ImageEmbedder {
 public:
  explicit HttpImageEmbedder(http::EndpointConfig endpoint, std::string model = {}, std::size_t batch_size = 16);
  std::vector<std::vector<double>> embed(std::span<const RgbImage> frames) override;

 private:
  http::JsonClient client_;
  std::string model_;
  std::size_t batch_size_;
};

}  // namespace manimeval::providers
