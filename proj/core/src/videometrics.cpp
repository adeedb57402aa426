#include "manimeval/videometrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "manimeval/error.hpp"
#include "manimeval/hashing.hpp"

namespace manimeval::videometrics {

SimilarityMatrix ssim_matrix(const FrameSequence& gen, const FrameSequence& ref, const SsimParams& params) {
  if (gen.size() == 0 || ref.size() == 0) throw ContractViolation("ssim_matrix: empty frame sequence");
  std::vector<SsimStats> gs, rs;
  gs.reserve(gen.size());
  rs.reserve(ref.size());
  for (const auto& g : gen.gray) gs.emplace_back(g, params);
  for (const auto& r : ref.gray) rs.emplace_back(r, params);
  SimilarityMatrix m{gen.size(), ref.size(), std::vector<double>(gen.size() * ref.size())};
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) m.values[i * m.cols + j] = ssim(gs[i], rs[j]);
  }
  return m;
}

MatchProfiles best_match_profiles(const SimilarityMatrix& matrix) {
  if (matrix.rows == 0 || matrix.cols == 0) throw ContractViolation("best_match_profiles: empty matrix");
  const double lowest = std::numeric_limits<double>::lowest();
  MatchProfiles p{std::vector<double>(matrix.cols, lowest), std::vector<double>(matrix.rows, lowest)};
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    for (std::size_t j = 0; j < matrix.cols; ++j) {
      double v = matrix.at(i, j);
      p.gen_profile[i] = std::max(p.gen_profile[i], v);
      p.ref_profile[j] = std::max(p.ref_profile[j], v);
    }
  }
  return p;
}

double structural_score(const MatchProfiles& profiles, double k, const DtwPolicy& policy) {
  const auto longest = std::max(profiles.gen_profile.size(), profiles.ref_profile.size());
  auto aligned = dtw_distance(profiles.gen_profile, profiles.ref_profile, policy.select(longest));
  return std::exp(-k * aligned.distance / static_cast<double>(longest));
}

double structural_score(const FrameSequence& gen, const FrameSequence& ref, double k, const DtwPolicy& policy) {
  return structural_score(best_match_profiles(ssim_matrix(gen, ref)), k, policy);
}

HashingImageEmbedder::HashingImageEmbedder(std::size_t dimension, int grid) : dimension_(dimension), grid_(grid) {
  if (dimension < 2 || grid < 1) throw ConfigError("HashingImageEmbedder: dimension >= 2 and grid >= 1 required");
}

std::vector<std::vector<double>> HashingImageEmbedder::embed(std::span<const RgbImage> frames) {
  std::vector<std::vector<double>> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    std::vector<double> v(dimension_, 0.0);
    v[0] = 1.0;  // bias
    for (int gy = 0; gy < grid_; ++gy) {
      const int y0 = gy * f.height / grid_;
      const int y1 = std::max(y0 + 1, (gy + 1) * f.height / grid_);
      for (int gx = 0; gx < grid_; ++gx) {
        const int x0 = gx * f.width / grid_;
        const int x1 = std::max(x0 + 1, (gx + 1) * f.width / grid_);
        double sum[3] = {0, 0, 0};
        int count = 0;
        for (int y = y0; y < std::min(y1, f.height); ++y) {
          for (int x = x0; x < std::min(x1, f.width); ++x) {
            const auto* p = f.at(x, y);
            for (int c = 0; c < 3; ++c) sum[c] += p[c];
            ++count;
          }
        }
        for (int c = 0; c < 3; ++c) {
          const double feature = count ? sum[c] / count / 255.0 - 0.5 : 0.0;
          const std::uint64_t key = (static_cast<std::uint64_t>(gy) << 32) ^ (static_cast<std::uint64_t>(gx) << 8) ^
                                    static_cast<std::uint64_t>(c);
          const std::uint64_t h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&key), sizeof key));
          const std::size_t bucket = 1 + h % (dimension_ - 1);
          v[bucket] += ((h >> 63) ? -1.0 : 1.0) * feature;
        }
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

FrameEmbeddingSequence embed_frames(std::span<const RgbImage> frames, ImageEmbedder& embedder) {
  auto vectors = embedder.embed(frames);
  if (vectors.size() != frames.size()) {
    throw ProviderError("image embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                        std::to_string(frames.size()) + " frames");
  }
  for (auto& v : vectors) {
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0) || !std::isfinite(norm)) throw ContractViolation("embed_frames: zero or non-finite embedding");
    for (double& x : v) x /= norm;
  }
  return vectors;
}

double semantic_score(const FrameEmbeddingSequence& gen, const FrameEmbeddingSequence& ref, const DtwPolicy& policy) {
  const auto longest = std::max(gen.size(), ref.size());
  auto aligned = dtw_distance(gen, ref, inner_product_distance, policy.select(longest));
  return std::exp(-aligned.distance / static_cast<double>(longest));
}

double visual_reward(double s_ssim, double s_sem) {
  return std::sqrt(std::clamp(s_ssim, 0.0, 1.0) * std::clamp(s_sem, 0.0, 1.0));
}

VideoReference prepare_reference(FrameSequence frames, ImageEmbedder& embedder) {
  auto embeddings = embed_frames(frames.rgb, embedder);
  return {std::move(frames), std::move(embeddings)};
}

VisualScoreBreakdown score_video(const FrameSequence& gen, const VideoReference& ref, ImageEmbedder& embedder,
                                 const VisualScoreOptions& options) {
  const bool same_size = gen.width() == ref.frames.width() && gen.height() == ref.frames.height();
  FrameSequence resized;
  if (!same_size) resized = resized_to(gen, ref.frames.width(), ref.frames.height());
  const FrameSequence& g = same_size ? gen : resized;

  VisualScoreBreakdown out;
  out.k = options.k;
  out.s_ssim = structural_score(best_match_profiles(ssim_matrix(g, ref.frames, options.ssim)), options.k, options.dtw);
  out.s_sem = semantic_score(embed_frames(g.rgb, embedder), ref.embeddings, options.dtw);
  out.visual_reward = visual_reward(out.s_ssim, out.s_sem);
  return out;
}

}  // namespace manimeval::videometrics
