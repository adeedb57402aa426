#pragma once

#include <span>
#include <vector>

#include "manimeval/dtw.hpp"
#include "manimeval/frames.hpp"
#include "manimeval/ssim.hpp"

namespace manimeval::videometrics {

inline constexpr double kDefaultStrictness = 5.0;

/// rows = generated frames, cols = reference frames.
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

struct MatchProfiles {
  std::vector<double> ref_profile;  // column maxima, length cols
  std::vector<double> gen_profile;  // row maxima, length rows
};

/// Pairwise SSIM between every generated and reference frame. Frames must
/// already share dimensions (see resized_to).
SimilarityMatrix ssim_matrix(const FrameSequence& gen, const FrameSequence& ref, const SsimParams& params = {});

MatchProfiles best_match_profiles(const SimilarityMatrix& matrix);

/// exp(-k * D / max(T, T')) where D aligns the two best-match profiles.
double structural_score(const FrameSequence& gen, const FrameSequence& ref, double k = kDefaultStrictness,
                        const DtwPolicy& policy = {});
double structural_score(const MatchProfiles& profiles, double k = kDefaultStrictness, const DtwPolicy& policy = {});

using FrameEmbeddingSequence = std::vector<std::vector<double>>;

/// Image-embedding provider (a CLIP-style encoder behind an endpoint, or the
/// offline hashing embedder). Must tolerate concurrent calls.
class ImageEmbedder {
 public:
  virtual ~ImageEmbedder() = default;
  virtual std::vector<std::vector<double>> embed(std::span<const RgbImage> frames) = 0;
};

/// Deterministic offline embedder: block-averaged colour on a grid x grid
/// layout, centred, feature-hashed with random signs into `dimension`
/// buckets, plus a constant bias component so no frame maps to zero.
class HashingImageEmbedder final : public ImageEmbedder {
 public:
  explicit HashingImageEmbedder(std::size_t dimension = 128, int grid = 16);
  std::vector<std::vector<double>> embed(std::span<const RgbImage> frames) override;

 private:
  std::size_t dimension_;
  int grid_;
};

/// Provider output, each vector scaled to unit norm. Throws ContractViolation
/// on a zero or non-finite vector, ProviderError on a count mismatch.
FrameEmbeddingSequence embed_frames(std::span<const RgbImage> frames, ImageEmbedder& embedder);

/// exp(-D / max(T, T')) with D the DTW cost under 1 - <e, e'>.
double semantic_score(const FrameEmbeddingSequence& gen, const FrameEmbeddingSequence& ref,
                      const DtwPolicy& policy = {});

/// sqrt(s_ssim * s_sem).
double visual_reward(double s_ssim, double s_sem);

struct VisualScoreBreakdown {
  double s_ssim = 0.0;
  double s_sem = 0.0;
  double visual_reward = 0.0;
  double k = kDefaultStrictness;
};

struct VisualScoreOptions {
  double k = kDefaultStrictness;
  DtwPolicy dtw{};
  SsimParams ssim{};
};

/// Reference frames with their embeddings, computed once per reference.
struct VideoReference {
  FrameSequence frames;
  FrameEmbeddingSequence embeddings;
};

VideoReference prepare_reference(FrameSequence frames, ImageEmbedder& embedder);

/// Full visual score. Generated frames are resized to the reference size.
VisualScoreBreakdown score_video(const FrameSequence& gen, const VideoReference& ref, ImageEmbedder& embedder,
                                 const VisualScoreOptions& options = {});

}  // namespace manimeval::videometrics
