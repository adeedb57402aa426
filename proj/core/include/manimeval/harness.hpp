#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "manimeval/agent.hpp"
#include "manimeval/codemetrics.hpp"
#include "manimeval/frames.hpp"
#include "manimeval/renderer.hpp"
#include "manimeval/videometrics.hpp"

namespace manimeval::harness {

struct DatasetRecord {
  std::string id;
  std::string description;
  std::string reference_code;
  std::optional<std::filesystem::path> reference_video;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

/// JSONL, one object per line with string fields id, description and
/// reference_code (optional reference_video, relative to `base_dir`). Blank
/// lines are skipped. Throws DatasetError naming the offending line(s).
std::vector<DatasetRecord> parse_dataset(std::string_view text, const std::filesystem::path& base_dir = {});
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& file);

/// Renders every reference through the cache (one render per distinct code)
/// and fills reference_video. Throws DatasetError listing every id whose
/// reference fails to render.
std::vector<DatasetRecord> precompute_references(std::vector<DatasetRecord> records,
                                                 const renderer::RenderCache& cache, renderer::Quality quality,
                                                 std::chrono::milliseconds timeout, std::size_t workers = 1);

/// Completions keyed by record id, read from {"id", "completion"} JSONL.
using Completions = std::map<std::string, std::string, std::less<>>;
Completions parse_completions(std::string_view text);
Completions load_completions(const std::filesystem::path& file);

enum class FailureKind {
  none,
  no_code_extracted,
  render_failed,
  render_timeout,
  missing_completion,  // offline mode: no completion for this id
  error,               // endpoint, renderer or decoder error
};
std::string_view to_string(FailureKind kind);
FailureKind parse_failure_kind(std::string_view name);

struct EvalRecord {
  std::string id;
  std::string final_code;
  renderer::Status render_status = renderer::Status::fail;
  double vs = 0.0;   // visual similarity in [0,1]; 0 unless the render succeeded
  double cbb = 0.0;  // text reward in [0,1]
  int rounds_used = 0;
  FailureKind failure = FailureKind::none;
  std::string error;  // renderer tail or exception text

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

struct Correlations {
  std::optional<double> spearman_rho;  // absent when undefined (n < 2 or a constant side)
  std::optional<double> kendall_tau;

  friend bool operator==(const Correlations&, const Correlations&) = default;
};

struct AggregateReport {
  std::string mode;  // "offline" or the agent mode
  std::size_t n = 0;
  double mean_vs = 0.0;   // percent
  double mean_cbb = 0.0;  // percent
  double rsr = 0.0;       // percent of successful renders
  Correlations correlations;
  std::vector<EvalRecord> per_record;

  friend bool operator==(const AggregateReport&, const AggregateReport&) = default;
};

/// Means over all records (failures count as vs = 0), rsr and the (vs, cbb)
/// rank correlations.
AggregateReport aggregate(std::vector<EvalRecord> records, std::string mode);

/// One decimal place, as the summary tables print percentages.
std::string format_percent(double value);

struct EvalOptions {
  agent::AgentConfig agent{};
  codemetrics::CodeScoreOptions code{};
  videometrics::VisualScoreOptions visual{};
  videometrics::DecoderConfig decoder{};
  double sample_fps = videometrics::kDefaultSampleFps;
  std::size_t workers = 1;  // records in flight at once
};

/// Everything evaluate_run needs from the outside world. Embedders, the
/// model and the render function are called from `workers` threads.
struct EvalDependencies {
  codemetrics::CodeEmbedder* code_embedder = nullptr;
  videometrics::ImageEmbedder* image_embedder = nullptr;
  std::function<renderer::RenderOutcome(std::string_view code)> render;
  agent::LanguageModel* llm = nullptr;         // live mode only
  const docskb::KnowledgeBase* kb = nullptr;  // live ritl-doc only
};

/// Scores final code and its render against one reference. Shared by the
/// offline and live paths so both give identical numbers for identical code.
EvalRecord score_final(std::string id, std::optional<std::string> code, const renderer::RenderOutcome* render,
                       std::string_view reference_code, const videometrics::VideoReference& reference,
                       const EvalOptions& options, const EvalDependencies& deps);

/// Evaluates every record. With `offline` the completions are scored as the
/// final output; otherwise the agent generates them. Per-record failures are
/// recorded, never thrown. Throws DatasetError when a reference video is
/// missing or undecodable.
AggregateReport evaluate_run(std::span<const DatasetRecord> records, const EvalOptions& options,
                             const EvalDependencies& deps, const Completions* offline = nullptr);

std::string report_to_json(const AggregateReport& report);
/// Throws DatasetError on malformed input.
AggregateReport report_from_json(std::string_view text);
std::string report_to_csv(const AggregateReport& report);
/// VS (y) against CBB (x) scatter, one circle.point per record.
std::string report_to_svg(const AggregateReport& report);

enum class ReportFormat { csv, json, svg };

/// Writes report.csv, report.json and report.svg (as requested) into
/// `out_dir`, creating it. Throws EnvironmentError when it is not writable.
std::vector<std::filesystem::path> emit_report(const AggregateReport& report, const std::filesystem::path& out_dir,
                                               std::span<const ReportFormat> formats);

}  // namespace manimeval::harness
