#include "manimeval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "manimeval/codeblock.hpp"
#include "manimeval/error.hpp"
#include "manimeval/stats.hpp"

namespace manimeval::harness {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const fs::path& file, const char* what) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DatasetError(std::string("cannot read ") + what + " " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

// Calls fn(i) for i in [0, n) on up to `workers` threads. The first exception
// is rethrown once every thread has stopped.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(mutex);
            if (!first) first = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (first) std::rethrow_exception(first);
}

// Lines of a JSONL document with 1-based numbers; blank lines skipped.
template <typename Fn>
void for_each_json_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DatasetError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw DatasetError("line " + std::to_string(line_no) + ": expected a JSON object");
    fn(line_no, j);
  }
}

std::string string_field(const json& j, const char* name, std::size_t line_no) {
  auto it = j.find(name);
  if (it == j.end()) throw DatasetError("line " + std::to_string(line_no) + ": missing field " + name);
  if (!it->is_string()) {
    throw DatasetError("line " + std::to_string(line_no) + ": field " + name + " must be a string");
  }
  return it->get<std::string>();
}

renderer::Status parse_status(std::string_view s) {
  for (auto st : {renderer::Status::success, renderer::Status::fail, renderer::Status::timeout}) {
    if (renderer::to_string(st) == s) return st;
  }
  throw DatasetError("unknown render status \"" + std::string(s) + "\"");
}

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string csv_field(std::string_view s) {
  std::string flat;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r') continue;
    if (s[i] == '\n') {
      if (i + 1 < s.size()) flat += " | ";
      continue;
    }
    flat += s[i];
  }
  if (flat.find_first_of(",\"") == std::string::npos) return flat;
  std::string out = "\"";
  for (char c : flat) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::optional<double> defined(double v) {
  if (std::isnan(v)) return std::nullopt;
  return v;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

EvalRecord failed(std::string id, FailureKind kind, std::string error = {}) {
  EvalRecord r;
  r.id = std::move(id);
  r.failure = kind;
  r.error = std::move(error);
  return r;
}

}  // namespace

std::vector<DatasetRecord> parse_dataset(std::string_view text, const fs::path& base_dir) {
  std::vector<DatasetRecord> out;
  std::map<std::string, std::size_t, std::less<>> first_line;
  for_each_json_line(text, [&](std::size_t line_no, const json& j) {
    DatasetRecord r;
    r.id = string_field(j, "id", line_no);
    r.description = string_field(j, "description", line_no);
    r.reference_code = string_field(j, "reference_code", line_no);
    const auto where = "line " + std::to_string(line_no);
    if (r.id.empty()) throw DatasetError(where + ": empty id");
    if (r.reference_code.empty()) throw DatasetError(where + ": empty reference_code");
    if (j.contains("reference_video")) {
      const fs::path video = string_field(j, "reference_video", line_no);
      r.reference_video = video.is_absolute() || base_dir.empty() ? video : base_dir / video;
    }
    auto [it, inserted] = first_line.emplace(r.id, line_no);
    if (!inserted) {
      throw DatasetError("duplicate id \"" + r.id + "\" on lines " + std::to_string(it->second) + " and " +
                         std::to_string(line_no));
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<DatasetRecord> load_dataset(const fs::path& file) {
  try {
    return parse_dataset(read_file(file, "dataset"), file.parent_path());
  } catch (const DatasetError& e) {
    throw DatasetError(file.string() + ": " + e.what());
  }
}

std::vector<DatasetRecord> precompute_references(std::vector<DatasetRecord> records,
                                                 const renderer::RenderCache& cache, renderer::Quality quality,
                                                 std::chrono::milliseconds timeout, std::size_t workers) {
  // identical reference code renders once
  std::vector<std::string> codes;
  std::map<std::string, std::size_t, std::less<>> index;
  for (const auto& r : records) {
    if (index.emplace(r.reference_code, codes.size()).second) codes.push_back(r.reference_code);
  }
  std::vector<renderer::RenderOutcome> outcomes(codes.size());
  parallel_for(codes.size(), workers, [&](std::size_t i) {
    renderer::RenderRequest req;
    req.code = codes[i];
    req.quality = quality;
    req.timeout = timeout;
    outcomes[i] = cache.get_or_render(req);
  });

  std::vector<std::string> bad;
  std::string details;
  for (auto& r : records) {
    const auto& outcome = outcomes[index.at(r.reference_code)];
    if (outcome.ok()) {
      r.reference_video = cache.path_for(r.reference_code, quality);
    } else {
      bad.push_back(r.id);
      details += "\n[" + r.id + "] " + outcome.error_tail;
    }
  }
  if (!bad.empty()) {
    std::string ids;
    for (const auto& id : bad) ids += (ids.empty() ? "" : ", ") + id;
    throw DatasetError("reference render failed for " + std::to_string(bad.size()) + " record(s): " + ids + details);
  }
  return records;
}

Completions parse_completions(std::string_view text) {
  Completions out;
  std::map<std::string, std::size_t, std::less<>> first_line;
  for_each_json_line(text, [&](std::size_t line_no, const json& j) {
    auto id = string_field(j, "id", line_no);
    auto completion = string_field(j, "completion", line_no);
    auto [it, inserted] = first_line.emplace(id, line_no);
    if (!inserted) {
      throw DatasetError("duplicate id \"" + id + "\" on lines " + std::to_string(it->second) + " and " +
                         std::to_string(line_no));
    }
    out.emplace(std::move(id), std::move(completion));
  });
  return out;
}

Completions load_completions(const fs::path& file) {
  try {
    return parse_completions(read_file(file, "completions"));
  } catch (const DatasetError& e) {
    throw DatasetError(file.string() + ": " + e.what());
  }
}

std::string_view to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::none: return "none";
    case FailureKind::no_code_extracted: return "no_code_extracted";
    case FailureKind::render_failed: return "render_failed";
    case FailureKind::render_timeout: return "render_timeout";
    case FailureKind::missing_completion: return "missing_completion";
    case FailureKind::error: return "error";
  }
  return "?";
}

FailureKind parse_failure_kind(std::string_view name) {
  for (auto k : {FailureKind::none, FailureKind::no_code_extracted, FailureKind::render_failed,
                 FailureKind::render_timeout, FailureKind::missing_completion, FailureKind::error}) {
    if (to_string(k) == name) return k;
  }
  throw DatasetError("unknown failure kind \"" + std::string(name) + "\"");
}

AggregateReport aggregate(std::vector<EvalRecord> records, std::string mode) {
  AggregateReport report;
  report.mode = std::move(mode);
  report.n = records.size();
  if (!records.empty()) {
    double vs = 0.0, cbb = 0.0;
    std::size_t ok = 0;
    for (const auto& r : records) {
      vs += r.vs;
      cbb += r.cbb;
      ok += r.render_status == renderer::Status::success;
    }
    const auto n = static_cast<double>(records.size());
    report.mean_vs = 100.0 * vs / n;
    report.mean_cbb = 100.0 * cbb / n;
    report.rsr = 100.0 * static_cast<double>(ok) / n;
  }
  if (records.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& r : records) {
      xs.push_back(r.vs);
      ys.push_back(r.cbb);
    }
    report.correlations.spearman_rho = defined(stats::spearman_rho(xs, ys));
    report.correlations.kendall_tau = defined(stats::kendall_tau(xs, ys));
  }
  report.per_record = std::move(records);
  return report;
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", value);
  return buf;
}

EvalRecord score_final(std::string id, std::optional<std::string> code, const renderer::RenderOutcome* render,
                       std::string_view reference_code, const videometrics::VideoReference& reference,
                       const EvalOptions& options, const EvalDependencies& deps) {
  if (!code) return failed(std::move(id), FailureKind::no_code_extracted, std::string(agent::kNoCodeError));
  if (!render) throw ContractViolation("score_final: code without a render outcome");

  EvalRecord rec;
  rec.id = std::move(id);
  rec.final_code = std::move(*code);
  rec.cbb = codemetrics::score_code(rec.final_code, reference_code, *deps.code_embedder, options.code).text_reward;
  if (!render->ok()) {
    rec.render_status = render->status;
    rec.failure = render->status == renderer::Status::timeout ? FailureKind::render_timeout
                                                              : FailureKind::render_failed;
    rec.error = render->error_tail;
    return rec;
  }
  videometrics::FrameSequence frames;
  try {
    frames = videometrics::sample_frames(*render->video_path, options.sample_fps, options.decoder);
  } catch (const MediaError& e) {
    rec.render_status = renderer::Status::fail;
    rec.failure = FailureKind::render_failed;
    rec.error = std::string("undecodable video: ") + e.what();
    return rec;
  }
  rec.render_status = renderer::Status::success;
  rec.vs = videometrics::score_video(frames, reference, *deps.image_embedder, options.visual).visual_reward;
  return rec;
}

AggregateReport evaluate_run(std::span<const DatasetRecord> records, const EvalOptions& options,
                             const EvalDependencies& deps, const Completions* offline) {
  if (!deps.code_embedder || !deps.image_embedder || !deps.render) {
    throw ContractViolation("evaluate_run: embedders and a render function are required");
  }
  if (!offline) {
    options.agent.validate();
    if (!deps.llm) throw ContractViolation("evaluate_run: live mode needs a language model");
    if (options.agent.mode == agent::Mode::ritl_doc && !deps.kb) {
      throw ContractViolation("evaluate_run: ritl-doc needs a knowledge base");
    }
  }

  std::vector<videometrics::VideoReference> references(records.size());
  parallel_for(records.size(), options.workers, [&](std::size_t i) {
    const auto& r = records[i];
    if (!r.reference_video) throw DatasetError("record \"" + r.id + "\" has no reference video");
    try {
      references[i] = videometrics::prepare_reference(
          videometrics::sample_frames(*r.reference_video, options.sample_fps, options.decoder), *deps.image_embedder);
    } catch (const MediaError& e) {
      throw DatasetError("reference video for \"" + r.id + "\" is undecodable: " + e.what());
    }
  });

  std::vector<EvalRecord> results(records.size());
  parallel_for(records.size(), options.workers, [&](std::size_t i) {
    const auto& r = records[i];
    try {
      if (offline) {
        auto it = offline->find(r.id);
        if (it == offline->end()) {
          results[i] = failed(r.id, FailureKind::missing_completion, "no completion for this id");
          return;
        }
        std::optional<std::string> code;
        std::optional<renderer::RenderOutcome> outcome;
        if (auto snippet = codeblock::extract_code(it->second)) {
          code = std::move(snippet->code);
          outcome = deps.render(*code);
        }
        results[i] = score_final(r.id, std::move(code), outcome ? &*outcome : nullptr, r.reference_code,
                                 references[i], options, deps);
        results[i].rounds_used = 1;
        return;
      }
      agent::AgentDependencies agent_deps;
      agent_deps.llm = deps.llm;
      agent_deps.render = deps.render;
      agent_deps.kb = deps.kb;
      auto trace = agent::run_agent(r.description, options.agent, agent_deps);
      if (!trace.error.empty()) {
        results[i] = failed(r.id, FailureKind::error, trace.error);
        results[i].final_code = trace.final_code;
      } else {
        std::optional<std::string> code;
        if (!trace.iterations.empty() && trace.iterations.back().code) code = trace.iterations.back().code->code;
        const auto* outcome = trace.final_render ? &*trace.final_render : nullptr;
        results[i] = score_final(r.id, std::move(code), outcome, r.reference_code, references[i], options, deps);
      }
      results[i].rounds_used = trace.rounds_used;
    } catch (const std::exception& e) {
      spdlog::warn("record {}: {}", r.id, e.what());
      results[i] = failed(r.id, FailureKind::error, e.what());
    }
  });

  return aggregate(std::move(results), offline ? "offline" : std::string(agent::to_string(options.agent.mode)));
}

std::string report_to_json(const AggregateReport& report) {
  json records = json::array();
  for (const auto& r : report.per_record) {
    records.push_back({{"id", r.id},
                       {"final_code", r.final_code},
                       {"render_status", renderer::to_string(r.render_status)},
                       {"vs", r.vs},
                       {"cbb", r.cbb},
                       {"rounds_used", r.rounds_used},
                       {"failure", to_string(r.failure)},
                       {"error", r.error}});
  }
  const json doc{{"mode", report.mode},
                 {"n", report.n},
                 {"mean_vs", report.mean_vs},
                 {"mean_cbb", report.mean_cbb},
                 {"rsr", report.rsr},
                 {"summary",
                  {{"mean_vs", format_percent(report.mean_vs)},
                   {"mean_cbb", format_percent(report.mean_cbb)},
                   {"rsr", format_percent(report.rsr)}}},
                 {"correlations",
                  {{"spearman_rho", optional_number(report.correlations.spearman_rho)},
                   {"kendall_tau", optional_number(report.correlations.kendall_tau)}}},
                 {"records", records}};
  return doc.dump(2) + "\n";
}

AggregateReport report_from_json(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    AggregateReport report;
    report.mode = doc.at("mode").get<std::string>();
    report.n = doc.at("n").get<std::size_t>();
    report.mean_vs = doc.at("mean_vs").get<double>();
    report.mean_cbb = doc.at("mean_cbb").get<double>();
    report.rsr = doc.at("rsr").get<double>();
    const auto& c = doc.at("correlations");
    report.correlations.spearman_rho = read_optional(c.at("spearman_rho"));
    report.correlations.kendall_tau = read_optional(c.at("kendall_tau"));
    for (const auto& j : doc.at("records")) {
      EvalRecord r;
      r.id = j.at("id").get<std::string>();
      r.final_code = j.at("final_code").get<std::string>();
      r.render_status = parse_status(j.at("render_status").get<std::string>());
      r.vs = j.at("vs").get<double>();
      r.cbb = j.at("cbb").get<double>();
      r.rounds_used = j.at("rounds_used").get<int>();
      r.failure = parse_failure_kind(j.at("failure").get<std::string>());
      r.error = j.at("error").get<std::string>();
      report.per_record.push_back(std::move(r));
    }
    if (report.per_record.size() != report.n) throw DatasetError("report: n does not match the record count");
    return report;
  } catch (const json::exception& e) {
    throw DatasetError(std::string("report: ") + e.what());
  }
}

std::string report_to_csv(const AggregateReport& report) {
  std::string out = "id,render_status,vs,cbb,rounds_used,failure,error\n";
  for (const auto& r : report.per_record) {
    out += csv_field(r.id) + "," + std::string(renderer::to_string(r.render_status)) + "," + shortest(r.vs) + "," +
           shortest(r.cbb) + "," + std::to_string(r.rounds_used) + "," + std::string(to_string(r.failure)) + "," +
           csv_field(r.error) + "\n";
  }
  return out;
}

std::string report_to_svg(const AggregateReport& report) {
  constexpr double kWidth = 480, kHeight = 420, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  constexpr double kPlotW = kWidth - kLeft - kRight, kPlotH = kHeight - kTop - kBottom;
  auto x_of = [&](double cbb) { return kLeft + std::clamp(cbb, 0.0, 1.0) * kPlotW; };
  auto y_of = [&](double vs) { return kTop + (1.0 - std::clamp(vs, 0.0, 1.0)) * kPlotH; };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  auto corr = [](const std::optional<double>& v) {
    if (!v) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return std::string(buf);
  };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(report.mode)
    << ": VS vs CBB (n=" << report.n << ", rho=" << corr(report.correlations.spearman_rho)
    << ", tau=" << corr(report.correlations.kendall_tau) << ")</text>\n";
  s << "<g class=\"axes\" stroke=\"#444\" fill=\"none\">\n";
  s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kPlotW << "\" height=\"" << kPlotH << "\"/>\n";
  s << "</g>\n<g class=\"ticks\" fill=\"#444\">\n";
  for (int t = 0; t <= 100; t += 25) {
    const double f = t / 100.0;
    s << "<text x=\"" << num(x_of(f)) << "\" y=\"" << kTop + kPlotH + 16 << "\" text-anchor=\"middle\">" << t
      << "</text>\n";
    s << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(y_of(f) + 4) << "\" text-anchor=\"end\">" << t << "</text>\n";
  }
  s << "<text x=\"" << kLeft + kPlotW / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">CBB (%)</text>\n";
  s << "<text transform=\"translate(16," << kTop + kPlotH / 2
    << ") rotate(-90)\" text-anchor=\"middle\">VS (%)</text>\n";
  s << "</g>\n<g class=\"points\">\n";
  for (const auto& r : report.per_record) {
    const bool ok = r.render_status == renderer::Status::success;
    s << "<circle class=\"point\" cx=\"" << num(x_of(r.cbb)) << "\" cy=\"" << num(y_of(r.vs)) << "\" r=\"4\" fill=\""
      << (ok ? "#2a7ab9" : "#d1495b") << "\" fill-opacity=\"0.75\"><title>" << xml_escape(r.id) << ": VS "
      << format_percent(100.0 * r.vs) << ", CBB " << format_percent(100.0 * r.cbb) << "</title></circle>\n";
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

std::vector<fs::path> emit_report(const AggregateReport& report, const fs::path& out_dir,
                                  std::span<const ReportFormat> formats) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw EnvironmentError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  for (auto format : formats) {
    fs::path file;
    std::string body;
    switch (format) {
      case ReportFormat::csv: file = out_dir / "report.csv", body = report_to_csv(report); break;
      case ReportFormat::json: file = out_dir / "report.json", body = report_to_json(report); break;
      case ReportFormat::svg: file = out_dir / "report.svg", body = report_to_svg(report); break;
    }
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << body;
    out.close();
    if (!out) throw EnvironmentError("cannot write " + file.string());
    written.push_back(std::move(file));
  }
  return written;
}

}  // namespace manimeval::harness
