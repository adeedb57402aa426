// manimeval command line: evaluation runs, the generation agent, one-off
// rewards and renders, and the API documentation knowledge base.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "manimeval/agent.hpp"
#include "manimeval/codeblock.hpp"
#include "manimeval/config.hpp"
#include "manimeval/docskb.hpp"
#include "manimeval/error.hpp"
#include "manimeval/harness.hpp"
#include "manimeval/pipeline.hpp"
#include "manimeval/renderer.hpp"
#include "manimeval/reward.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace manimeval;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + file.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

config::RunConfig config_from(const std::string& path) {
  if (path.empty()) {
    config::RunConfig c;
    c.validate();
    return c;
  }
  return config::load_run_config(path);
}

docskb::KnowledgeBase open_kb(const config::KbConfig& kb) {
  if (!kb.source.empty()) {
    return kb.cache.empty() ? docskb::build_kb(kb.source) : docskb::load_or_build_kb(kb.source, kb.cache);
  }
  if (!kb.cache.empty()) return docskb::load_kb(kb.cache);
  throw ConfigError("no knowledge base configured (kb.source or kb.cache)");
}

std::vector<harness::ReportFormat> parse_formats(const std::string& list) {
  std::vector<harness::ReportFormat> out;
  std::stringstream s(list);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (item == "csv") out.push_back(harness::ReportFormat::csv);
    else if (item == "json") out.push_back(harness::ReportFormat::json);
    else if (item == "svg") out.push_back(harness::ReportFormat::svg);
    else if (!item.empty()) throw ConfigError("unknown report format \"" + item + "\"");
  }
  return out;
}

std::string corr(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

// ---- eval ----

struct EvalArgs {
  std::string dataset, config, offline, out, formats = "csv,json,svg";
};

int run_eval(const EvalArgs& a) {
  auto cfg = config::load_run_config(a.config);
  if (!a.out.empty()) cfg.output_dir = a.out;

  renderer::Renderer renderer(cfg.renderer);
  renderer.check_available();
  renderer::RenderCache cache(cfg.cache_dir / "references", renderer);
  auto records = harness::precompute_references(harness::load_dataset(a.dataset), cache, cfg.quality,
                                                cfg.render_timeout, cfg.renderer.workers);
  spdlog::info("{} references ready", records.size());

  auto code_embedder = config::make_code_embedder(cfg.code_embedder);
  auto image_embedder = config::make_image_embedder(cfg.image_embedder);
  harness::EvalOptions options;
  options.agent = cfg.agent;
  options.code = cfg.code;
  options.visual = cfg.visual;
  options.decoder = cfg.decoder;
  options.sample_fps = cfg.sample_fps;
  options.workers = cfg.workers;

  harness::EvalDependencies deps;
  deps.code_embedder = code_embedder.get();
  deps.image_embedder = image_embedder.get();
  deps.render = agent::render_with(renderer, cfg.quality, cfg.render_timeout);

  std::optional<harness::Completions> completions;
  std::unique_ptr<agent::HttpChatModel> llm;
  std::optional<docskb::KnowledgeBase> kb;
  if (!a.offline.empty()) {
    completions = harness::load_completions(a.offline);
  } else {
    llm = std::make_unique<agent::HttpChatModel>(cfg.generation);
    deps.llm = llm.get();
    if (cfg.agent.mode == agent::Mode::ritl_doc) {
      kb = open_kb(cfg.kb);
      deps.kb = &*kb;
    }
  }

  auto report = harness::evaluate_run(records, options, deps, completions ? &*completions : nullptr);
  const auto formats = parse_formats(a.formats);
  for (const auto& file : harness::emit_report(report, cfg.output_dir, formats)) spdlog::info("wrote {}", file.string());
  std::cout << "mode " << report.mode << "  n " << report.n << "  VS " << harness::format_percent(report.mean_vs)
            << "  CBB " << harness::format_percent(report.mean_cbb) << "  RSR " << harness::format_percent(report.rsr)
            << "  rho " << corr(report.correlations.spearman_rho) << "  tau " << corr(report.correlations.kendall_tau)
            << "\n";
  return 0;
}

// ---- agent run ----

struct AgentArgs {
  std::string description, file, mode = "ritl", config, endpoint, model, trace;
  int rounds = agent::kDefaultMaxRounds;
};

int run_agent_cmd(const AgentArgs& a) {
  auto cfg = config_from(a.config);
  const std::string description = a.file.empty() ? a.description : read_text(a.file);
  if (description.empty()) throw ConfigError("empty description");
  cfg.agent.mode = agent::parse_mode(a.mode);
  cfg.agent.max_rounds = a.rounds;
  if (!a.endpoint.empty()) cfg.generation.endpoint.url = a.endpoint;
  if (!a.model.empty()) cfg.generation.model_name = a.model;
  if (cfg.generation.endpoint.url.empty()) throw ConfigError("no chat endpoint (--endpoint or agent.generation.endpoint.url)");
  cfg.agent.validate();

  renderer::Renderer renderer(cfg.renderer);
  agent::HttpChatModel llm(cfg.generation);
  std::optional<docskb::KnowledgeBase> kb;
  agent::AgentDependencies deps;
  deps.llm = &llm;
  deps.render = agent::render_with(renderer, cfg.quality, cfg.render_timeout);
  if (cfg.agent.mode == agent::Mode::ritl_doc) {
    kb = open_kb(cfg.kb);
    deps.kb = &*kb;
  }

  auto trace = agent::run_agent(description, cfg.agent, deps);
  if (!a.trace.empty()) {
    std::ofstream(a.trace, std::ios::binary) << agent::trace_to_json(trace);
  }
  std::cout << trace.final_code << (trace.final_code.empty() || trace.final_code.back() == '\n' ? "" : "\n");
  std::cerr << "status " << renderer::to_string(trace.final_status) << " after " << trace.rounds_used
            << " round(s)\n";
  if (!trace.error.empty()) std::cerr << "error: " << trace.error << "\n";
  if (trace.final_status != renderer::Status::success && !trace.iterations.empty()) {
    std::cerr << trace.iterations.back().error_tail << "\n";
  }
  return trace.final_status == renderer::Status::success ? 0 : kExitFailure;
}

// ---- reward ----

struct RewardArgs {
  std::string gen, ref, ref_video, config;
  bool completion = false;
};

int run_reward(const RewardArgs& a) {
  auto cfg = config_from(a.config);
  const auto gen_text = read_text(a.gen);
  const auto ref_code = read_text(a.ref);
  // a plain source file is taken as the code itself
  const auto completion = a.completion || codeblock::extract_code(gen_text) ? gen_text : codeblock::wrap_tagged(gen_text);

  renderer::Renderer renderer(cfg.renderer);
  auto code_embedder = config::make_code_embedder(cfg.code_embedder);
  auto image_embedder = config::make_image_embedder(cfg.image_embedder);
  pipeline::ScoringSetup setup;
  setup.renderer = &renderer;
  setup.code_embedder = code_embedder.get();
  setup.image_embedder = image_embedder.get();
  setup.code = cfg.code;
  setup.visual = cfg.visual;
  setup.decoder = cfg.decoder;
  setup.sample_fps = cfg.sample_fps;
  setup.quality = cfg.quality;
  setup.render_timeout = cfg.render_timeout;

  videometrics::FrameSequence ref_frames;
  if (!a.ref_video.empty()) {
    ref_frames = videometrics::sample_frames(a.ref_video, cfg.sample_fps, cfg.decoder);
  } else {
    auto rendered = pipeline::render_frames(setup, ref_code);
    if (!rendered.frames) throw DatasetError("reference failed to render:\n" + rendered.error_tail);
    ref_frames = std::move(*rendered.frames);
  }
  const auto reference = videometrics::prepare_reference(std::move(ref_frames), *image_embedder);
  const auto r = rewardcore::unified_reward(completion, ref_code, reference, cfg.weights,
                                            pipeline::make_reward_dependencies(setup));

  json out{{"r_t", r.r_t}, {"r_v", r.r_v}, {"unified", r.unified}, {"failure", rewardcore::to_string(r.failure)}};
  if (r.code_scores) {
    const auto& c = *r.code_scores;
    out["code"] = {{"ngram", c.ngram},           {"weighted_ngram", c.weighted_ngram}, {"syntax_match", c.syntax_match},
                   {"codebleu", c.codebleu},     {"ast_distance", c.ast_distance},     {"codebert_sim", c.codebert_sim},
                   {"text_reward", c.text_reward}};
  }
  if (r.visual_scores) {
    const auto& v = *r.visual_scores;
    out["visual"] = {{"s_ssim", v.s_ssim}, {"s_sem", v.s_sem}, {"visual_reward", v.visual_reward}, {"k", v.k}};
  }
  if (!r.error_tail.empty()) out["error_tail"] = r.error_tail;
  std::cout << out.dump(2) << "\n";
  return 0;
}

// ---- render ----

struct RenderArgs {
  std::string code, out, quality, config;
  double timeout_s = 0;
};

int run_render(const RenderArgs& a) {
  auto cfg = config_from(a.config);
  renderer::RenderRequest req;
  req.code = read_text(a.code);
  req.quality = a.quality.empty() ? cfg.quality : renderer::parse_quality(a.quality);
  req.timeout = a.timeout_s > 0 ? std::chrono::milliseconds(static_cast<long long>(a.timeout_s * 1000))
                                : cfg.render_timeout;
  renderer::Renderer renderer(cfg.renderer);
  const auto outcome = renderer.render(req);
  std::cerr << "status " << renderer::to_string(outcome.status) << " in "
            << std::chrono::duration<double>(outcome.wall_time).count() << " s\n";
  if (!outcome.ok()) {
    std::cerr << outcome.error_tail << "\n";
    return kExitFailure;
  }
  const fs::path out = a.out.empty() ? fs::path(a.code).stem().concat(".mp4") : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  fs::copy_file(*outcome.video_path, out, fs::copy_options::overwrite_existing);
  std::cout << out.string() << "\n";
  return 0;
}

// ---- kb ----

int run_kb_build(const std::string& source, const std::string& out) {
  const auto kb = docskb::build_kb(source);
  docskb::save_kb(kb, out);
  std::cout << kb.size() << " entries -> " << out << "\n";
  return 0;
}

int run_kb_lookup(const std::string& name, const std::string& kb_file, const std::string& config) {
  config::KbConfig where;
  if (!kb_file.empty()) {
    where.cache = kb_file;
  } else {
    where = config_from(config).kb;
  }
  const auto kb = open_kb(where);
  const auto hits = kb.lookup(name);
  if (hits.empty()) {
    std::cerr << "no entry named " << name << "\n";
    return kExitFailure;
  }
  bool first = true;
  for (const auto* e : hits) {
    if (!first) std::cout << docskb::kEntrySeparator;
    first = false;
    std::cout << "# " << e->qualified_name << " (" << docskb::to_string(e->kind) << ", " << e->source_path << ")\n"
              << docskb::render_entry(*e) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluation and generation tooling for Manim animation code"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a dataset (live agent or offline completions)");
  eval_cmd->add_option("--dataset", eval.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--config", eval.config, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--offline", eval.offline, "Completions JSONL; skips generation")->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval.out, "Report directory (overrides output_dir)");
  eval_cmd->add_option("--formats", eval.formats, "Comma-separated subset of csv,json,svg")->capture_default_str();

  AgentArgs agent_args;
  auto* agent_cmd = app.add_subcommand("agent", "Generation agent");
  agent_cmd->require_subcommand(1);
  auto* agent_run = agent_cmd->add_subcommand("run", "Generate code for one description");
  auto* desc_opt = agent_run->add_option("--description", agent_args.description, "Animation description");
  auto* file_opt =
      agent_run->add_option("--file", agent_args.file, "File holding the description")->check(CLI::ExistingFile);
  desc_opt->excludes(file_opt);
  agent_run->add_option("--mode", agent_args.mode, "vanilla | ritl | ritl-doc")->capture_default_str();
  agent_run->add_option("-K,--rounds", agent_args.rounds, "Maximum correction rounds")->capture_default_str();
  agent_run->add_option("--config", agent_args.config, "Run configuration JSON")->check(CLI::ExistingFile);
  agent_run->add_option("--endpoint", agent_args.endpoint, "Chat completion URL");
  agent_run->add_option("--model", agent_args.model, "Model name sent to the endpoint");
  agent_run->add_option("--trace", agent_args.trace, "Write the run trace JSON here");

  RewardArgs reward;
  auto* reward_cmd = app.add_subcommand("reward", "Unified reward of generated code against a reference");
  reward_cmd->add_option("--gen", reward.gen, "Generated code or completion")->required()->check(CLI::ExistingFile);
  reward_cmd->add_option("--ref", reward.ref, "Reference code")->required()->check(CLI::ExistingFile);
  reward_cmd->add_option("--ref-video", reward.ref_video, "Reference video (rendered from --ref when absent)")
      ->check(CLI::ExistingFile);
  reward_cmd->add_flag("--completion", reward.completion, "Treat --gen as raw model output");
  reward_cmd->add_option("--config", reward.config, "Run configuration JSON")->check(CLI::ExistingFile);

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render", "Render one scene file");
  render_cmd->add_option("--code", render.code, "Python scene file")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--out", render.out, "Where to copy the video");
  render_cmd->add_option("--quality", render.quality, "low | medium | high");
  render_cmd->add_option("--timeout", render.timeout_s, "Seconds");
  render_cmd->add_option("--config", render.config, "Run configuration JSON")->check(CLI::ExistingFile);

  std::string kb_source, kb_out, kb_name, kb_file, kb_config;
  auto* kb_cmd = app.add_subcommand("kb", "API documentation knowledge base");
  kb_cmd->require_subcommand(1);
  auto* kb_build = kb_cmd->add_subcommand("build", "Ingest a Python package");
  kb_build->add_option("--source", kb_source, "Package directory")->required()->check(CLI::ExistingDirectory);
  kb_build->add_option("--out", kb_out, "KB JSON file")->required();
  auto* kb_lookup = kb_cmd->add_subcommand("lookup", "Print the docs for a name");
  kb_lookup->add_option("name", kb_name, "Short API name")->required();
  kb_lookup->add_option("--kb", kb_file, "KB JSON file")->check(CLI::ExistingFile);
  kb_lookup->add_option("--config", kb_config, "Run configuration JSON")->check(CLI::ExistingFile);

  std::string show_config;
  auto* config_cmd = app.add_subcommand("config", "Print the effective configuration");
  config_cmd->add_option("--config", show_config, "Run configuration JSON")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_pattern("%^%l%$ %v");

  try {
    if (*eval_cmd) return run_eval(eval);
    if (*agent_run) {
      if (agent_args.description.empty() && agent_args.file.empty()) {
        throw ConfigError("agent run needs --description or --file");
      }
      return run_agent_cmd(agent_args);
    }
    if (*reward_cmd) return run_reward(reward);
    if (*render_cmd) return run_render(render);
    if (*kb_build) return run_kb_build(kb_source, kb_out);
    if (*kb_lookup) return run_kb_lookup(kb_name, kb_file, kb_config);
    if (*config_cmd) {
      std::cout << config::to_json(config_from(show_config));
      return 0;
    }
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const ContractViolation& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
