#include "manimeval/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "manimeval/error.hpp"
#include "manimeval/providers.hpp"

namespace manimeval::config {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using std::chrono::milliseconds;

std::string type_name(const json& j) { return j.type_name(); }

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as typos.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(label() + ": expected an object, got " + type_name(j_));
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (const json* v = take(key)) {
      try {
        out = v->get<T>();
      } catch (const json::exception&) {
        throw ConfigError(label(key) + ": wrong type " + type_name(*v));
      }
    }
  }

  void get_path(const char* key, fs::path& out, const fs::path& base) {
    std::string s;
    bool present = has(key);
    get(key, s);
    if (!present) return;
    out = s.empty() || base.empty() || fs::path(s).is_absolute() ? fs::path(s) : base / s;
  }

  void get_seconds(const char* key, milliseconds& out) {
    double s = 0;
    if (!has(key)) return;
    get(key, s);
    if (!(s > 0) || !std::isfinite(s)) throw ConfigError(label(key) + ": must be > 0");
    out = milliseconds(static_cast<long long>(std::llround(s * 1000.0)));
  }

  void get_millis(const char* key, milliseconds& out) {
    long long ms = 0;
    if (!has(key)) return;
    get(key, ms);
    if (ms < 0) throw ConfigError(label(key) + ": must be >= 0");
    out = milliseconds(ms);
  }

  std::optional<Reader> child(const char* key) {
    if (const json* v = take(key)) return Reader(*v, label(key));
    return std::nullopt;
  }

  [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(label(key.c_str()) + ": unknown key");
    }
  }

  [[nodiscard]] std::string label(const char* key = nullptr) const {
    std::string out = where_.empty() ? std::string("config") : where_;
    if (key) out += std::string(".") + key;
    return out;
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

double seconds(milliseconds ms) { return static_cast<double>(ms.count()) / 1000.0; }

void read_endpoint(Reader r, http::EndpointConfig& e) {
  r.get("url", e.url);
  r.get("api_key_env", e.api_key_env);
  r.get_seconds("timeout_s", e.timeout);
  r.get("max_retries", e.max_retries);
  r.get_millis("initial_backoff_ms", e.initial_backoff);
  r.get("backoff_factor", e.backoff_factor);
  r.finish();
  if (e.max_retries < 0) throw ConfigError(r.label("max_retries") + ": must be >= 0");
  if (!(e.backoff_factor >= 1.0)) throw ConfigError(r.label("backoff_factor") + ": must be >= 1");
}

json endpoint_json(const http::EndpointConfig& e) {
  return {{"url", e.url},
          {"api_key_env", e.api_key_env},
          {"timeout_s", seconds(e.timeout)},
          {"max_retries", e.max_retries},
          {"initial_backoff_ms", e.initial_backoff.count()},
          {"backoff_factor", e.backoff_factor}};
}

void read_embedder(Reader r, EmbedderConfig& e) {
  std::string kind = e.kind == EmbedderConfig::Kind::http ? "http" : "hashing";
  r.get("kind", kind);
  if (kind == "hashing") {
    e.kind = EmbedderConfig::Kind::hashing;
  } else if (kind == "http") {
    e.kind = EmbedderConfig::Kind::http;
  } else {
    throw ConfigError(r.label("kind") + ": expected \"hashing\" or \"http\", got \"" + kind + "\"");
  }
  r.get("dimension", e.dimension);
  r.get("model", e.model);
  r.get("batch_size", e.batch_size);
  if (auto ep = r.child("endpoint")) read_endpoint(std::move(*ep), e.endpoint);
  r.finish();
  if (e.kind == EmbedderConfig::Kind::http && e.endpoint.url.empty()) {
    throw ConfigError(r.label("endpoint.url") + ": required for an http embedder");
  }
  if (e.batch_size < 1) throw ConfigError(r.label("batch_size") + ": must be >= 1");
}

json embedder_json(const EmbedderConfig& e) {
  return {{"kind", e.kind == EmbedderConfig::Kind::http ? "http" : "hashing"},
          {"dimension", e.dimension},
          {"model", e.model},
          {"batch_size", e.batch_size},
          {"endpoint", endpoint_json(e.endpoint)}};
}

void read_agent(Reader r, RunConfig& c, const fs::path& base) {
  std::string mode(agent::to_string(c.agent.mode));
  r.get("mode", mode);
  c.agent.mode = agent::parse_mode(mode);
  r.get("max_rounds", c.agent.max_rounds);
  r.get("doc_budget", c.agent.doc_budget);
  r.get_path("templates", c.templates_file, base);
  if (auto g = r.child("generation")) {
    g->get("model", c.generation.model_name);
    g->get("temperature", c.generation.temperature);
    g->get("max_tokens", c.generation.max_tokens);
    if (auto ep = g->child("endpoint")) read_endpoint(std::move(*ep), c.generation.endpoint);
    g->finish();
  }
  r.finish();
}

void read_code_metrics(Reader r, RunConfig& c) {
  r.get("max_n", c.code.max_n);
  r.get("keyword_weight", c.code.keyword_weight);
  if (auto w = r.child("codebleu_weights")) {
    w->get("ngram", c.code.weights.ngram);
    w->get("weighted_ngram", c.code.weights.weighted_ngram);
    w->get("syntax", c.code.weights.syntax);
    w->finish();
  }
  if (auto e = r.child("embedder")) read_embedder(std::move(*e), c.code_embedder);
  r.finish();
}

void read_video_metrics(Reader r, RunConfig& c) {
  r.get("sample_fps", c.sample_fps);
  r.get("k", c.visual.k);
  if (auto s = r.child("ssim")) {
    s->get("window", c.visual.ssim.window);
    s->get("sigma", c.visual.ssim.sigma);
    s->get("k1", c.visual.ssim.k1);
    s->get("k2", c.visual.ssim.k2);
    s->get("dynamic_range", c.visual.ssim.dynamic_range);
    s->finish();
  }
  if (auto d = r.child("dtw")) {
    d->get("exact_limit", c.visual.dtw.exact_limit);
    d->get("fast_radius", c.visual.dtw.fast_radius);
    d->finish();
  }
  if (auto d = r.child("decoder")) {
    d->get("executable", c.decoder.executable);
    d->get("scale_width", c.decoder.scale_width);
    d->get_seconds("timeout_s", c.decoder.timeout);
    d->finish();
  }
  if (auto e = r.child("embedder")) read_embedder(std::move(*e), c.image_embedder);
  r.finish();
}

void read_renderer(Reader r, RunConfig& c) {
  r.get("executable", c.renderer.executable);
  r.get("command_prefix", c.renderer.command_prefix);
  std::string quality(renderer::to_string(c.quality));
  r.get("quality", quality);
  c.quality = renderer::parse_quality(quality);
  r.get_seconds("timeout_s", c.render_timeout);
  r.get("workers", c.renderer.workers);
  r.get("error_tail_lines", c.renderer.tail_lines);
  r.get_path("temp_root", c.renderer.temp_root, {});
  r.finish();
  c.agent.error_tail_lines = c.renderer.tail_lines;
}

}  // namespace

void RunConfig::validate() const {
  agent.validate();
  generation.validate();
  weights.validate();
  grpo.hyper.validate();
  if (grpo.group_size < 2) throw ConfigError("grpo.group_size must be >= 2");
  if (code.max_n < 1) throw ConfigError("code_metrics.max_n must be >= 1");
  if (!(code.keyword_weight > 0)) throw ConfigError("code_metrics.keyword_weight must be > 0");
  // codebleu() enforces the weight sum; check it up front
  (void)codemetrics::codebleu(0, 0, 0, code.weights);
  if (!(sample_fps > 0)) throw ConfigError("video_metrics.sample_fps must be > 0");
  if (!(visual.k > 0)) throw ConfigError("video_metrics.k must be > 0");
  if (visual.ssim.window < 1 || visual.ssim.window % 2 == 0) {
    throw ConfigError("video_metrics.ssim.window must be a positive odd number");
  }
  if (!(visual.ssim.sigma > 0) || !(visual.ssim.k1 > 0) || !(visual.ssim.k2 > 0) ||
      !(visual.ssim.dynamic_range > 0)) {
    throw ConfigError("video_metrics.ssim constants must be > 0");
  }
  if (visual.dtw.fast_radius < 0) throw ConfigError("video_metrics.dtw.fast_radius must be >= 0");
  if (decoder.scale_width < 0) throw ConfigError("video_metrics.decoder.scale_width must be >= 0");
  if (renderer.workers < 1) throw ConfigError("renderer.workers must be >= 1");
  if (renderer.tail_lines < 1) throw ConfigError("renderer.error_tail_lines must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (agent.mode == agent::Mode::ritl_doc && kb.source.empty() && kb.cache.empty()) {
    throw ConfigError("agent.mode ritl-doc needs kb.source or kb.cache");
  }
}

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  Reader root(doc, "");
  if (auto a = root.child("agent")) read_agent(std::move(*a), c, base_dir);
  if (auto w = root.child("reward")) {
    w->get("lambda_t", c.weights.lambda_t);
    w->get("lambda_v", c.weights.lambda_v);
    w->finish();
  }
  if (auto g = root.child("grpo")) {
    g->get("group_size", c.grpo.group_size);
    g->get("epsilon", c.grpo.hyper.epsilon);
    g->get("beta", c.grpo.hyper.beta);
    g->get("normalizer_length", c.grpo.hyper.normalizer_length);
    g->finish();
  }
  if (auto m = root.child("code_metrics")) read_code_metrics(std::move(*m), c);
  if (auto m = root.child("video_metrics")) read_video_metrics(std::move(*m), c);
  if (auto r = root.child("renderer")) read_renderer(std::move(*r), c);
  if (auto k = root.child("kb")) {
    k->get_path("source", c.kb.source, base_dir);
    k->get_path("cache", c.kb.cache, base_dir);
    k->finish();
  }
  // outputs stay relative to the working directory
  root.get_path("cache_dir", c.cache_dir, {});
  root.get_path("output_dir", c.output_dir, {});
  root.get("workers", c.workers);
  root.finish();

  if (!c.templates_file.empty()) c.agent.templates = agent::load_templates(c.templates_file);
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_run_config(text.str(), file.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

std::string to_json(const RunConfig& c) {
  json doc{
      {"agent",
       {{"mode", agent::to_string(c.agent.mode)},
        {"max_rounds", c.agent.max_rounds},
        {"doc_budget", c.agent.doc_budget},
        {"templates", c.templates_file.string()},
        {"generation",
         {{"model", c.generation.model_name},
          {"temperature", c.generation.temperature},
          {"max_tokens", c.generation.max_tokens},
          {"endpoint", endpoint_json(c.generation.endpoint)}}}}},
      {"reward", {{"lambda_t", c.weights.lambda_t}, {"lambda_v", c.weights.lambda_v}}},
      {"grpo",
       {{"group_size", c.grpo.group_size},
        {"epsilon", c.grpo.hyper.epsilon},
        {"beta", c.grpo.hyper.beta},
        {"normalizer_length", c.grpo.hyper.normalizer_length}}},
      {"code_metrics",
       {{"max_n", c.code.max_n},
        {"keyword_weight", c.code.keyword_weight},
        {"codebleu_weights",
         {{"ngram", c.code.weights.ngram},
          {"weighted_ngram", c.code.weights.weighted_ngram},
          {"syntax", c.code.weights.syntax}}},
        {"embedder", embedder_json(c.code_embedder)}}},
      {"video_metrics",
       {{"sample_fps", c.sample_fps},
        {"k", c.visual.k},
        {"ssim",
         {{"window", c.visual.ssim.window},
          {"sigma", c.visual.ssim.sigma},
          {"k1", c.visual.ssim.k1},
          {"k2", c.visual.ssim.k2},
          {"dynamic_range", c.visual.ssim.dynamic_range}}},
        {"dtw", {{"exact_limit", c.visual.dtw.exact_limit}, {"fast_radius", c.visual.dtw.fast_radius}}},
        {"decoder",
         {{"executable", c.decoder.executable},
          {"scale_width", c.decoder.scale_width},
          {"timeout_s", seconds(c.decoder.timeout)}}},
        {"embedder", embedder_json(c.image_embedder)}}},
      {"renderer",
       {{"executable", c.renderer.executable},
        {"command_prefix", c.renderer.command_prefix},
        {"quality", renderer::to_string(c.quality)},
        {"timeout_s", seconds(c.render_timeout)},
        {"workers", c.renderer.workers},
        {"error_tail_lines", c.renderer.tail_lines},
        {"temp_root", c.renderer.temp_root.string()}}},
      {"kb", {{"source", c.kb.source.string()}, {"cache", c.kb.cache.string()}}},
      {"cache_dir", c.cache_dir.string()},
      {"output_dir", c.output_dir.string()},
      {"workers", c.workers},
  };
  return doc.dump(2) + "\n";
}

std::unique_ptr<codemetrics::CodeEmbedder> make_code_embedder(const EmbedderConfig& config) {
  if (config.kind == EmbedderConfig::Kind::http) {
    return std::make_unique<providers::HttpCodeEmbedder>(config.endpoint, config.model);
  }
  return config.dimension ? std::make_unique<codemetrics::HashingCodeEmbedder>(config.dimension)
                          : std::make_unique<codemetrics::HashingCodeEmbedder>();
}

std::unique_ptr<videometrics::ImageEmbedder> make_image_embedder(const EmbedderConfig& config) {
  if (config.kind == EmbedderConfig::Kind::http) {
    return std::make_unique<providers::HttpImageEmbedder>(config.endpoint, config.model, config.batch_size);
  }
  return config.dimension ? std::make_unique<videometrics::HashingImageEmbedder>(config.dimension)
                          : std::make_unique<videometrics::HashingImageEmbedder>();
}

}  // namespace manimeval::config
