#include "manimeval/agent.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "manimeval/error.hpp"
#include "manimeval/process.hpp"

using nlohmann::json;

namespace manimeval::agent {
namespace {

constexpr std::string_view kDefaultTemplateText = R"([system]
You are an expert developer of Manim Community Edition v0.19 animations.
Write a complete, self-contained Python script that starts with `from manim import *`
and defines exactly one Scene subclass with a construct method.
Reply with the code only, wrapped in <CODE> and </CODE> tags.

[initial]
Create a Manim animation for the following description.

### Description
{description}

[ritl]
The Manim code below was written for the description but failed to render.
Fix it and return the full corrected script.

### Description
{description}

### Code
<CODE>
{code}
</CODE>

### Renderer output (last lines)
{error}

[ritl_doc]
The Manim code below was written for the description but failed to render.
Use the API documentation to fix it and return the full corrected script.

### Description
{description}

### Code
<CODE>
{code}
</CODE>

### Renderer output (last lines)
{error}

### API documentation
{docs}
)";

// Single pass, so placeholder text inside substituted values stays literal.
std::string fill(std::string_view tmpl, const std::map<std::string_view, std::string_view>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        if (auto it = values.find(tmpl.substr(i + 1, close - i - 1)); it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

void require_placeholders(std::string_view name, std::string_view tmpl, std::initializer_list<std::string_view> keys) {
  for (auto key : keys) {
    const std::string token = "{" + std::string(key) + "}";
    if (tmpl.find(token) == std::string_view::npos) {
      throw ConfigError("prompt template [" + std::string(name) + "] is missing " + token);
    }
  }
}

std::string trim_blank_lines(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size()) {
    const auto nl = s.find('\n', b);
    const auto line = s.substr(b, nl == std::string_view::npos ? std::string_view::npos : nl - b);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos || nl == std::string_view::npos) break;
    b = nl + 1;
  }
  auto e = s.find_last_not_of(" \t\r\n");
  if (e == std::string_view::npos || e < b) return {};
  return std::string(s.substr(b, e - b + 1));
}

std::vector<ChatMessage> two_messages(const PromptTemplates& t, std::string user) {
  return {{Role::system, t.system}, {Role::user, std::move(user)}};
}

std::string error_section(std::string_view error_tail, std::size_t tail_lines) {
  auto tail = process::tail_lines(error_tail, tail_lines);
  if (tail.find_first_not_of(" \t\r\n") == std::string::npos) return std::string(kNoRendererOutput);
  return tail;
}

std::string code_section(std::string_view code) {
  if (code.find_first_not_of(" \t\r\n") == std::string_view::npos) return std::string(kNoCode);
  return std::string(code);
}

renderer::Status parse_status(std::string_view s) {
  if (s == "success") return renderer::Status::success;
  if (s == "timeout") return renderer::Status::timeout;
  if (s == "fail") return renderer::Status::fail;
  throw ConfigError("unknown render status '" + std::string(s) + "'");
}

codeblock::SnippetSource parse_source(std::string_view s) {
  if (s == "tagged") return codeblock::SnippetSource::tagged;
  if (s == "fenced_python") return codeblock::SnippetSource::fenced_python;
  if (s == "fenced_any") return codeblock::SnippetSource::fenced_any;
  throw ConfigError("unknown snippet source '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system:
      return "system";
    case Role::user:
      return "user";
    case Role::assistant:
      return "assistant";
  }
  return "user";
}

std::size_t prompt_chars(std::span<const ChatMessage> messages) {
  std::size_t n = 0;
  for (const auto& m : messages) n += m.content.size();
  return n;
}

void GenerationParams::validate() const {
  if (!(temperature >= 0)) throw ConfigError("temperature must be >= 0");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
}

std::string llm_generate(std::span<const ChatMessage> messages, const GenerationParams& params) {
  params.validate();
  json msgs = json::array();
  for (const auto& m : messages) {
    if (m.role != Role::assistant && m.content.empty()) {
      throw ContractViolation("llm_generate: empty " + std::string(to_string(m.role)) + " message");
    }
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  const json request{{"model", params.model_name},
                     {"messages", msgs},
                     {"temperature", params.temperature},
                     {"max_tokens", params.max_tokens}};
  std::string body;
  try {
    body = http::JsonClient(params.endpoint).post(request.dump());
  } catch (const http::TransportError& e) {
    throw EndpointError(std::string("chat endpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw EndpointError(std::string("chat endpoint: ") + e.what());
  }
  try {
    const json reply = json::parse(body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw EndpointError(std::string("chat endpoint: malformed reply: ") + e.what());
  }
}

HttpChatModel::HttpChatModel(GenerationParams params) : params_(std::move(params)) { params_.validate(); }

std::string HttpChatModel::generate(std::span<const ChatMessage> messages) { return llm_generate(messages, params_); }

void PromptTemplates::validate() const {
  if (system.empty()) throw ConfigError("prompt template [system] is empty");
  require_placeholders("initial", initial, {"description"});
  require_placeholders("ritl", ritl, {"description", "code", "error"});
  require_placeholders("ritl_doc", ritl_doc, {"description", "code", "error", "docs"});
}

PromptTemplates default_templates() {
  static const PromptTemplates defaults = [] {
    PromptTemplates t;
    std::istringstream in{std::string(kDefaultTemplateText)};
    std::map<std::string, std::string> sections;
    std::string line, current;
    while (std::getline(in, line)) {
      if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
        current = line.substr(1, line.size() - 2);
        continue;
      }
      sections[current] += line + "\n";
    }
    t.system = trim_blank_lines(sections["system"]);
    t.initial = trim_blank_lines(sections["initial"]);
    t.ritl = trim_blank_lines(sections["ritl"]);
    t.ritl_doc = trim_blank_lines(sections["ritl_doc"]);
    return t;
  }();
  return defaults;
}

PromptTemplates parse_templates(std::string_view text) {
  PromptTemplates t = default_templates();
  std::map<std::string, std::string*> slots{
      {"system", &t.system}, {"initial", &t.initial}, {"ritl", &t.ritl}, {"ritl_doc", &t.ritl_doc}};
  std::string* target = nullptr;
  std::string buffer;
  auto flush = [&] {
    if (target) *target = trim_blank_lines(buffer);
    buffer.clear();
  };
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
      flush();
      const auto name = line.substr(1, line.size() - 2);
      auto it = slots.find(name);
      if (it == slots.end()) throw ConfigError("unknown prompt template section [" + name + "]");
      target = it->second;
      continue;
    }
    if (!target) {
      if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
      throw ConfigError("line " + std::to_string(line_no) + ": text before the first [section] header");
    }
    buffer += line + "\n";
  }
  flush();
  t.validate();
  return t;
}

PromptTemplates load_templates(const std::filesystem::path& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw EnvironmentError("cannot read prompt templates " + file.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_templates(ss.str());
}

std::vector<ChatMessage> build_prompt_initial(std::string_view description, const PromptTemplates& templates) {
  return two_messages(templates, fill(templates.initial, {{"description", description}}));
}

std::vector<ChatMessage> build_prompt_ritl(std::string_view description, std::string_view code,
                                           std::string_view error_tail, const PromptTemplates& templates,
                                           std::size_t tail_lines) {
  const auto err = error_section(error_tail, tail_lines);
  const auto c = code_section(code);
  return two_messages(templates, fill(templates.ritl, {{"description", description}, {"code", c}, {"error", err}}));
}

std::vector<ChatMessage> build_prompt_ritl_doc(std::string_view description, std::string_view code,
                                               std::string_view error_tail, const docskb::DocBundle& docs,
                                               const PromptTemplates& templates, std::size_t tail_lines) {
  const auto err = error_section(error_tail, tail_lines);
  const auto c = code_section(code);
  const std::string_view d = docs.rendered.empty() ? kNoDocs : std::string_view(docs.rendered);
  return two_messages(templates, fill(templates.ritl_doc,
                                      {{"description", description}, {"code", c}, {"error", err}, {"docs", d}}));
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::vanilla:
      return "vanilla";
    case Mode::ritl:
      return "ritl";
    case Mode::ritl_doc:
      return "ritl-doc";
  }
  return "vanilla";
}

Mode parse_mode(std::string_view name) {
  if (name == "vanilla") return Mode::vanilla;
  if (name == "ritl") return Mode::ritl;
  if (name == "ritl-doc" || name == "ritl_doc") return Mode::ritl_doc;
  throw ConfigError("unknown agent mode '" + std::string(name) + "' (expected vanilla, ritl or ritl-doc)");
}

void AgentConfig::validate() const {
  if (max_rounds < 0) throw ConfigError("max_rounds must be >= 0");
  if (doc_budget < 1) throw ConfigError("doc_budget must be >= 1");
  if (error_tail_lines < 1) throw ConfigError("error_tail_lines must be >= 1");
  templates.validate();
}

std::function<renderer::RenderOutcome(std::string_view)> render_with(const renderer::Renderer& r,
                                                                     renderer::Quality quality,
                                                                     std::chrono::milliseconds timeout) {
  return [&r, quality, timeout](std::string_view code) {
    renderer::RenderRequest req;
    req.code = std::string(code);
    req.quality = quality;
    req.timeout = timeout;
    return r.render(req);
  };
}

AgentTrace run_agent(std::string_view description, const AgentConfig& config, const AgentDependencies& deps) {
  config.validate();
  if (!deps.llm || !deps.render) throw ContractViolation("run_agent: llm and render dependencies are required");
  if (config.mode == Mode::ritl_doc && !deps.kb) throw ContractViolation("run_agent: ritl-doc needs a knowledge base");

  AgentTrace trace;
  trace.mode = config.mode;
  trace.description = std::string(description);
  trace.max_rounds = config.mode == Mode::vanilla ? 0 : config.max_rounds;

  // One generate + render step. Returns false when a dependency failed.
  auto step = [&](const std::vector<ChatMessage>& prompt, std::vector<std::string> docs_used) {
    AgentIteration it;
    it.prompt_chars = prompt_chars(prompt);
    it.docs_used = std::move(docs_used);
    try {
      it.completion = deps.llm->generate(prompt);
      it.code = codeblock::extract_code(it.completion);
      if (!it.code) {
        it.error_tail = std::string(kNoCodeError);
        trace.final_render.reset();
      } else {
        auto outcome = deps.render(it.code->code);
        it.status = outcome.status;
        it.error_tail = outcome.error_tail;
        trace.final_render = std::move(outcome);
      }
    } catch (const std::exception& e) {
      it.status = renderer::Status::fail;
      it.error_tail = process::tail_lines(e.what(), config.error_tail_lines);
      trace.error = e.what();
      trace.final_render.reset();
      spdlog::warn("agent: iteration {} failed: {}", trace.iterations.size() + 1, e.what());
    }
    trace.iterations.push_back(std::move(it));
    return trace.error.empty();
  };

  bool alive = step(build_prompt_initial(description, config.templates), {});
  for (int k = 0; alive && k < trace.max_rounds; ++k) {
    const AgentIteration& last = trace.iterations.back();
    if (last.status == renderer::Status::success) break;
    const std::string code = last.code ? last.code->code : std::string();
    if (config.mode == Mode::ritl_doc) {
      auto names = docskb::extract_api_calls(code, *deps.kb);
      auto docs = docskb::retrieve_docs(names, *deps.kb, config.doc_budget);
      alive = step(build_prompt_ritl_doc(description, code, last.error_tail, docs, config.templates,
                                         config.error_tail_lines),
                   std::move(names));
    } else {
      alive = step(build_prompt_ritl(description, code, last.error_tail, config.templates, config.error_tail_lines),
                   {});
    }
  }

  const AgentIteration& final_it = trace.iterations.back();
  trace.final_status = final_it.status;
  trace.final_code = final_it.code ? final_it.code->code : std::string();
  trace.rounds_used = static_cast<int>(trace.iterations.size());
  return trace;
}

std::string trace_to_json(const AgentTrace& trace) {
  json iterations = json::array();
  for (const auto& it : trace.iterations) {
    json code = nullptr;
    if (it.code) code = {{"code", it.code->code}, {"source", codeblock::to_string(it.code->source)}};
    iterations.push_back({{"completion", it.completion},
                          {"code", code},
                          {"status", renderer::to_string(it.status)},
                          {"error_tail", it.error_tail},
                          {"prompt_chars", it.prompt_chars},
                          {"docs_used", it.docs_used}});
  }
  json doc{{"mode", to_string(trace.mode)},
           {"description", trace.description},
           {"max_rounds", trace.max_rounds},
           {"iterations", iterations},
           {"final_code", trace.final_code},
           {"final_status", renderer::to_string(trace.final_status)},
           {"rounds_used", trace.rounds_used},
           {"error", trace.error}};
  return doc.dump(2);
}

AgentTrace trace_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    AgentTrace t;
    t.mode = parse_mode(doc.at("mode").get<std::string>());
    t.description = doc.at("description").get<std::string>();
    t.max_rounds = doc.at("max_rounds").get<int>();
    for (const auto& j : doc.at("iterations")) {
      AgentIteration it;
      it.completion = j.at("completion").get<std::string>();
      if (!j.at("code").is_null()) {
        it.code = codeblock::CodeSnippet{j["code"].at("code").get<std::string>(),
                                         parse_source(j["code"].at("source").get<std::string>())};
      }
      it.status = parse_status(j.at("status").get<std::string>());
      it.error_tail = j.at("error_tail").get<std::string>();
      it.prompt_chars = j.at("prompt_chars").get<std::size_t>();
      it.docs_used = j.at("docs_used").get<std::vector<std::string>>();
      t.iterations.push_back(std::move(it));
    }
    t.final_code = doc.at("final_code").get<std::string>();
    t.final_status = parse_status(doc.at("final_status").get<std::string>());
    t.rounds_used = doc.at("rounds_used").get<int>();
    t.error = doc.value("error", "");
    return t;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed agent trace: ") + e.what());
  }
}

std::vector<ChatMessage> replay_prompt(const AgentTrace& trace, std::size_t index, const AgentConfig& config,
                                       const docskb::KnowledgeBase* kb) {
  if (index >= trace.iterations.size()) throw ContractViolation("replay_prompt: iteration out of range");
  if (index == 0) return build_prompt_initial(trace.description, config.templates);
  const auto& prev = trace.iterations[index - 1];
  const std::string code = prev.code ? prev.code->code : std::string();
  if (trace.mode == Mode::ritl_doc) {
    if (!kb) throw ContractViolation("replay_prompt: ritl-doc needs a knowledge base");
    const auto& names = trace.iterations[index].docs_used;
    auto docs = docskb::retrieve_docs(names, *kb, config.doc_budget);
    return build_prompt_ritl_doc(trace.description, code, prev.error_tail, docs, config.templates,
                                 config.error_tail_lines);
  }
  return build_prompt_ritl(trace.description, code, prev.error_tail, config.templates, config.error_tail_lines);
}

}  // namespace manimeval::agent
