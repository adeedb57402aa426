#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "manimeval/codeblock.hpp"
#include "manimeval/docskb.hpp"
#include "manimeval/http.hpp"
#include "manimeval/renderer.hpp"

namespace manimeval::agent {

inline constexpr int kDefaultMaxRounds = 3;
inline constexpr double kDefaultTemperature = 0.2;
inline constexpr int kDefaultMaxTokens = 2048;

inline constexpr std::string_view kNoRendererOutput = "(no renderer output)";
inline constexpr std::string_view kNoDocs = "(no matching API documentation)";
inline constexpr std::string_view kNoCode = "(no code produced)";
inline constexpr std::string_view kNoCodeError = "no code block in model output";

enum class Role { system, user, assistant };
std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Total characters across message contents.
std::size_t prompt_chars(std::span<const ChatMessage> messages);

struct GenerationParams {
  std::string model_name;
  double temperature = kDefaultTemperature;
  int max_tokens = kDefaultMaxTokens;
  http::EndpointConfig endpoint;

  /// Throws ConfigError for temperature < 0 or max_tokens < 1.
  void validate() const;
};

/// One chat-completion request; returns choices[0].message.content verbatim.
/// Throws EndpointError once retries are exhausted or the reply is malformed.
std::string llm_generate(std::span<const ChatMessage> messages, const GenerationParams& params);

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual std::string generate(std::span<const ChatMessage> messages) = 0;
};

/// LanguageModel over an OpenAI-style chat-completion endpoint.
class HttpChatModel final : public LanguageModel {
 public:
  explicit HttpChatModel(GenerationParams params);
  std::string generate(std::span<const ChatMessage> messages) override;

 private:
  GenerationParams params_;
};

/// Prompt text with {description} {code} {error} {docs} placeholders.
struct PromptTemplates {
  std::string system;
  std::string initial;   // {description}
  std::string ritl;      // {description} {code} {error}
  std::string ritl_doc;  // {description} {code} {error} {docs}

  /// Throws ConfigError when a template lacks one of its placeholders.
  void validate() const;
};

PromptTemplates default_templates();

/// Template file: `[system]`, `[initial]`, `[ritl]` and `[ritl_doc]` headers
/// on their own lines, each followed by its text. Missing sections keep the
/// defaults. Throws ConfigError on unknown sections or missing placeholders.
PromptTemplates parse_templates(std::string_view text);
PromptTemplates load_templates(const std::filesystem::path& file);

std::vector<ChatMessage> build_prompt_initial(std::string_view description, const PromptTemplates& templates);

/// System + user message; the error is cut to its last `tail_lines` lines.
std::vector<ChatMessage> build_prompt_ritl(std::string_view description, std::string_view code,
                                           std::string_view error_tail, const PromptTemplates& templates,
                                           std::size_t tail_lines = renderer::kErrorTailLines);

std::vector<ChatMessage> build_prompt_ritl_doc(std::string_view description, std::string_view code,
                                               std::string_view error_tail, const docskb::DocBundle& docs,
                                               const PromptTemplates& templates,
                                               std::size_t tail_lines = renderer::kErrorTailLines);

enum class Mode { vanilla, ritl, ritl_doc };
std::string_view to_string(Mode mode);
/// "vanilla" | "ritl" | "ritl-doc" (or "ritl_doc"); otherwise ConfigError.
Mode parse_mode(std::string_view name);

struct AgentConfig {
  Mode mode = Mode::vanilla;
  int max_rounds = kDefaultMaxRounds;  // K; ignored for vanilla
  std::size_t doc_budget = docskb::kDefaultBudget;
  PromptTemplates templates = default_templates();
  std::size_t error_tail_lines = renderer::kErrorTailLines;

  void validate() const;
};

struct AgentDependencies {
  LanguageModel* llm = nullptr;
  std::function<renderer::RenderOutcome(std::string_view code)> render;
  const docskb::KnowledgeBase* kb = nullptr;  // required for ritl_doc
};

/// Render function backed by a Renderer with fixed quality and timeout.
std::function<renderer::RenderOutcome(std::string_view)> render_with(const renderer::Renderer& r,
                                                                     renderer::Quality quality,
                                                                     std::chrono::milliseconds timeout);

struct AgentIteration {
  std::string completion;                    // raw model output
  std::optional<codeblock::CodeSnippet> code;  // absent when nothing was extractable
  renderer::Status status = renderer::Status::fail;
  std::string error_tail;
  std::size_t prompt_chars = 0;         // size of the prompt that produced this iteration
  std::vector<std::string> docs_used;   // API names whose docs were in that prompt
};

struct AgentTrace {
  Mode mode = Mode::vanilla;
  std::string description;
  int max_rounds = 0;
  std::vector<AgentIteration> iterations;
  std::string final_code;
  renderer::Status final_status = renderer::Status::fail;
  int rounds_used = 0;  // number of generate+render iterations
  std::string error;    // dependency failure that ended the run, if any

  /// Outcome of the last render, keeping its video alive. Not serialised.
  std::optional<renderer::RenderOutcome> final_render;
};

/// Initial generation and render, then up to K correction rounds for the
/// RITL modes, stopping at the first successful render.
AgentTrace run_agent(std::string_view description, const AgentConfig& config, const AgentDependencies& deps);

std::string trace_to_json(const AgentTrace& trace);
AgentTrace trace_from_json(std::string_view text);

/// Rebuilds the prompt that produced iteration `index` of `trace`.
std::vector<ChatMessage> replay_prompt(const AgentTrace& trace, std::size_t index, const AgentConfig& config,
                                       const docskb::KnowledgeBase* kb);

}  // namespace manimeval::agent
