#include "manimeval/codeblock.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace manimeval::codeblock {
namespace {

constexpr std::string_view kOpenTag = "<CODE>";
constexpr std::string_view kCloseTag = "</CODE>";
constexpr std::string_view kFence = "```";

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  return lines;
}

// Joins lines[first, last) after dropping blank lines at both ends.
std::string join_trimmed(const std::vector<std::string_view>& lines, std::size_t first,
                         std::size_t last) {
  while (first < last && is_blank(lines[first])) ++first;
  while (last > first && is_blank(lines[last - 1])) --last;
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i != first) out.push_back('\n');
    auto line = lines[i];
    if (i + 1 == last) {
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
        line.remove_suffix(1);
    }
    out.append(line);
  }
  return out;
}

// Tag body with a dangling (unpaired) fence line: drop the fence lines.
std::string without_fence_lines(std::string_view text) {
  auto lines = split_lines(text);
  std::erase_if(lines, [](std::string_view l) { return trim(l).starts_with(kFence); });
  return join_trimmed(lines, 0, lines.size());
}

bool is_python_label(std::string_view label) {
  std::string lower(label);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower == "python" || lower == "py" || lower == "python3";
}

std::string drop_tags(std::string code) {
  bool changed = false;
  for (auto tag : {kOpenTag, kCloseTag}) {
    for (auto at = code.find(tag); at != std::string::npos; at = code.find(tag)) {
      code.erase(at, tag.size());
      changed = true;
    }
  }
  // A tag glued to a fence line leaves that fence behind once the tag is gone.
  return changed ? without_fence_lines(code) : code;
}

struct FencedBlock {
  std::string code;
  bool python = false;
};

// Line-oriented fence scan. Any line starting with ``` closes an open block,
// so fence delimiters never leak into the returned code.
std::vector<FencedBlock> fenced_blocks(std::string_view text) {
  std::vector<FencedBlock> blocks;
  auto lines = split_lines(text);
  std::size_t i = 0;
  while (i < lines.size()) {
    auto opener = trim(lines[i]);
    if (!opener.starts_with(kFence)) {
      ++i;
      continue;
    }
    auto label = trim(opener.substr(kFence.size()));
    std::size_t close = i + 1;
    while (close < lines.size() && !trim(lines[close]).starts_with(kFence)) ++close;
    if (close == lines.size()) break;  // unterminated
    auto code = drop_tags(join_trimmed(lines, i + 1, close));
    if (!code.empty()) blocks.push_back({std::move(code), is_python_label(label)});
    i = close + 1;
  }
  return blocks;
}

std::optional<std::string> first_tagged(std::string_view text) {
  std::size_t pos = 0;
  while (true) {
    auto close = text.find(kCloseTag, pos);
    if (close == std::string_view::npos) return std::nullopt;
    // Innermost opener before the first closer, so stray opening tags never
    // end up inside the code.
    auto open = text.substr(0, close).rfind(kOpenTag);
    if (open == std::string_view::npos || open < pos) {
      pos = close + kCloseTag.size();
      continue;
    }
    auto body = text.substr(open + kOpenTag.size(), close - open - kOpenTag.size());
    // Models sometimes put a fence inside the tags; prefer the fenced body.
    auto inner = fenced_blocks(body);
    std::string code = inner.empty() ? without_fence_lines(body) : inner.front().code;
    if (!code.empty()) return code;
    pos = close + kCloseTag.size();
  }
}

}  // namespace

std::string_view to_string(SnippetSource source) {
  switch (source) {
    case SnippetSource::tagged:
      return "tagged";
    case SnippetSource::fenced_python:
      return "fenced_python";
    case SnippetSource::fenced_any:
      return "fenced_any";
  }
  return "unknown";
}

std::optional<CodeSnippet> extract_code(std::string_view completion) {
  if (auto tagged = first_tagged(completion)) {
    return CodeSnippet{std::move(*tagged), SnippetSource::tagged};
  }
  auto blocks = fenced_blocks(completion);
  auto python = std::find_if(blocks.begin(), blocks.end(), [](const auto& b) { return b.python; });
  if (python != blocks.end()) return CodeSnippet{std::move(python->code), SnippetSource::fenced_python};
  if (!blocks.empty()) return CodeSnippet{std::move(blocks.front().code), SnippetSource::fenced_any};
  return std::nullopt;
}

std::string wrap_tagged(std::string_view code) {
  std::string out;
  out.reserve(code.size() + kOpenTag.size() + kCloseTag.size() + 2);
  out.append(kOpenTag).append("\n").append(code).append("\n").append(kCloseTag);
  return out;
}

}  // namespace manimeval::codeblock
