#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace manimeval::codeblock {

enum class SnippetSource { tagged, fenced_python, fenced_any };

std::string_view to_string(SnippetSource source);

struct CodeSnippet {
  std::string code;
  SnippetSource source = SnippetSource::tagged;

  friend bool operator==(const CodeSnippet&, const CodeSnippet&) = default;
};

/// Pulls the program out of a raw model completion.
///
/// Precedence is `<CODE>...</CODE>` first, then a ```python fence, then a
/// fence carrying any other (or no) language label. Within one pattern the
/// first complete block wins. Unterminated blocks do not match. Leading and
/// trailing blank lines are stripped; a block that is blank after stripping
/// is skipped. Returns nullopt when nothing usable is found.
std::optional<CodeSnippet> extract_code(std::string_view completion);

/// Wraps code in the tag form understood by extract_code.
std::string wrap_tagged(std::string_view code);

}  // namespace manimeval::codeblock
