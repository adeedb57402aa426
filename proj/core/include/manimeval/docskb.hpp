#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace manimeval::docskb {

inline constexpr int kFormatVersion = 1;
inline constexpr std::size_t kDefaultBudget = 8000;
/// Line placed between two rendered entries.
inline constexpr std::string_view kEntrySeparator = "\n----\n";

enum class EntryKind { class_, function, method };

std::string_view to_string(EntryKind kind);
EntryKind parse_entry_kind(std::string_view name);

struct ApiEntry {
  std::string name;            // short name: "Circle", "play"
  std::string qualified_name;  // "manim.mobject.geometry.arc.Circle"
  EntryKind kind = EntryKind::function;
  std::string signature;
  std::string param_docs;  // the Parameters section only
  std::string source_path;  // relative to the source root's parent for packages

  friend bool operator==(const ApiEntry&, const ApiEntry&) = default;
};

/// Immutable after construction; safe for concurrent readers.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(std::vector<ApiEntry> entries, std::string source_hash = {});

  /// Sorted by qualified_name.
  [[nodiscard]] const std::vector<ApiEntry>& entries() const { return entries_; }
  [[nodiscard]] const std::string& source_hash() const { return source_hash_; }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }

  /// Every entry with this short name, ordered by qualified_name.
  [[nodiscard]] std::vector<const ApiEntry*> lookup(std::string_view name) const;
  [[nodiscard]] bool contains(std::string_view name) const;

 private:
  std::vector<ApiEntry> entries_;
  std::string source_hash_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> index_;
};

/// Docstring with the first line stripped and the common indentation of the
/// remaining lines removed (Python's inspect.cleandoc).
std::string clean_docstring(std::string_view raw);

/// The numpydoc "Parameters" section (heading, underline and body) of a
/// cleaned docstring; empty when there is none.
std::string parameter_section(std::string_view docstring);

/// Entries for one Python source file. `module` is the dotted module path.
/// Returns false (and leaves `out` untouched) when the file does not parse.
bool extract_entries(std::string_view source, std::string_view module, std::string_view source_path,
                     std::vector<ApiEntry>& out);

/// SHA-256 over the relative paths and contents of every .py file under root.
std::string source_tree_hash(const std::filesystem::path& root);

/// Ingests every .py file under `source_root`. Files that fail to parse are
/// skipped with a warning. When the root holds an __init__.py its directory
/// name prefixes module names and source paths. Throws EnvironmentError for
/// an unreadable root.
KnowledgeBase build_kb(const std::filesystem::path& source_root);

std::string to_json(const KnowledgeBase& kb);
/// Throws ConfigError on malformed input or a different format version.
KnowledgeBase from_json(std::string_view text);
void save_kb(const KnowledgeBase& kb, const std::filesystem::path& file);
KnowledgeBase load_kb(const std::filesystem::path& file);

/// Loads `kb_file` when its source hash matches `source_root`, otherwise
/// rebuilds from source and rewrites the file.
KnowledgeBase load_or_build_kb(const std::filesystem::path& source_root, const std::filesystem::path& kb_file);

/// KB short names used in call, constructor or attribute position, in order
/// of first appearance. Code that does not parse falls back to a scan of
/// identifier tokens.
std::vector<std::string> extract_api_calls(std::string_view code, const KnowledgeBase& kb);

struct DocBundle {
  std::vector<ApiEntry> entries;
  std::string rendered;
  std::size_t budget = kDefaultBudget;
  bool truncated = false;
};

/// Signature line followed by the parameter docs.
std::string render_entry(const ApiEntry& entry);

/// Whole entries for `names` (ambiguous names expand to every match) joined
/// by kEntrySeparator, stopping before the first entry that would overflow
/// `budget` characters.
DocBundle retrieve_docs(std::span<const std::string> names, const KnowledgeBase& kb,
                        std::size_t budget = kDefaultBudget);

}  // namespace manimeval::docskb
