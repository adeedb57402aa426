#include "manimeval/docskb.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "manimeval/error.hpp"
#include "manimeval/hashing.hpp"
#include "manimeval/python/lexer.hpp"
#include "manimeval/python/parser.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace manimeval::docskb {
namespace {

using python::SyntaxNode;
using python::SyntaxTree;

bool is_statement(std::string_view kind) {
  static const std::set<std::string_view> kinds{
      "Expr",   "Assign",      "AugAssign",  "AnnAssign", "FunctionDef", "AsyncFunctionDef", "ClassDef",
      "Return", "Pass",        "Break",      "Continue",  "If",          "For",              "AsyncFor",
      "While",  "With",        "AsyncWith",  "Try",       "Import",      "ImportFrom",       "Raise",
      "Delete", "Global",      "Nonlocal",   "Assert",    "Match",       python::kErrorKind};
  return kinds.contains(kind);
}

bool is_function(std::string_view kind) { return kind == "FunctionDef" || kind == "AsyncFunctionDef"; }

bool is_public(std::string_view name) { return !name.empty() && name.front() != '_'; }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line(text.substr(start, nl - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = nl + 1;
  }
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out += '\n';
    out += lines[i];
  }
  return out;
}

std::string dotted(std::string_view prefix, std::string_view name) {
  return prefix.empty() ? std::string(name) : std::string(prefix) + "." + std::string(name);
}

bool has_error(const SyntaxTree& tree) { return tree.count_kind(python::kErrorKind) > 0; }

// Removes `# ...` comments that sit outside string literals.
std::string strip_comments(std::string_view text) {
  std::string out;
  std::string_view quote;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (!quote.empty()) {
      out += c;
      if (c == '\\' && i + 1 < text.size()) {
        out += text[++i];
      } else if (text.substr(i, quote.size()) == quote) {
        out += text.substr(i + 1, quote.size() - 1);
        i += quote.size() - 1;
        quote = {};
      }
    } else if (c == '#') {
      while (i + 1 < text.size() && text[i + 1] != '\n') ++i;
    } else if (c == '"' || c == '\'') {
      const bool triple = text.substr(i, 3) == std::string(3, c);
      quote = text.substr(i, triple ? 3 : 1);
      out += quote;
      i += quote.size() - 1;
    } else {
      out += c;
    }
  }
  return out;
}

// Drops comments, collapses whitespace runs and tidies bracket spacing left
// behind by multi-line parameter lists.
std::string normalise_signature(std::string_view raw) {
  const std::string text = strip_comments(raw);
  std::string out;
  bool space = false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  static const std::regex open_paren(R"(\(\s+)"), close_paren(R"(,?\s*\))");
  out = std::regex_replace(out, open_paren, "(");
  return std::regex_replace(out, close_paren, ")");
}

std::string drop_receiver(std::string params) {
  static const std::regex receiver(R"(^\((self|cls)\s*(,\s*)?)");
  return std::regex_replace(params, receiver, "(");
}

std::vector<std::size_t> body_of(const SyntaxTree& tree, const SyntaxNode& def) {
  std::vector<std::size_t> body;
  bool after_args = def.kind == "ClassDef";
  for (std::size_t c : def.children) {
    const auto& child = tree.node(c);
    if (child.kind == "arguments") {
      after_args = true;
      continue;
    }
    if (after_args && is_statement(child.kind)) body.push_back(c);
  }
  return body;
}

std::optional<std::string> docstring_of(const SyntaxTree& tree, const SyntaxNode& def, std::string_view source) {
  const auto body = body_of(tree, def);
  if (body.empty()) return std::nullopt;
  const auto& first = tree.node(body.front());
  if (first.kind != "Expr" || first.children.size() != 1) return std::nullopt;
  const auto& value = tree.node(first.children.front());
  if (value.kind != "Constant" || value.begin >= source.size()) return std::nullopt;
  // Only string literals count: skip any prefix letters and look for a quote.
  std::size_t i = value.begin;
  while (i < source.size() && std::isalpha(static_cast<unsigned char>(source[i]))) ++i;
  if (i >= source.size() || (source[i] != '"' && source[i] != '\'')) return std::nullopt;
  return value.text;
}

const SyntaxNode* arguments_of(const SyntaxTree& tree, const SyntaxNode& def, const SyntaxNode** returns) {
  for (std::size_t k = 0; k < def.children.size(); ++k) {
    const auto& child = tree.node(def.children[k]);
    if (child.kind != "arguments") continue;
    *returns = nullptr;
    if (k + 1 < def.children.size()) {
      const auto& next = tree.node(def.children[k + 1]);
      if (!is_statement(next.kind)) *returns = &next;
    }
    return &child;
  }
  return nullptr;
}

std::string function_params(const SyntaxTree& tree, const SyntaxNode& def, std::string_view source) {
  const SyntaxNode* returns = nullptr;
  const SyntaxNode* args = arguments_of(tree, def, &returns);
  if (!args) return "()";
  std::string params = normalise_signature(source.substr(args->begin, args->end - args->begin));
  if (returns) params += " -> " + normalise_signature(source.substr(returns->begin, returns->end - returns->begin));
  return params;
}

std::string class_bases(const SyntaxTree& tree, const SyntaxNode& cls, std::string_view source) {
  std::string bases;
  for (std::size_t c : cls.children) {
    const auto& child = tree.node(c);
    if (is_statement(child.kind)) break;
    // Decorators sit before the name; bases after it.
    if (child.begin < cls.anchor) continue;
    if (!bases.empty()) bases += ", ";
    bases += normalise_signature(source.substr(child.begin, child.end - child.begin));
  }
  return bases;
}

struct Walker {
  const SyntaxTree& tree;
  std::string_view source;
  std::string_view source_path;
  std::vector<ApiEntry>& out;

  void entry(std::string name, std::string qualified, EntryKind kind, std::string signature, const std::string& doc) {
    ApiEntry e;
    e.name = std::move(name);
    e.qualified_name = std::move(qualified);
    e.kind = kind;
    e.signature = std::move(signature);
    e.param_docs = parameter_section(clean_docstring(doc));
    e.source_path = std::string(source_path);
    out.push_back(std::move(e));
  }

  void visit_class(const SyntaxNode& cls, const std::string& prefix) {
    const std::string qualified = dotted(prefix, cls.text);
    const auto body = body_of(tree, cls);
    if (auto doc = docstring_of(tree, cls, source)) {
      std::string signature;
      for (std::size_t c : body) {
        const auto& member = tree.node(c);
        if (is_function(member.kind) && member.text == "__init__") {
          signature = cls.text + drop_receiver(function_params(tree, member, source));
        }
      }
      if (signature.empty()) {
        const auto bases = class_bases(tree, cls, source);
        signature = "class " + cls.text + (bases.empty() ? "" : "(" + bases + ")");
      }
      entry(cls.text, qualified, EntryKind::class_, signature, *doc);
    }
    for (std::size_t c : body) {
      const auto& member = tree.node(c);
      if (is_function(member.kind) && is_public(member.text)) {
        if (auto doc = docstring_of(tree, member, source)) {
          entry(member.text, qualified + "." + member.text, EntryKind::method,
                cls.text + "." + member.text + function_params(tree, member, source), *doc);
        }
      } else if (member.kind == "ClassDef" && is_public(member.text)) {
        visit_class(member, qualified);
      }
    }
  }

  void visit_module(std::string_view module) {
    for (std::size_t c : tree.node(SyntaxTree::root()).children) {
      const auto& stmt = tree.node(c);
      if (!is_public(stmt.text)) continue;
      if (stmt.kind == "ClassDef") {
        visit_class(stmt, std::string(module));
      } else if (is_function(stmt.kind)) {
        if (auto doc = docstring_of(tree, stmt, source)) {
          entry(stmt.text, dotted(module, stmt.text), EntryKind::function,
                stmt.text + function_params(tree, stmt, source), *doc);
        }
      }
    }
  }
};

std::vector<fs::path> python_files(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw EnvironmentError("not a readable directory: " + root.string());
  std::vector<fs::path> files;
  auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw EnvironmentError("cannot read " + root.string() + ": " + ec.message());
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) throw EnvironmentError("cannot read " + root.string() + ": " + ec.message());
    if (it->is_directory() && it->path().filename() == "__pycache__") {
      it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file() && it->path().extension() == ".py") files.push_back(fs::relative(it->path(), root));
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
  return files;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw EnvironmentError("cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string module_name(const fs::path& relative) {
  std::string out;
  fs::path stem = relative;
  stem.replace_extension();
  for (const auto& part : stem) {
    if (part == "__init__") continue;
    if (!out.empty()) out += '.';
    out += part.string();
  }
  return out;
}

}  // namespace

std::string_view to_string(EntryKind kind) {
  switch (kind) {
    case EntryKind::class_:
      return "class";
    case EntryKind::function:
      return "function";
    case EntryKind::method:
      return "method";
  }
  return "function";
}

EntryKind parse_entry_kind(std::string_view name) {
  if (name == "class") return EntryKind::class_;
  if (name == "function") return EntryKind::function;
  if (name == "method") return EntryKind::method;
  throw ConfigError("unknown API entry kind '" + std::string(name) + "'");
}

KnowledgeBase::KnowledgeBase(std::vector<ApiEntry> entries, std::string source_hash)
    : entries_(std::move(entries)), source_hash_(std::move(source_hash)) {
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const ApiEntry& a, const ApiEntry& b) { return a.qualified_name < b.qualified_name; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name.empty()) throw ContractViolation("ApiEntry with empty name: " + entries_[i].qualified_name);
    index_[entries_[i].name].push_back(i);
  }
}

std::vector<const ApiEntry*> KnowledgeBase::lookup(std::string_view name) const {
  std::vector<const ApiEntry*> out;
  if (auto it = index_.find(name); it != index_.end()) {
    for (std::size_t i : it->second) out.push_back(&entries_[i]);
  }
  return out;
}

bool KnowledgeBase::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::string clean_docstring(std::string_view raw) {
  std::string expanded;
  for (char c : raw) {
    if (c == '\t') {
      expanded.append(8 - expanded.size() % 8, ' ');
    } else {
      expanded += c;
    }
  }
  auto lines = split_lines(expanded);
  std::size_t indent = std::string::npos;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto pos = lines[i].find_first_not_of(' ');
    if (pos != std::string::npos) indent = std::min(indent, pos);
  }
  lines[0] = trim(lines[0]);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (indent != std::string::npos) lines[i] = lines[i].size() > indent ? lines[i].substr(indent) : trim(lines[i]);
    while (!lines[i].empty() && lines[i].back() == ' ') lines[i].pop_back();
  }
  std::size_t first = 0, last = lines.size();
  while (first < last && lines[first].empty()) ++first;
  while (last > first && lines[last - 1].empty()) --last;
  return join_lines(lines, first, last);
}

std::string parameter_section(std::string_view docstring) {
  const auto lines = split_lines(docstring);
  auto is_underline = [](const std::string& s) {
    const auto t = trim(s);
    return t.size() >= 3 && t.find_first_not_of('-') == std::string::npos;
  };
  auto heading_at = [&](std::size_t i) {
    return i + 1 < lines.size() && !trim(lines[i]).empty() && !is_underline(lines[i]) && is_underline(lines[i + 1]);
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!heading_at(i) || trim(lines[i]) != "Parameters") continue;
    std::size_t end = i + 2;
    while (end < lines.size() && !heading_at(end)) ++end;
    while (end > i + 2 && trim(lines[end - 1]).empty()) --end;
    return join_lines(lines, i, end);
  }
  return {};
}

bool extract_entries(std::string_view source, std::string_view module, std::string_view source_path,
                     std::vector<ApiEntry>& out) {
  if (!python::lex(source).ok()) return false;
  const SyntaxTree tree = python::parse(source);
  if (has_error(tree)) return false;
  std::vector<ApiEntry> found;
  Walker{tree, source, source_path, found}.visit_module(module);
  out.insert(out.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
  return true;
}

std::string source_tree_hash(const fs::path& root) {
  Sha256 h;
  for (const auto& rel : python_files(root)) {
    const std::string content = read_file(root / rel);
    h.update(rel.generic_string()).update(std::string_view("\0", 1));
    h.update(std::to_string(content.size())).update(std::string_view("\0", 1)).update(content);
  }
  return h.hex_digest();
}

KnowledgeBase build_kb(const fs::path& source_root) {
  std::vector<ApiEntry> entries;
  Sha256 h;
  std::size_t skipped = 0;
  // A root that is itself a package contributes its name, as in an import path.
  const fs::path root = fs::weakly_canonical(source_root);
  const fs::path package = fs::exists(root / "__init__.py") ? root.filename() : fs::path();
  for (const auto& rel : python_files(source_root)) {
    const std::string content = read_file(source_root / rel);
    h.update(rel.generic_string()).update(std::string_view("\0", 1));
    h.update(std::to_string(content.size())).update(std::string_view("\0", 1)).update(content);
    const fs::path named = package / rel;
    if (!extract_entries(content, module_name(named), named.generic_string(), entries)) {
      spdlog::warn("docskb: skipping {} (does not parse)", rel.generic_string());
      ++skipped;
    }
  }
  spdlog::debug("docskb: {} entries, {} files skipped", entries.size(), skipped);
  return KnowledgeBase(std::move(entries), h.hex_digest());
}

std::string to_json(const KnowledgeBase& kb) {
  json entries = json::array();
  for (const auto& e : kb.entries()) {
    entries.push_back({{"name", e.name},
                       {"qualified_name", e.qualified_name},
                       {"kind", to_string(e.kind)},
                       {"signature", e.signature},
                       {"param_docs", e.param_docs},
                       {"source_path", e.source_path}});
  }
  json doc{{"version", kFormatVersion}, {"source_hash", kb.source_hash()}, {"entries", entries}};
  return doc.dump(1) + "\n";
}

KnowledgeBase from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    const int version = doc.at("version").get<int>();
    if (version != kFormatVersion) {
      throw ConfigError("knowledge base format version " + std::to_string(version) + " is not supported");
    }
    std::vector<ApiEntry> entries;
    for (const auto& j : doc.at("entries")) {
      ApiEntry e;
      e.name = j.at("name").get<std::string>();
      e.qualified_name = j.at("qualified_name").get<std::string>();
      e.kind = parse_entry_kind(j.at("kind").get<std::string>());
      e.signature = j.at("signature").get<std::string>();
      e.param_docs = j.at("param_docs").get<std::string>();
      e.source_path = j.value("source_path", "");
      entries.push_back(std::move(e));
    }
    return KnowledgeBase(std::move(entries), doc.at("source_hash").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed knowledge base: ") + e.what());
  }
}

void save_kb(const KnowledgeBase& kb, const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream f(file, std::ios::binary);
  f << to_json(kb);
  if (!f) throw EnvironmentError("cannot write " + file.string());
}

KnowledgeBase load_kb(const fs::path& file) { return from_json(read_file(file)); }

KnowledgeBase load_or_build_kb(const fs::path& source_root, const fs::path& kb_file) {
  std::error_code ec;
  if (fs::exists(kb_file, ec)) {
    try {
      auto kb = load_kb(kb_file);
      if (kb.source_hash() == source_tree_hash(source_root)) return kb;
      spdlog::info("docskb: {} is stale, rebuilding", kb_file.string());
    } catch (const ConfigError& e) {
      spdlog::warn("docskb: ignoring {}: {}", kb_file.string(), e.what());
    }
  }
  auto kb = build_kb(source_root);
  save_kb(kb, kb_file);
  return kb;
}

std::vector<std::string> extract_api_calls(std::string_view code, const KnowledgeBase& kb) {
  std::vector<std::pair<std::size_t, std::string>> hits;
  const auto lexed = python::lex(code);
  const SyntaxTree tree = lexed.ok() ? python::parse(code) : SyntaxTree(std::string(python::kErrorKind));
  if (lexed.ok() && !has_error(tree)) {
    for (const auto& n : tree.nodes()) {
      if (n.kind == "Attribute") {
        hits.emplace_back(n.anchor, n.text);
      } else if (n.kind == "Call" && !n.children.empty()) {
        const auto& callee = tree.node(n.children.front());
        if (callee.kind == "Name") hits.emplace_back(callee.anchor, callee.text);
      }
    }
  } else {
    for (const auto& t : lexed.tokens) {
      if (t.kind == python::TokenKind::identifier) hits.emplace_back(t.begin, t.text);
    }
  }
  std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> names;
  std::set<std::string, std::less<>> seen;
  for (auto& [pos, name] : hits) {
    if (kb.contains(name) && seen.insert(name).second) names.push_back(std::move(name));
  }
  return names;
}

std::string render_entry(const ApiEntry& entry) {
  std::string out = entry.signature;
  if (!entry.param_docs.empty()) out += "\n" + entry.param_docs;
  return out;
}

DocBundle retrieve_docs(std::span<const std::string> names, const KnowledgeBase& kb, std::size_t budget) {
  if (budget == 0) throw ContractViolation("retrieve_docs: budget must be > 0");
  DocBundle bundle;
  bundle.budget = budget;
  for (const auto& name : names) {
    for (const ApiEntry* e : kb.lookup(name)) {
      std::string piece = bundle.entries.empty() ? "" : std::string(kEntrySeparator);
      piece += render_entry(*e);
      if (bundle.rendered.size() + piece.size() > budget) {
        bundle.truncated = true;
        return bundle;
      }
      bundle.rendered += piece;
      bundle.entries.push_back(*e);
    }
  }
  return bundle;
}

}  // namespace manimeval::docskb
