#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace manimeval::python {

/// One node of an ordered, rooted syntax tree. Children are indices into the
/// owning SyntaxTree's node vector.
struct SyntaxNode {
  std::string kind;
  std::string text;  // identifier / attribute / literal payload, empty otherwise
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t anchor = 0;  // offset of the token that names the node
  std::vector<std::size_t> children;
};

/// Flat storage of a rooted ordered tree; the root is node 0.
class SyntaxTree {
 public:
  SyntaxTree();
  explicit SyntaxTree(std::string root_kind);

  std::size_t add(std::size_t parent, std::string kind, std::string text = {});

  [[nodiscard]] const SyntaxNode& node(std::size_t id) const { return nodes_.at(id); }
  SyntaxNode& node(std::size_t id) { return nodes_.at(id); }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] static constexpr std::size_t root() { return 0; }
  [[nodiscard]] const std::vector<SyntaxNode>& nodes() const { return nodes_; }

  /// Number of nodes whose kind equals `kind`.
  [[nodiscard]] std::size_t count_kind(std::string_view kind) const;

  /// S-expression of the subtree at `id` using kind labels only,
  /// e.g. "(Assign (Name) (Constant))".
  [[nodiscard]] std::string shape(std::size_t id) const;

 private:
  std::vector<SyntaxNode> nodes_;
};

}  // namespace manimeval::python
