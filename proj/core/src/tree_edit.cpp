// Zhang-Shasha ordered tree edit distance with unit costs.

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "manimeval/codemetrics.hpp"

namespace manimeval::codemetrics {
namespace {

struct PostorderTree {
  std::vector<int> label;  // 1-based postorder
  std::vector<int> lml;    // leftmost leaf descendant, 1-based
  std::vector<int> keyroots;
};

PostorderTree annotate(const python::SyntaxTree& tree,
                       std::unordered_map<std::string, int>& labels) {
  PostorderTree out;
  out.label.push_back(0);
  out.lml.push_back(0);
  // Iterative postorder to stay safe on deep trees.
  struct Frame {
    std::size_t id;
    std::size_t next_child;
    int leftmost;
  };
  std::vector<Frame> stack{{python::SyntaxTree::root(), 0, 0}};
  while (!stack.empty()) {
    auto& top = stack.back();
    const auto& node = tree.node(top.id);
    if (top.next_child < node.children.size()) {
      std::size_t child = node.children[top.next_child++];
      stack.push_back({child, 0, 0});
      continue;
    }
    int index = static_cast<int>(out.label.size());
    auto [it, inserted] = labels.try_emplace(node.kind, static_cast<int>(labels.size()));
    out.label.push_back(it->second);
    int leftmost = node.children.empty() ? index : top.leftmost;
    out.lml.push_back(leftmost);
    stack.pop_back();
    if (!stack.empty() && stack.back().next_child == 1) stack.back().leftmost = leftmost;
  }
  const int n = static_cast<int>(out.label.size()) - 1;
  std::vector<bool> seen(n + 1, false);
  for (int i = n; i >= 1; --i) {
    if (!seen[out.lml[i]]) {
      out.keyroots.push_back(i);
      seen[out.lml[i]] = true;
    }
  }
  std::sort(out.keyroots.begin(), out.keyroots.end());
  return out;
}

}  // namespace

std::size_t tree_edit_distance(const python::SyntaxTree& a, const python::SyntaxTree& b) {
  std::unordered_map<std::string, int> labels;
  auto ta = annotate(a, labels);
  auto tb = annotate(b, labels);
  const int n = static_cast<int>(ta.label.size()) - 1;
  const int m = static_cast<int>(tb.label.size()) - 1;

  std::vector<std::uint32_t> treedist(static_cast<std::size_t>(n + 1) * (m + 1), 0);
  auto td = [&](int i, int j) -> std::uint32_t& { return treedist[static_cast<std::size_t>(i) * (m + 1) + j]; };
  std::vector<std::uint32_t> forest;

  for (int i : ta.keyroots) {
    for (int j : tb.keyroots) {
      const int li = ta.lml[i];
      const int lj = tb.lml[j];
      const int rows = i - li + 2;
      const int cols = j - lj + 2;
      forest.assign(static_cast<std::size_t>(rows) * cols, 0);
      auto fd = [&](int x, int y) -> std::uint32_t& { return forest[static_cast<std::size_t>(x) * cols + y]; };
      for (int x = 1; x < rows; ++x) fd(x, 0) = fd(x - 1, 0) + 1;
      for (int y = 1; y < cols; ++y) fd(0, y) = fd(0, y - 1) + 1;
      for (int x = 1; x < rows; ++x) {
        const int i1 = li + x - 1;
        for (int y = 1; y < cols; ++y) {
          const int j1 = lj + y - 1;
          std::uint32_t del = fd(x - 1, y) + 1;
          std::uint32_t ins = fd(x, y - 1) + 1;
          if (ta.lml[i1] == li && tb.lml[j1] == lj) {
            std::uint32_t rel = fd(x - 1, y - 1) + (ta.label[i1] == tb.label[j1] ? 0u : 1u);
            fd(x, y) = std::min({del, ins, rel});
            td(i1, j1) = fd(x, y);
          } else {
            std::uint32_t sub = fd(ta.lml[i1] - li, tb.lml[j1] - lj) + td(i1, j1);
            fd(x, y) = std::min({del, ins, sub});
          }
        }
      }
    }
  }
  return td(n, m);
}

}  // namespace manimeval::codemetrics
