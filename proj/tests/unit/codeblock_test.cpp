#include "manimeval/codeblock.hpp"

#include <gtest/gtest.h>

#include <random>

using manimeval::codeblock::extract_code;
using manimeval::codeblock::SnippetSource;
using manimeval::codeblock::wrap_tagged;

TEST(ExtractCode, TaggedBlock) {
  auto snippet = extract_code("<CODE>\nfrom manim import *\n</CODE>");
  ASSERT_TRUE(snippet);
  EXPECT_EQ(snippet->code, "from manim import *");
  EXPECT_EQ(snippet->source, SnippetSource::tagged);
}

TEST(ExtractCode, PythonFence) {
  auto snippet = extract_code("```python\nx = 1\n```");
  ASSERT_TRUE(snippet);
  EXPECT_EQ(snippet->code, "x = 1");
  EXPECT_EQ(snippet->source, SnippetSource::fenced_python);
}

TEST(ExtractCode, NoCodeIsAbsent) { EXPECT_FALSE(extract_code("I cannot write that.")); }

TEST(ExtractCode, EmptyCompletionIsAbsent) { EXPECT_FALSE(extract_code("")); }

TEST(ExtractCode, TagBeatsFence) {
  auto snippet = extract_code("```python\na = 1\n```\n<CODE>\nb = 2\n</CODE>");
  ASSERT_TRUE(snippet);
  EXPECT_EQ(snippet->code, "b = 2");
  EXPECT_EQ(snippet->source, SnippetSource::tagged);
}

TEST(ExtractCode, PythonFenceBeatsOtherLanguage) {
  auto snippet = extract_code("```bash\nls\n```\nthen\n```python\nprint(1)\n```");
  ASSERT_TRUE(snippet);
  EXPECT_EQ(snippet->code, "print(1)");
  EXPECT_EQ(snippet->source, SnippetSource::fenced_python);
}

TEST(ExtractCode, AnyFenceAsLastResort) {
  auto snippet = extract_code("Here:\n```\nclass A(Scene):\n    pass\n```\n");
  ASSERT_TRUE(snippet);
  EXPECT_EQ(snippet->code, "class A(Scene):\n    pass");
  EXPECT_EQ(snippet->source, SnippetSource::fenced_any);
}

TEST(ExtractCode, FirstOccurrenceWinsWithinPattern) {
  auto snippet = extract_code("<CODE>first</CODE> and <CODE>second</CODE>");
  ASSERT_TRUE(snippet);
  EXPECT_EQ(snippet->code, "first");
}

TEST(ExtractCode, UnterminatedBlocksAreAbsent) {
  EXPECT_FALSE(extract_code("<CODE>\nx = 1\n"));
  EXPECT_FALSE(extract_code("```python\nx = 1\n"));
}

TEST(ExtractCode, UnterminatedTagFallsBackToFence) {
  auto snippet = extract_code("<CODE>\n```python\nx = 1\n```\n");
  ASSERT_TRUE(snippet);
  EXPECT_EQ(snippet->source, SnippetSource::fenced_python);
  EXPECT_EQ(snippet->code, "x = 1");
}

TEST(ExtractCode, FenceInsideTagsIsUnwrapped) {
  auto snippet = extract_code("<CODE>\n```python\nx = 1\n```\n</CODE>");
  ASSERT_TRUE(snippet);
  EXPECT_EQ(snippet->code, "x = 1");
  EXPECT_EQ(snippet->source, SnippetSource::tagged);
}

TEST(ExtractCode, KeepsIndentationOfFirstLine) {
  auto snippet = extract_code("<CODE>\n\n    indented()\n  \n</CODE>");
  ASSERT_TRUE(snippet);
  EXPECT_EQ(snippet->code, "    indented()");
}

TEST(ExtractCode, BlankBlockIsSkipped) {
  auto snippet = extract_code("<CODE>\n\n</CODE>\n<CODE>y = 2</CODE>");
  ASSERT_TRUE(snippet);
  EXPECT_EQ(snippet->code, "y = 2");
}

// Random completions mixing prose, tags and fences: extraction is idempotent
// through wrap_tagged and never returns delimiter text.
TEST(ExtractCodeProperty, IdempotentAndDelimiterFree) {
  std::mt19937 rng(1234);
  const std::vector<std::string> pieces = {
      "Sure, here it is:\n", "<CODE>", "</CODE>", "```python\n", "```\n", "```js\n",
      "x = 1\n", "class A(Scene):\n", "    def construct(self):\n", "        pass\n",
      "\n", "   \n", "Text('hi')\n", "done.\n"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> len(0, 12);
  int extracted = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::string completion;
    for (int k = len(rng); k > 0; --k) completion += pieces[pick(rng)];
    auto snippet = extract_code(completion);
    if (completion.find("<CODE>") == std::string::npos && completion.find("```") == std::string::npos) {
      EXPECT_FALSE(snippet) << completion;
    }
    if (!snippet) continue;
    ++extracted;
    EXPECT_FALSE(snippet->code.empty());
    EXPECT_EQ(snippet->code.find("<CODE>"), std::string::npos) << completion;
    EXPECT_EQ(snippet->code.find("</CODE>"), std::string::npos) << completion;
    EXPECT_EQ(snippet->code.find("```"), std::string::npos) << completion;
    auto again = extract_code(wrap_tagged(snippet->code));
    ASSERT_TRUE(again) << completion;
    EXPECT_EQ(again->code, snippet->code) << completion;
  }
  EXPECT_GT(extracted, 200);
}
