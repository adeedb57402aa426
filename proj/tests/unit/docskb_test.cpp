#include <gtest/gtest.h>

#include <stdlib.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "manimeval/docskb.hpp"
#include "manimeval/error.hpp"

namespace fs = std::filesystem;
namespace kb = manimeval::docskb;

namespace {

const fs::path kDocs = fs::path(MANIMEVAL_FIXTURES_DIR) / "docs_src";

const kb::KnowledgeBase& mini_kb() {
  static const kb::KnowledgeBase k = kb::build_kb(kDocs / "mini");
  return k;
}

std::vector<std::string> qualified_names(const kb::KnowledgeBase& k) {
  std::vector<std::string> out;
  for (const auto& e : k.entries()) out.push_back(e.qualified_name);
  return out;
}

kb::ApiEntry sized_entry(const std::string& name, std::size_t rendered_size) {
  kb::ApiEntry e;
  e.name = name;
  e.qualified_name = "pkg." + name;
  e.signature = name + "()";
  e.param_docs = std::string(rendered_size - e.signature.size() - 1, 'x');
  return e;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "manimeval-kb-XXXXXX").string();
    path_ = ::mkdtemp(tmpl.data());
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

TEST(CleanDocstring, StripsCommonIndent) {
  EXPECT_EQ(kb::clean_docstring("Summary.\n\n    Parameters\n    ----------\n    x\n        Value.\n    "),
            "Summary.\n\nParameters\n----------\nx\n    Value.");
  EXPECT_EQ(kb::clean_docstring("\n    Leading blank line.\n    "), "Leading blank line.");
  EXPECT_EQ(kb::clean_docstring(""), "");
}

TEST(ParameterSection, KeepsOnlyParameters) {
  const std::string doc =
      "Summary.\n\nParameters\n----------\nx\n    The x.\n\nReturns\n-------\nint\n    Something.\n\n"
      "Examples\n--------\n>>> f(1)\n";
  EXPECT_EQ(kb::parameter_section(doc), "Parameters\n----------\nx\n    The x.");
  EXPECT_EQ(kb::parameter_section("Just a summary."), "");
  EXPECT_EQ(kb::parameter_section("Examples\n--------\n>>> f()\n\nParameters\n----------\ny\n    Why."),
            "Parameters\n----------\ny\n    Why.");
}

TEST(BuildKb, FixtureEntries) {
  const auto& k = mini_kb();
  EXPECT_EQ(qualified_names(k), (std::vector<std::string>{
                                    "mini.animation.Animation",
                                    "mini.animation.Create",
                                    "mini.animation.rate_linear",
                                    "mini.legacy.Circle",
                                    "mini.scene.Scene",
                                    "mini.scene.Scene.add",
                                    "mini.scene.Scene.play",
                                    "mini.scene.Scene.wait",
                                    "mini.shapes.Circle",
                                    "mini.shapes.Circle.point_at_angle",
                                    "mini.shapes.Circle.surround",
                                    "mini.shapes.Dot",
                                }));
}

TEST(BuildKb, FunctionWithExamplesKeepsOnlyParameters) {
  auto entries = mini_kb().lookup("rate_linear");
  ASSERT_EQ(entries.size(), 1u);
  const auto& e = *entries[0];
  EXPECT_EQ(e.kind, kb::EntryKind::function);
  EXPECT_EQ(e.signature, "rate_linear(t: float) -> float");
  EXPECT_EQ(e.param_docs, "Parameters\n----------\nt\n    Progress in [0, 1].");
  EXPECT_EQ(e.source_path, "mini/animation.py");
}

TEST(BuildKb, ClassWithTwoDocumentedMethodsGivesThreeEntries) {
  std::size_t n = 0;
  for (const auto& e : mini_kb().entries()) n += e.qualified_name.starts_with("mini.shapes.Circle");
  EXPECT_EQ(n, 3u);
  const auto* circle = mini_kb().lookup("Circle")[1];
  EXPECT_EQ(circle->qualified_name, "mini.shapes.Circle");
  EXPECT_EQ(circle->kind, kb::EntryKind::class_);
  EXPECT_EQ(circle->signature, "Circle(radius: float = 1.0, color: str = \"#FC6255\", **kwargs) -> None");
  EXPECT_EQ(circle->param_docs,
            "Parameters\n----------\nradius\n    Distance from the centre to the outline.\ncolor\n    Stroke colour.");
  const auto* surround = mini_kb().lookup("surround")[0];
  EXPECT_EQ(surround->kind, kb::EntryKind::method);
  EXPECT_EQ(surround->signature, "Circle.surround(self, mobject, buffer: float = 0.2) -> Circle");
  EXPECT_EQ(mini_kb().lookup("Dot")[0]->signature, "class Dot(Circle)");
  EXPECT_EQ(mini_kb().lookup("Dot")[0]->param_docs, "");
}

TEST(BuildKb, NoExampleContentAnywhere) {
  for (const auto& e : mini_kb().entries()) {
    EXPECT_EQ(e.param_docs.find("Examples"), std::string::npos) << e.qualified_name;
    EXPECT_EQ(e.param_docs.find(">>>"), std::string::npos) << e.qualified_name;
    EXPECT_EQ(e.param_docs.find(".. manim::"), std::string::npos) << e.qualified_name;
    EXPECT_EQ(e.param_docs.find("Returns"), std::string::npos) << e.qualified_name;
  }
}

TEST(BuildKb, PrivateAndUndocumentedAreSkipped) {
  EXPECT_FALSE(mini_kb().contains("_internal"));
  EXPECT_FALSE(mini_kb().contains("_private_helper"));
  EXPECT_FALSE(mini_kb().contains("undocumented"));
  EXPECT_FALSE(mini_kb().contains("VMobject"));
  EXPECT_FALSE(mini_kb().contains("broken"));
}

TEST(BuildKb, EmptyAndMissingDirectories) {
  EXPECT_TRUE(kb::build_kb(kDocs / "empty").empty());
  EXPECT_THROW(kb::build_kb(kDocs / "does-not-exist"), manimeval::EnvironmentError);
}

TEST(BuildKb, DeterministicAndRoundTrips) {
  const auto a = kb::to_json(kb::build_kb(kDocs / "mini"));
  const auto b = kb::to_json(kb::build_kb(kDocs / "mini"));
  EXPECT_EQ(a, b);
  const auto back = kb::from_json(a);
  EXPECT_EQ(back.entries(), mini_kb().entries());
  EXPECT_EQ(back.source_hash(), mini_kb().source_hash());
  EXPECT_EQ(mini_kb().source_hash(), kb::source_tree_hash(kDocs / "mini"));
}

TEST(KbFile, RejectsBadVersionAndMalformedJson) {
  EXPECT_THROW(kb::from_json(R"({"version":2,"source_hash":"","entries":[]})"), manimeval::ConfigError);
  EXPECT_THROW(kb::from_json("{"), manimeval::ConfigError);
  EXPECT_THROW(kb::from_json(R"({"version":1,"source_hash":"","entries":[{"name":"x"}]})"), manimeval::ConfigError);
}

TEST(KbFile, RebuildsWhenSourceChanges) {
  TempDir tmp;
  const fs::path src = tmp.path() / "src";
  fs::copy(kDocs / "mini", src, fs::copy_options::recursive);
  const fs::path file = tmp.path() / "kb.json";

  auto first = kb::load_or_build_kb(src, file);
  ASSERT_TRUE(fs::exists(file));
  EXPECT_EQ(first.size(), 12u);

  // Unchanged source: the file is used as-is, even if its entries were edited.
  auto doctored = kb::KnowledgeBase({first.entries()[0]}, first.source_hash());
  kb::save_kb(doctored, file);
  EXPECT_EQ(kb::load_or_build_kb(src, file).size(), 1u);

  std::ofstream(src / "extra.py") << "def fresh(a):\n    \"\"\"New.\n\n    Parameters\n    ----------\n    a\n"
                                     "        A.\n    \"\"\"\n";
  auto rebuilt = kb::load_or_build_kb(src, file);
  EXPECT_EQ(rebuilt.size(), 13u);
  EXPECT_TRUE(rebuilt.contains("fresh"));
  EXPECT_EQ(kb::load_kb(file).entries(), rebuilt.entries());
}

TEST(Lookup, AmbiguousNamesSortedByQualifiedName) {
  auto hits = mini_kb().lookup("Circle");
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0]->qualified_name, "mini.legacy.Circle");
  EXPECT_EQ(hits[1]->qualified_name, "mini.shapes.Circle");
  EXPECT_TRUE(mini_kb().lookup("Nope").empty());
}

TEST(ExtractApiCalls, FirstAppearanceOrder) {
  EXPECT_EQ(kb::extract_api_calls("c = Circle(); self.play(Create(c))", mini_kb()),
            (std::vector<std::string>{"Circle", "play", "Create"}));
  EXPECT_TRUE(kb::extract_api_calls("x = len([1, 2])", mini_kb()).empty());
  EXPECT_EQ(kb::extract_api_calls("a = Circle()\nb = Circle()\n", mini_kb()), (std::vector<std::string>{"Circle"}));
}

TEST(ExtractApiCalls, OnlyCallConstructorAndAttributePositions) {
  // A bare name reference and a base class are not API uses; attribute access is.
  const std::string code =
      "class Demo(Scene):\n    def construct(self):\n        f = rate_linear\n        d = Dot()\n"
      "        d.surround(Circle())\n        self.wait\n";
  EXPECT_EQ(kb::extract_api_calls(code, mini_kb()), (std::vector<std::string>{"Dot", "surround", "Circle", "wait"}));
}

TEST(ExtractApiCalls, FallsBackToTokenScanOnBrokenCode) {
  const std::string code = "c = Circle(\nself.play(Create(c)\nrate_linear";
  EXPECT_EQ(kb::extract_api_calls(code, mini_kb()),
            (std::vector<std::string>{"Circle", "play", "Create", "rate_linear"}));
}

TEST(ExtractApiCalls, EveryNameIsInTheKb) {
  const std::vector<std::string> snippets{
      "self.play(Create(Circle()).set(run_time=2))", "Dot().surround(Circle(radius=1), buffer=0.1)",
      "for x in range(3):\n    self.add(Dot())\n", "self.wait(", "print(Animation)"};
  for (const auto& s : snippets) {
    for (const auto& n : kb::extract_api_calls(s, mini_kb())) EXPECT_TRUE(mini_kb().contains(n)) << s << " -> " << n;
  }
}

TEST(RetrieveDocs, Examples) {
  std::vector<std::string> none;
  auto empty = kb::retrieve_docs(none, mini_kb(), 100);
  EXPECT_TRUE(empty.rendered.empty());
  EXPECT_FALSE(empty.truncated);

  std::vector<std::string> names{"rate_linear"};
  auto tiny = kb::retrieve_docs(names, mini_kb(), 5);
  EXPECT_TRUE(tiny.rendered.empty());
  EXPECT_TRUE(tiny.entries.empty());
  EXPECT_TRUE(tiny.truncated);

  kb::KnowledgeBase two({sized_entry("A", 100), sized_entry("B", 100)});
  ASSERT_EQ(kb::render_entry(two.entries()[0]).size(), 100u);
  std::vector<std::string> ab{"A", "B"};
  auto one = kb::retrieve_docs(ab, two, 150);
  EXPECT_EQ(one.entries.size(), 1u);
  EXPECT_EQ(one.rendered.size(), 100u);
  EXPECT_TRUE(one.truncated);

  EXPECT_THROW(kb::retrieve_docs(ab, two, 0), manimeval::ContractViolation);
}

TEST(RetrieveDocs, AmbiguousNameExpandsAndOrderFollowsNames) {
  std::vector<std::string> names{"play", "Circle"};
  auto b = kb::retrieve_docs(names, mini_kb());
  ASSERT_EQ(b.entries.size(), 3u);
  EXPECT_EQ(b.entries[0].qualified_name, "mini.scene.Scene.play");
  EXPECT_EQ(b.entries[1].qualified_name, "mini.legacy.Circle");
  EXPECT_EQ(b.entries[2].qualified_name, "mini.shapes.Circle");
  EXPECT_FALSE(b.truncated);
  EXPECT_EQ(b.rendered, kb::render_entry(b.entries[0]) + std::string(kb::kEntrySeparator) +
                            kb::render_entry(b.entries[1]) + std::string(kb::kEntrySeparator) +
                            kb::render_entry(b.entries[2]));
}

TEST(RetrieveDocs, NeverSplitsAnEntry) {
  std::mt19937 rng(21);
  std::vector<std::string> all;
  for (const auto& e : mini_kb().entries()) all.push_back(e.name);
  for (int trial = 0; trial < 300; ++trial) {
    std::shuffle(all.begin(), all.end(), rng);
    const std::size_t budget = std::uniform_int_distribution<std::size_t>(1, 1500)(rng);
    auto b = kb::retrieve_docs(all, mini_kb(), budget);
    EXPECT_LE(b.rendered.size(), budget);
    std::string rebuilt;
    for (std::size_t i = 0; i < b.entries.size(); ++i) {
      if (i) rebuilt += kb::kEntrySeparator;
      rebuilt += kb::render_entry(b.entries[i]);
    }
    EXPECT_EQ(b.rendered, rebuilt);
  }
}

TEST(ManimSource, BuildsFromInstalledLibrary) {
  const char* root = std::getenv("MANIMEVAL_MANIM_SOURCE");
  if (!root) GTEST_SKIP() << "MANIMEVAL_MANIM_SOURCE not set";
  auto k = kb::build_kb(root);
  EXPECT_GT(k.size(), 500u);
  for (const char* name : {"Circle", "Create", "play", "Square", "Transform"}) EXPECT_TRUE(k.contains(name)) << name;
  for (const auto& e : k.entries()) {
    EXPECT_EQ(e.param_docs.find("\nExamples\n--------"), std::string::npos) << e.qualified_name;
  }
}
