#include <gtest/gtest.h>

#include <random>
#include <regex>

#include <json.hpp>

#include "manimeval/codeblock.hpp"
#include "manimeval/error.hpp"
#include "manimeval/harness.hpp"
#include "scratch.hpp"

namespace fs = std::filesystem;
namespace h = manimeval::harness;
namespace ag = manimeval::agent;
using manimeval::renderer::Status;
using testutil::ScratchDir;

namespace {

const fs::path kVideos = fs::path(MANIMEVAL_FIXTURES_DIR) / "videos";

std::string scene_code(const std::string& clip, const std::string& body = "self.wait()") {
  return "from manim import *\n# clip: " + clip + "\nclass Demo(Scene):\n    def construct(self):\n        " + body +
         "\n";
}

std::string dataset_line(const std::string& id, const std::string& code) {
  nlohmann::json j{{"id", id}, {"description", "animate " + id}, {"reference_code", code}};
  return j.dump() + "\n";
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const manimeval::DatasetError& e) {
    return e.what();
  }
  return "<no DatasetError>";
}

h::EvalRecord record(std::string id, Status status, double vs, double cbb) {
  h::EvalRecord r;
  r.id = std::move(id);
  r.render_status = status;
  r.vs = vs;
  r.cbb = cbb;
  r.rounds_used = 1;
  r.failure = status == Status::success ? h::FailureKind::none : h::FailureKind::render_failed;
  return r;
}

}  // namespace

TEST(Dataset, ParsesRecordsInOrder) {
  const auto text = dataset_line("a", "x = 1") + dataset_line("b", "y = 2") + "\n" + dataset_line("c", "z = 3");
  auto records = h::parse_dataset(text);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].id, "a");
  EXPECT_EQ(records[1].description, "animate b");
  EXPECT_EQ(records[2].reference_code, "z = 3");
  EXPECT_FALSE(records[0].reference_video);
}

TEST(Dataset, MissingFieldNamesTheLine) {
  const std::string text = dataset_line("a", "x") + R"({"id": "b", "description": "d"})" + "\n";
  EXPECT_NE(error_of([&] { (void)h::parse_dataset(text); }).find("line 2: missing field"), std::string::npos);
}

TEST(Dataset, DuplicateIdNamesBothLines) {
  const auto text = dataset_line("a", "1") + dataset_line("b", "2") + dataset_line("c", "3") + dataset_line("a", "4");
  const auto msg = error_of([&] { (void)h::parse_dataset(text); });
  EXPECT_NE(msg.find("\"a\""), std::string::npos) << msg;
  EXPECT_NE(msg.find("lines 1 and 4"), std::string::npos) << msg;
}

TEST(Dataset, RejectsMalformedLines) {
  EXPECT_NE(error_of([] { (void)h::parse_dataset("{\"id\": \"a\"\n"); }).find("line 1: invalid JSON"),
            std::string::npos);
  EXPECT_NE(error_of([] { (void)h::parse_dataset("\n[1, 2]\n"); }).find("line 2"), std::string::npos);
  EXPECT_NE(error_of([] { (void)h::parse_dataset(R"({"id": 3, "description": "", "reference_code": "x"})"); })
                .find("id must be a string"),
            std::string::npos);
  EXPECT_NE(error_of([] { (void)h::parse_dataset(dataset_line("a", "")); }).find("empty reference_code"),
            std::string::npos);
}

TEST(Dataset, LoadResolvesReferenceVideoAgainstTheFile) {
  ScratchDir dir;
  testutil::write_file(dir.path() / "set.jsonl",
                       R"({"id":"a","description":"d","reference_code":"x","reference_video":"v/a.mp4"})"
                       "\n");
  auto records = h::load_dataset(dir.path() / "set.jsonl");
  ASSERT_TRUE(records[0].reference_video);
  EXPECT_EQ(*records[0].reference_video, dir.path() / "v/a.mp4");
  EXPECT_THROW(h::load_dataset(dir.path() / "missing.jsonl"), manimeval::DatasetError);
}

TEST(Completions, ParseAndReject) {
  auto c = h::parse_completions(R"({"id":"a","completion":"hi"})"
                                "\n"
                                R"({"id":"b","completion":""})");
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(c.at("a"), "hi");
  EXPECT_NE(error_of([] {
              (void)h::parse_completions(R"({"id":"a","completion":"x"})"
                                         "\n"
                                         R"({"id":"a","completion":"y"})");
            }).find("lines 1 and 2"),
            std::string::npos);
  EXPECT_NE(error_of([] { (void)h::parse_completions(R"({"id":"a"})"); }).find("line 1: missing field completion"),
            std::string::npos);
}

class ReferenceCacheTest : public ::testing::Test {
 protected:
  void SetUp() override {
    config_.executable = testutil::write_clip_renderer(scratch_.path(), kVideos).string();
    config_.temp_root = scratch_.path() / "work";
    fs::create_directories(config_.temp_root);
  }

  std::vector<h::DatasetRecord> precompute(std::vector<h::DatasetRecord> records, std::size_t workers = 1) {
    manimeval::renderer::Renderer renderer(config_);
    manimeval::renderer::RenderCache cache(scratch_.path() / "cache", renderer);
    return h::precompute_references(std::move(records), cache, manimeval::renderer::Quality::low,
                                    std::chrono::seconds(30), workers);
  }

  [[nodiscard]] std::size_t renders() const { return testutil::render_count(scratch_.path()); }

  ScratchDir scratch_;
  manimeval::renderer::RendererConfig config_;
};

TEST_F(ReferenceCacheTest, RendersOnceThenHitsTheCache) {
  auto records = h::parse_dataset(dataset_line("a", scene_code("moving_dot")) +
                                  dataset_line("b", scene_code("square_to_circle")));
  auto first = precompute(records, 2);
  EXPECT_EQ(renders(), 2u);
  for (const auto& r : first) {
    ASSERT_TRUE(r.reference_video);
    EXPECT_TRUE(fs::is_regular_file(*r.reference_video));
    EXPECT_EQ(r.reference_video->parent_path(), scratch_.path() / "cache");
  }
  auto second = precompute(records);
  EXPECT_EQ(renders(), 2u);
  EXPECT_EQ(second, first);
}

TEST_F(ReferenceCacheTest, IdenticalCodeRendersOnce) {
  auto records = h::parse_dataset(dataset_line("a", scene_code("moving_dot")) +
                                  dataset_line("b", scene_code("moving_dot")));
  auto out = precompute(records, 2);
  EXPECT_EQ(renders(), 1u);
  EXPECT_EQ(out[0].reference_video, out[1].reference_video);
}

TEST_F(ReferenceCacheTest, WhitespaceEditChangesTheKey) {
  auto records = h::parse_dataset(dataset_line("a", scene_code("moving_dot")));
  (void)precompute(records);
  records[0].reference_code += "\n";
  (void)precompute(records);
  EXPECT_EQ(renders(), 2u);
}

TEST_F(ReferenceCacheTest, FailingReferenceIsFatalAndNamed) {
  auto records = h::parse_dataset(dataset_line("good", scene_code("moving_dot")) +
                                  dataset_line("bad-one", scene_code("moving_dot", "FAIL()")) +
                                  dataset_line("bad-two", scene_code("moving_dot", "FAIL(2)")));
  const auto msg = error_of([&] { (void)precompute(records); });
  EXPECT_NE(msg.find("2 record(s): bad-one, bad-two"), std::string::npos) << msg;
  EXPECT_NE(msg.find("NameError"), std::string::npos) << msg;
  EXPECT_EQ(msg.find("good"), std::string::npos) << msg;
}

TEST(Aggregate, MixedOutcomesMatchHandComputedMeans) {
  auto report = h::aggregate({record("a", Status::success, 0.9, 0.8), record("b", Status::fail, 0.0, 0.3),
                              record("c", Status::success, 0.5, 0.6), record("d", Status::timeout, 0.0, 0.0)},
                             "offline");
  EXPECT_EQ(report.n, 4u);
  EXPECT_NEAR(report.mean_vs, 35.0, 1e-12);
  EXPECT_NEAR(report.mean_cbb, 42.5, 1e-12);
  EXPECT_EQ(report.rsr, 50.0);
  EXPECT_EQ(h::format_percent(report.mean_cbb), "42.5");
  ASSERT_TRUE(report.correlations.spearman_rho);
  ASSERT_TRUE(report.correlations.kendall_tau);
  // vs ranks (4, 1.5, 3, 1.5), cbb ranks (4, 2, 3, 1)
  EXPECT_NEAR(*report.correlations.spearman_rho, 0.9486832980505138, 1e-12);
  EXPECT_NEAR(*report.correlations.kendall_tau, 5.0 / std::sqrt(30.0), 1e-12);
}

TEST(Aggregate, EdgeCases) {
  auto empty = h::aggregate({}, "offline");
  EXPECT_EQ(empty.n, 0u);
  EXPECT_EQ(empty.rsr, 0.0);
  EXPECT_FALSE(empty.correlations.spearman_rho);
  auto flat = h::aggregate({record("a", Status::success, 1, 1), record("b", Status::success, 1, 1)}, "offline");
  EXPECT_EQ(flat.rsr, 100.0);
  EXPECT_FALSE(flat.correlations.spearman_rho);
  EXPECT_FALSE(flat.correlations.kendall_tau);
  EXPECT_EQ(h::format_percent(100.0), "100.0");
  EXPECT_EQ(h::format_percent(100.0 / 3.0), "33.3");
}

TEST(Aggregate, RsrIsExactlyTheSuccessFraction) {
  std::mt19937 rng(12);
  for (int t = 0; t < 50; ++t) {
    const int n = std::uniform_int_distribution<int>(1, 40)(rng);
    std::vector<h::EvalRecord> records;
    int ok = 0;
    for (int i = 0; i < n; ++i) {
      const bool success = rng() % 3 != 0;
      ok += success;
      const double vs = success ? std::uniform_real_distribution<double>(0, 1)(rng) : 0.0;
      records.push_back(record(std::to_string(i), success ? Status::success : Status::fail, vs, vs / 2));
    }
    auto report = h::aggregate(records, "offline");
    EXPECT_EQ(report.rsr, 100.0 * ok / n);
    EXPECT_GE(report.mean_vs, 0.0);
    EXPECT_LE(report.mean_vs, 100.0);
    EXPECT_LE(report.mean_cbb, report.mean_vs + 1e-9);
  }
}

TEST(Report, CsvJsonSvgShapes) {
  auto a = record("plain", Status::success, 0.123456789012345, 0.987654321);
  auto b = record("needs, \"quoting\"", Status::fail, 0.0, 0.25);
  b.error = "Traceback\nNameError: x";
  b.final_code = "print('<&>')\n";
  auto report = h::aggregate({a, b, record("c<&>", Status::timeout, 0, 0)}, "ritl-doc");

  const auto csv = h::report_to_csv(report);
  EXPECT_EQ(testutil::count_lines(csv), report.n + 1);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,render_status,vs,cbb,rounds_used,failure,error");
  EXPECT_NE(csv.find("\"needs, \"\"quoting\"\"\",fail,0,0.25,1,render_failed,Traceback | NameError: x"),
            std::string::npos)
      << csv;
  EXPECT_NE(csv.find("plain,success,0.123456789012345,0.987654321,1,none,"), std::string::npos) << csv;

  EXPECT_EQ(h::report_from_json(h::report_to_json(report)), report);

  const auto svg = h::report_to_svg(report);
  const std::regex marker("<circle class=\"point\"");
  EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), marker), std::sregex_iterator()), 3);
  EXPECT_NE(svg.find("c&lt;&amp;&gt;"), std::string::npos);
  EXPECT_EQ(svg.find("c<&>"), std::string::npos);
}

TEST(Report, JsonRoundTripsRandomReports) {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 30; ++t) {
    std::vector<h::EvalRecord> records;
    for (int i = 0; i < 1 + t % 7; ++i) {
      records.push_back(record("r" + std::to_string(i), i % 2 ? Status::fail : Status::success, u(rng), u(rng)));
    }
    auto report = h::aggregate(records, "ritl");
    EXPECT_EQ(h::report_from_json(h::report_to_json(report)), report);
  }
  EXPECT_THROW(h::report_from_json("{}"), manimeval::DatasetError);
}

TEST(Report, EmitWritesRequestedFiles) {
  ScratchDir dir;
  auto report = h::aggregate({record("a", Status::success, 1, 1)}, "offline");
  const std::vector<h::ReportFormat> all{h::ReportFormat::csv, h::ReportFormat::json, h::ReportFormat::svg};
  auto files = h::emit_report(report, dir.path() / "out" / "nested", all);
  ASSERT_EQ(files.size(), 3u);
  for (const auto& f : files) EXPECT_GT(fs::file_size(f), 0u);
  EXPECT_EQ(h::report_from_json(testutil::read_file(files[1])), report);

  testutil::write_file(dir.path() / "plain-file", "x");
  EXPECT_THROW(h::emit_report(report, dir.path() / "plain-file" / "out", all), manimeval::EnvironmentError);
}

namespace {

// Answers with the completion registered for whichever description appears
// in the prompt.
class LookupModel final : public ag::LanguageModel {
 public:
  explicit LookupModel(std::map<std::string, std::string> by_description) : answers_(std::move(by_description)) {}
  std::string generate(std::span<const ag::ChatMessage> messages) override {
    for (const auto& [description, completion] : answers_) {
      if (messages.back().content.find(description) != std::string::npos) return completion;
    }
    throw manimeval::EndpointError("no scripted answer");
  }

 private:
  std::map<std::string, std::string> answers_;
};

}  // namespace

class EvaluateTest : public ReferenceCacheTest {
 protected:
  void SetUp() override {
    ReferenceCacheTest::SetUp();
    records_ = precompute(h::parse_dataset(
        dataset_line("dot", scene_code("moving_dot", "self.play(Create(Dot()))")) +
        dataset_line("square", scene_code("square_to_circle", "self.play(Create(Square()))")) +
        dataset_line("triangle", scene_code("triangle_spin", "self.play(Rotate(Triangle()))"))));
    renderer_ = std::make_unique<manimeval::renderer::Renderer>(config_);
    deps_.code_embedder = &code_embedder_;
    deps_.image_embedder = &image_embedder_;
    deps_.render = ag::render_with(*renderer_, manimeval::renderer::Quality::low, std::chrono::seconds(30));
  }

  h::Completions identity() const {
    h::Completions c;
    for (const auto& r : records_) c[r.id] = manimeval::codeblock::wrap_tagged(r.reference_code);
    return c;
  }

  std::vector<h::DatasetRecord> records_;
  std::unique_ptr<manimeval::renderer::Renderer> renderer_;
  manimeval::codemetrics::HashingCodeEmbedder code_embedder_;
  manimeval::videometrics::HashingImageEmbedder image_embedder_;
  h::EvalDependencies deps_;
  h::EvalOptions options_;
};

TEST_F(EvaluateTest, IdentityCompletionsScorePerfectly) {
  const auto completions = identity();
  auto report = h::evaluate_run(records_, options_, deps_, &completions);
  EXPECT_EQ(report.mode, "offline");
  EXPECT_EQ(report.rsr, 100.0);
  EXPECT_GE(report.mean_vs, 99.0);
  EXPECT_GE(report.mean_cbb, 99.0);
  for (const auto& r : report.per_record) {
    EXPECT_EQ(r.failure, h::FailureKind::none);
    EXPECT_NEAR(r.vs, 1.0, 1e-6);
    EXPECT_NEAR(r.cbb, 1.0, 1e-9);
  }
}

TEST_F(EvaluateTest, CompletionsWithoutCodeScoreZero) {
  h::Completions none{{"dot", "Sorry."}, {"square", ""}, {"triangle", "I would use a Triangle."}};
  auto report = h::evaluate_run(records_, options_, deps_, &none);
  EXPECT_EQ(report.rsr, 0.0);
  EXPECT_EQ(report.mean_vs, 0.0);
  EXPECT_EQ(report.mean_cbb, 0.0);
  for (const auto& r : report.per_record) EXPECT_EQ(r.failure, h::FailureKind::no_code_extracted);
  EXPECT_EQ(renders(), 3u);  // references only
}

TEST_F(EvaluateTest, PerRecordFailuresAreRecorded) {
  auto completions = identity();
  completions["square"] = manimeval::codeblock::wrap_tagged(scene_code("square_to_circle", "FAIL()"));
  completions.erase("triangle");
  auto report = h::evaluate_run(records_, options_, deps_, &completions);
  ASSERT_EQ(report.n, 3u);
  const auto& sq = report.per_record[1];
  EXPECT_EQ(sq.failure, h::FailureKind::render_failed);
  EXPECT_EQ(sq.vs, 0.0);
  EXPECT_GT(sq.cbb, 0.5);
  EXPECT_NE(sq.error.find("NameError"), std::string::npos);
  EXPECT_EQ(report.per_record[2].failure, h::FailureKind::missing_completion);
  EXPECT_NEAR(report.rsr, 100.0 / 3.0, 1e-12);
}

TEST_F(EvaluateTest, CrossedVideosScoreLowerThanMatches) {
  h::Completions crossed;
  crossed["dot"] = manimeval::codeblock::wrap_tagged(scene_code("square_to_circle", "self.play(Create(Dot()))"));
  auto report = h::evaluate_run(std::span(records_).first(1), options_, deps_, &crossed);
  EXPECT_EQ(report.rsr, 100.0);
  EXPECT_LT(report.per_record[0].vs, 0.999);
}

TEST_F(EvaluateTest, LiveModeMatchesOfflineForTheSameCompletions) {
  auto completions = identity();
  completions["square"] = manimeval::codeblock::wrap_tagged(scene_code("square_to_circle", "FAIL()"));
  completions["triangle"] = manimeval::codeblock::wrap_tagged(scene_code("moving_dot", "self.play(Rotate(Dot()))"));
  std::map<std::string, std::string> by_description;
  for (const auto& r : records_) by_description[r.description] = completions.at(r.id);

  auto offline = h::evaluate_run(records_, options_, deps_, &completions);
  LookupModel llm(by_description);
  deps_.llm = &llm;
  options_.agent.mode = ag::Mode::vanilla;
  auto live = h::evaluate_run(records_, options_, deps_);
  ASSERT_EQ(live.n, offline.n);
  for (std::size_t i = 0; i < live.n; ++i) {
    EXPECT_EQ(live.per_record[i], offline.per_record[i]) << live.per_record[i].id;
  }
  EXPECT_EQ(live.mean_vs, offline.mean_vs);
  EXPECT_EQ(live.mode, "vanilla");
}

TEST_F(EvaluateTest, EndpointErrorsDoNotAbortTheRun) {
  std::map<std::string, std::string> answers{
      {records_[0].description, manimeval::codeblock::wrap_tagged(records_[0].reference_code)}};
  LookupModel llm(answers);
  deps_.llm = &llm;
  options_.agent.mode = ag::Mode::ritl;
  auto report = h::evaluate_run(records_, options_, deps_);
  EXPECT_EQ(report.per_record[0].failure, h::FailureKind::none);
  EXPECT_EQ(report.per_record[1].failure, h::FailureKind::error);
  EXPECT_EQ(report.per_record[1].error, "no scripted answer");
  EXPECT_EQ(report.per_record[2].failure, h::FailureKind::error);
  EXPECT_NEAR(report.rsr, 100.0 / 3.0, 1e-12);
}

TEST_F(EvaluateTest, WorkersDoNotChangeResults) {
  const auto completions = identity();
  auto serial = h::evaluate_run(records_, options_, deps_, &completions);
  options_.workers = 3;
  auto parallel = h::evaluate_run(records_, options_, deps_, &completions);
  EXPECT_EQ(parallel, serial);
}

TEST_F(EvaluateTest, ReferencesMustBePrecomputed) {
  auto records = records_;
  records[1].reference_video.reset();
  const auto completions = identity();
  EXPECT_NE(error_of([&] { (void)h::evaluate_run(records, options_, deps_, &completions); }).find("square"),
            std::string::npos);
  records[1].reference_video = kVideos / "not_a_video.mp4";
  EXPECT_NE(error_of([&] { (void)h::evaluate_run(records, options_, deps_, &completions); }).find("undecodable"),
            std::string::npos);
  h::EvalDependencies missing;
  EXPECT_THROW(h::evaluate_run(records_, options_, missing, &completions), manimeval::ContractViolation);
  EXPECT_THROW(h::evaluate_run(records_, options_, deps_), manimeval::ContractViolation);
}
