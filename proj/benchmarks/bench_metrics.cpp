#include <benchmark/benchmark.h>

#include <fstream>
#include <random>
#include <sstream>

#include "manimeval/codemetrics.hpp"
#include "manimeval/dtw.hpp"
#include "manimeval/videometrics.hpp"

namespace cm = manimeval::codemetrics;
namespace vm = manimeval::videometrics;

namespace {

std::string read_scene(const char* name) {
  std::ifstream in(std::string(MANIMEVAL_FIXTURES_DIR) + "/scenes/" + name + ".py");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

manimeval::RgbImage noise_frame(int w, int h, std::mt19937& rng) {
  manimeval::RgbImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

vm::FrameSequence noise_video(int frames, int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<manimeval::RgbImage> out;
  for (int i = 0; i < frames; ++i) out.push_back(noise_frame(w, h, rng));
  return manimeval::videometrics::make_sequence(std::move(out));
}

vm::VectorSequence random_series(std::size_t n, std::size_t dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  vm::VectorSequence s(n, std::vector<double>(dim));
  for (auto& v : s)
    for (auto& x : v) x = d(rng);
  return s;
}

void BM_SsimMatrix(benchmark::State& state) {
  const int frames = static_cast<int>(state.range(0));
  const auto a = noise_video(frames, 160, 90, 1);
  const auto b = noise_video(frames, 160, 90, 2);
  for (auto _ : state) benchmark::DoNotOptimize(vm::ssim_matrix(a, b));
  state.SetItemsProcessed(state.iterations() * frames * frames);
}
BENCHMARK(BM_SsimMatrix)->Arg(5)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_DtwExact(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_series(n, 128, 1);
  const auto b = random_series(n, 128, 2);
  for (auto _ : state) benchmark::DoNotOptimize(vm::dtw_distance(a, b, vm::euclidean_distance));
}
BENCHMARK(BM_DtwExact)->RangeMultiplier(4)->Range(16, 1024)->Unit(benchmark::kMicrosecond);

void BM_DtwFast(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_series(n, 128, 1);
  const auto b = random_series(n, 128, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(vm::dtw_distance(a, b, vm::euclidean_distance, vm::DtwMode::fast(1)));
}
BENCHMARK(BM_DtwFast)->RangeMultiplier(4)->Range(16, 1024)->Unit(benchmark::kMicrosecond);

void BM_TreeEdit(benchmark::State& state) {
  const auto a = cm::parse_syntax(read_scene("square_to_circle"));
  const auto b = cm::parse_syntax(read_scene("growing_bars"));
  for (auto _ : state) benchmark::DoNotOptimize(cm::tree_edit_distance(a, b));
  state.counters["nodes"] = static_cast<double>(a.size() + b.size());
}
BENCHMARK(BM_TreeEdit)->Unit(benchmark::kMicrosecond);

void BM_ScoreCode(benchmark::State& state) {
  const auto a = read_scene("square_to_circle");
  const auto b = read_scene("growing_bars");
  cm::HashingCodeEmbedder embedder;
  for (auto _ : state) benchmark::DoNotOptimize(cm::score_code(a, b, embedder));
}
BENCHMARK(BM_ScoreCode)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
