#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "matchlab/disentangle.hpp"
#include "matchlab/latent.hpp"
#include "matchlab/matching.hpp"
#include "matchlab/propensity.hpp"
#include "matchlab/synth.hpp"

namespace ml = matchlab;

namespace {

const ml::SynthResult& data(int n) {
  static std::map<int, ml::SynthResult> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    ml::SynthConfig cfg;
    cfg.n = n;
    cfg.seed = 1;
    it = cache.emplace(n, ml::generate(cfg)).first;
  }
  return it->second;
}

void BM_Generate(benchmark::State& state) {
  ml::SynthConfig cfg;
  cfg.n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ml::generate(cfg));
}
BENCHMARK(BM_Generate)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_GreedyMatch(benchmark::State& state) {
  const auto& ds = data(static_cast<int>(state.range(0))).dataset;
  ml::MatchConstraints c;
  c.require_references = true;
  ml::GreedyOptions opt;
  opt.threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(ml::greedy_match(ds, c, opt));
}
BENCHMARK(BM_GreedyMatch)->Args({500, 1})->Args({2000, 1})->Args({2000, 4})->Unit(benchmark::kMillisecond);

void BM_CaliperMatch(benchmark::State& state) {
  const auto& ds = data(static_cast<int>(state.range(0))).dataset;
  const auto scores =
      ml::propensity_scores(ml::fit_logistic(ml::restricted_features(ds), ml::attribute_labels(ds)), ds);
  for (auto _ : state) benchmark::DoNotOptimize(ml::caliper_match(scores, ds, {}));
}
BENCHMARK(BM_CaliperMatch)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FitLogistic(benchmark::State& state) {
  const auto& ds = data(2000).dataset;
  const auto x = ml::restricted_features(ds);
  const auto y = ml::attribute_labels(ds);
  for (auto _ : state) benchmark::DoNotOptimize(ml::fit_logistic(x, y));
}
BENCHMARK(BM_FitLogistic)->Unit(benchmark::kMillisecond);

void BM_TrainMapper(benchmark::State& state) {
  const auto& truth = data(2000).truth;
  ml::TrainConfig tc;
  tc.lambda = 1.0;
  tc.max_iters = 200;
  tc.kind = state.range(0) ? ml::MapperKind::Mlp : ml::MapperKind::Linear;
  for (auto _ : state) benchmark::DoNotOptimize(ml::train_mapper(truth.restricted, truth.attributes, tc));
}
BENCHMARK(BM_TrainMapper)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Project(benchmark::State& state) {
  const int levels = static_cast<int>(state.range(0));
  const int dims = 16;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0, 1);
  const auto random = [&] { return Eigen::MatrixXd(Eigen::MatrixXd::NullaryExpr(levels, dims, [&] { return normal(rng); })); };
  const auto model = ml::LinearToyModel::random(levels, dims, 2 * levels * dims, ml::LatentCode(random()), 3);
  const ml::LatentCode init(random());
  ml::ProjectionConfig cfg;
  cfg.lambda = 0.1;
  cfg.max_iters = 500;
  for (auto _ : state) benchmark::DoNotOptimize(ml::project(model, init, cfg));
}
BENCHMARK(BM_Project)->Arg(4)->Arg(14)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
