// Serial reference vs OpenMP kernels. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include "oracles.hpp"
#include "topicblocks/evaluation.hpp"
#include "topicblocks/inference.hpp"
#include "topicblocks/presets.hpp"

using namespace topicblocks;

namespace {

const LdaSample& corpus_sample() {
  static const LdaSample s = sample_corpus(10, 1000, 5000, std::vector<std::int64_t>(1000, 128),
                                           synthetic_hyper(1000, 10, 5000, 1.0, 1.0, true), 1);
  return s;
}

void BM_Dissemination(benchmark::State& st) {
  const auto& s = corpus_sample();
  for (auto _ : st) benchmark::DoNotOptimize(dissemination_all(s.corpus, st.range(0) != 0));
}

void BM_LdaMarginalMC(benchmark::State& st) {
  const std::vector<TopicCount> labels = {{0, 0, 0, 1}, {0, 1, 1, 1}, {1, 1, 0, 2}, {1, 2, 1, 1}};
  const auto h = make_hyper(1.0, 1.0, uniform_base(2), uniform_base(3), 2);
  const std::vector<double> eta = {2.0, 3.0};
  for (auto _ : st) benchmark::DoNotOptimize(oracle::lda_marginal_mc(labels, h, eta, 200000, 7, st.range(0) != 0));
}

void BM_FitRestarts(benchmark::State& st) {
  const auto s = sample_corpus(3, 100, 200, std::vector<std::int64_t>(100, 40), synthetic_hyper(100, 3, 200, 0.5, 0.5, true), 2);
  const auto g = from_counts(s.corpus);
  InferenceConfig c;
  c.seed = 3;
  c.n_restarts = 4;
  c.n_sweeps = 10;
  c.parallel = st.range(0) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(fit(g, c));
}

void BM_SmSweepCells(benchmark::State& st) {
  SmSweepPreset p;
  p.D = 200;
  p.V = 2000;
  p.m = 64;
  for (auto _ : st) benchmark::DoNotOptimize(run_sm_sweep(p, st.range(0) != 0));
}

}  // namespace

BENCHMARK(BM_Dissemination)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LdaMarginalMC)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitRestarts)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SmSweepCells)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
