#include <benchmark/benchmark.h>

#include "ncomp/eval.hpp"
#include "ncomp/rng.hpp"
#include "test_support.hpp"

using namespace ncomp;

static void BM_SurrogateEvaluate(benchmark::State& state) {
  const Architecture t = testing::surrogate8_teacher();
  const auto ctx = make_surrogate_context(t, 0.99, 0.3, 0.4, 1);
  const RewardConfig cfg{0.99, {}, ConstraintMode::None, 1};
  Rng rng(5);
  std::vector<Architecture> candidates;
  for (int i = 0; i < 64; ++i) {
    RemovalMask mask;
    for (std::size_t l = 0; l < t.layers.size(); ++l)
      mask.keep.push_back(rng.bernoulli(0.7));
    mask.keep.back() = 1;
    candidates.push_back(apply_removal(t, mask));
  }
  int i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        surrogate_evaluate(candidates[i++ % candidates.size()], *ctx, cfg, 0));
  }
}
BENCHMARK(BM_SurrogateEvaluate);
