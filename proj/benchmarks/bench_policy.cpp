#include <benchmark/benchmark.h>

#include "ncomp/policy.hpp"
#include "test_support.hpp"

using namespace ncomp;

static void BM_SampleRemoval(benchmark::State& state) {
  const RecurrentPolicy policy = make_removal_policy(7);
  const auto inputs = policy_inputs(encode_layer_features(testing::conv_teacher()));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_removal(policy, inputs, seed++));
}
BENCHMARK(BM_SampleRemoval);

static void BM_RemovalLogProbGrad(benchmark::State& state) {
  const RecurrentPolicy policy = make_removal_policy(7);
  const auto inputs = policy_inputs(encode_layer_features(testing::conv_teacher()));
  const Trajectory traj = sample_removal(policy, inputs, 3);
  const std::vector<double> weights(traj.actions.size(), 1.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(log_prob_grad(policy, inputs, traj.actions, weights,
                                           {traj.forced.data(), traj.forced.size()}));
}
BENCHMARK(BM_RemovalLogProbGrad);

static void BM_SampleShrink(benchmark::State& state) {
  const RecurrentPolicy policy = make_shrink_policy(7);
  const Architecture t = testing::conv_teacher();
  const auto inputs = shrink_policy_inputs(encode_layer_features(t), shrink_variables(t));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_shrink(policy, inputs, seed++));
}
BENCHMARK(BM_SampleShrink);
