#include <benchmark/benchmark.h>

#include "ncomp/dataset.hpp"
#include "ncomp/net.hpp"
#include "test_support.hpp"

using namespace ncomp;

static Dataset bench_data(int n) {
  SyntheticSpec spec;
  spec.samples_per_class = n / spec.n_classes;
  spec.noise_sigma = 0.5;
  return gen_synthetic(spec);
}

static void BM_TeacherForwardBatch64(benchmark::State& state) {
  const TrainableNet net(testing::conv_teacher(), 1);
  const Dataset data = bench_data(640);
  const Eigen::MatrixXd x = data.batch_inputs(0, 64);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_TeacherForwardBatch64);

static void BM_TeacherGradBatch64(benchmark::State& state) {
  const TrainableNet net(testing::conv_teacher(), 1);
  const Dataset data = bench_data(640);
  const Eigen::MatrixXd x = data.batch_inputs(0, 64);
  std::vector<int> labels(data.labels.begin(), data.labels.begin() + 64);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        net.batch_grad(x, labels, {}, LossSpec{LossMode::HardOnly, 0.0}));
}
BENCHMARK(BM_TeacherGradBatch64);

static void BM_TrainEpoch1k(benchmark::State& state) {
  const Dataset data = bench_data(1000);
  for (auto _ : state) {
    TrainableNet net(testing::conv_teacher(), 1);
    TrainOptions opt;
    opt.epochs = 1;
    net.train(data, LossSpec{LossMode::HardOnly, 0.0}, opt);
    benchmark::DoNotOptimize(net.params());
  }
}
BENCHMARK(BM_TrainEpoch1k)->Unit(benchmark::kMillisecond);
