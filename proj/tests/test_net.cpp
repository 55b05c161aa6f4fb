#include <doctest.h>

#include <cmath>

#include "ncomp/net.hpp"
#include "ncomp/rng.hpp"
#include "test_support.hpp"

using namespace ncomp;
using namespace ncomp::testing;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_batch(long long rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd x(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (long long i = 0; i < rows; ++i) x(i, j) = rng.uniform(-1, 1);
  return x;
}

std::vector<int> random_labels(int n, int classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(rng.uniform() * classes);
  return y;
}

// Central-difference check of every parameter gradient at step h. ReLU and
// max-pool make the loss piecewise smooth: a coordinate whose +-h interval
// straddles a kink re-measures at a smaller step, where the quotient is
// local again. A wrong analytic gradient fails at every step size.
double max_param_grad_rel_error(TrainableNet& net, const MatrixXd& x,
                                const std::vector<int>& labels, const MatrixXd& z,
                                const LossSpec& loss, double h = 1e-4) {
  const VectorXd grad = net.batch_grad(x, labels, z, loss);
  auto fd_at = [&](int i, double step) {
    const double orig = net.params()(i);
    net.params()(i) = orig + step;
    const double lp = net.batch_loss(x, labels, z, loss);
    net.params()(i) = orig - step;
    const double lm = net.batch_loss(x, labels, z, loss);
    net.params()(i) = orig;
    return (lp - lm) / (2 * step);
  };
  double max_rel = 0;
  for (int i = 0; i < net.params().size(); ++i) {
    double rel = 2;
    for (double step : {h, h / 100}) {
      const double fd = fd_at(i, step);
      const double denom = std::max({std::abs(fd), std::abs(grad(i)), 1e-4});
      rel = std::abs(fd - grad(i)) / denom;
      if (rel < 1e-3) break;
    }
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace

TEST_CASE("build_network: determinism, shapes, degenerate rejection") {
  const Architecture t = conv_teacher();
  TrainableNet a(t, 7), b(t, 7);
  CHECK(bits_equal(a.params(), b.params()));
  TrainableNet c(t, 8);
  CHECK_FALSE(bits_equal(a.params(), c.params()));

  // First conv weight block is (n_out, in_c*k*k) = 16 x 9 = 144 entries.
  CHECK(a.n_params() == param_count(t));

  Architecture empty;
  empty.input_shape = {1, 8, 8};
  empty.n_classes = 10;
  CHECK_THROWS_AS(TrainableNet(empty, 1), std::invalid_argument);
}

TEST_CASE("forward: zero-weight linear net gives zero logits, shape contract") {
  Architecture lin_only;
  lin_only.input_shape = {1, 4, 4};
  lin_only.n_classes = 3;
  lin_only.layers = {flat(), lin(3)};
  TrainableNet net(lin_only, 1);
  net.params().setZero();

  const MatrixXd x = random_batch(16, 5, 2);
  const MatrixXd logits = net.forward(x);
  CHECK(logits.rows() == 5);
  CHECK(logits.cols() == 3);
  CHECK(logits.cwiseAbs().maxCoeff() == 0.0);

  // Identical inputs produce identical rows.
  TrainableNet conv_net(tiny_all_layers(), 3);
  const MatrixXd x2 = random_batch(2 * 6 * 6, 2, 4);
  MatrixXd twin(2 * 6 * 6, 2);
  twin.col(0) = x2.col(0);
  twin.col(1) = x2.col(0);
  const MatrixXd out = conv_net.forward(twin);
  CHECK((out.row(0) - out.row(1)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(net.forward(random_batch(7, 2, 5)), std::invalid_argument);
}

TEST_CASE("kd_loss: exact cases") {
  MatrixXd a(1, 2), b(1, 2);
  a << 3, 4;
  b << 0, 0;
  CHECK(kd_loss(a, b) == 25.0);
  CHECK(kd_loss(a, a) == 0.0);

  // Duplicating the batch leaves the mean unchanged.
  MatrixXd a2(2, 2), b2(2, 2);
  a2 << 3, 4, 3, 4;
  b2 << 0, 0, 0, 0;
  CHECK(kd_loss(a2, b2) == 25.0);

  CHECK_THROWS_AS(kd_loss(a, MatrixXd(2, 2)), std::invalid_argument);
}

TEST_CASE("kd_loss is nonnegative, zero only at equality") {
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXd a = random_batch(4, 3, 100 + trial).transpose();
    MatrixXd b = random_batch(4, 3, 200 + trial).transpose();
    const double l = kd_loss(a, b);
    CHECK(l >= 0.0);
    if (!(a - b).isZero(0)) CHECK(l > 0.0);
  }
}

TEST_CASE("combined_loss: lambda limits") {
  MatrixXd logits(2, 3), z(2, 3);
  logits << 1, 2, 3, 3, 1, 0;
  z << 1, 2, 2, 3, 2, 0;
  const std::vector<int> y = {2, 0};
  CHECK(combined_loss(logits, y, z, 0.0) == doctest::Approx(cross_entropy_loss(logits, y)));

  // Huge lambda: ordering of candidates follows kd_loss.
  MatrixXd close = z;
  close(0, 2) += 0.01;
  MatrixXd far = z;
  far(0, 2) += 1.0;
  CHECK(combined_loss(close, y, z, 1e6) < combined_loss(far, y, z, 1e6));

  // Confident, correct and matching the teacher: loss near zero.
  MatrixXd sharp(1, 3);
  sharp << 30, -30, -30;
  CHECK(combined_loss(sharp, {0}, sharp, 0.5) == doctest::Approx(0.0).epsilon(1e-9));

  CHECK_THROWS_AS(combined_loss(logits, y, MatrixXd(), 0.5), std::invalid_argument);
}

TEST_CASE("softmax cross-entropy gradient: closed form (softmax - onehot)/N") {
  Architecture head_only;
  head_only.input_shape = {4, 1, 1};
  head_only.n_classes = 4;
  head_only.layers = {lin(4)};
  TrainableNet net(head_only, 3);
  // Identity weights, zero bias: logits == inputs.
  net.params().setZero();
  for (int i = 0; i < 4; ++i) net.params()(i * 4 + i) = 1.0;

  const int N = 6;
  const MatrixXd x = random_batch(4, N, 9);
  const std::vector<int> y = random_labels(N, 4, 10);
  const VectorXd grad = net.batch_grad(x, y, {}, LossSpec{LossMode::HardOnly, 0});

  // Bias gradient is exactly the summed (softmax - onehot)/N.
  for (int c = 0; c < 4; ++c) {
    double want = 0;
    for (int j = 0; j < N; ++j) {
      const VectorXd col = x.col(j);
      VectorXd p = (col.array() - col.maxCoeff()).exp();
      p /= p.sum();
      want += (p(c) - (y[j] == c ? 1.0 : 0.0)) / N;
    }
    CHECK(grad(16 + c) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("gradient check: every layer type, all loss modes") {
  // conv(+stride/padding), batchnorm, relu, maxpool, flatten, linear.
  TrainableNet net(tiny_all_layers(), 11);
  const int N = 5;
  const MatrixXd x = random_batch(2 * 6 * 6, N, 12);
  const std::vector<int> y = random_labels(N, 3, 13);
  const MatrixXd z = random_batch(3, N, 14).transpose();

  CHECK(max_param_grad_rel_error(net, x, y, z, {LossMode::HardOnly, 0}) < 1e-3);
  CHECK(max_param_grad_rel_error(net, x, y, z, {LossMode::KDOnly, 0}) < 1e-3);
  CHECK(max_param_grad_rel_error(net, x, y, z, {LossMode::Combined, 0.7}) < 1e-3);
}

TEST_CASE("gradient check: residual block") {
  TrainableNet net(residual_teacher(), 21);
  const int N = 4;
  const MatrixXd x = random_batch(1 * 12 * 12, N, 22);
  const std::vector<int> y = random_labels(N, 10, 23);
  CHECK(max_param_grad_rel_error(net, x, y, {}, {LossMode::HardOnly, 0}) < 1e-3);
}

TEST_CASE("train: separable toy set reaches >= 0.95, zero lr is a no-op, deterministic") {
  SyntheticSpec spec;
  spec.n_classes = 2;
  spec.samples_per_class = 60;
  spec.image_size = 8;
  spec.noise_sigma = 0.0;
  spec.seed = 5;
  const Dataset data = gen_synthetic(spec);

  Architecture logistic;
  logistic.input_shape = {1, 8, 8};
  logistic.n_classes = 2;
  logistic.layers = {flat(), lin(2)};

  TrainableNet net(logistic, 31);
  TrainOptions opt;
  opt.epochs = 20;
  opt.batch_size = 16;
  opt.lr = 0.05;
  net.train(data, {LossMode::HardOnly, 0}, opt);
  CHECK(net.evaluate_accuracy(data) >= 0.95);

  TrainableNet frozen(logistic, 31);
  const VectorXd before = frozen.params();
  TrainOptions null_opt;
  null_opt.epochs = 1;
  null_opt.lr = 0.0;
  frozen.train(data, {LossMode::HardOnly, 0}, null_opt);
  CHECK(bits_equal(before, frozen.params()));

  TrainableNet t1(logistic, 33), t2(logistic, 33);
  TrainOptions det;
  det.epochs = 3;
  t1.train(data, {LossMode::HardOnly, 0}, det);
  t2.train(data, {LossMode::HardOnly, 0}, det);
  CHECK(bits_equal(t1.params(), t2.params()));
}

TEST_CASE("train: full-batch gradient descent with small lr never increases the loss") {
  SyntheticSpec spec;
  spec.n_classes = 3;
  spec.samples_per_class = 8;
  spec.image_size = 6;
  spec.noise_sigma = 0.3;
  const Dataset data = gen_synthetic(spec);

  Architecture small;
  small.input_shape = {1, 6, 6};
  small.n_classes = 3;
  small.layers = {conv(3, 1, 1, 2), act(), flat(), lin(3)};
  TrainableNet net(small, 41);

  const MatrixXd x = data.batch_inputs(0, data.n);
  const std::vector<int> y = data.labels;
  double prev = net.batch_loss(x, y, {}, {LossMode::HardOnly, 0});
  TrainOptions opt;
  opt.epochs = 1;
  opt.batch_size = data.n;  // full batch
  opt.lr = 1e-3;
  opt.optimizer = TrainOptions::Optimizer::Sgd;
  for (int epoch = 0; epoch < 25; ++epoch) {
    net.train(data, {LossMode::HardOnly, 0}, opt);
    const double cur = net.batch_loss(x, y, {}, {LossMode::HardOnly, 0});
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("evaluate_accuracy: perfect predictor, constant logits, empty guard") {
  SyntheticSpec spec;
  spec.n_classes = 10;
  spec.samples_per_class = 120;
  spec.image_size = 6;
  spec.noise_sigma = 0.0;
  Dataset data = gen_synthetic(spec);

  // A constant-logit net on balanced 10-class data scores ~1/10: argmax
  // always picks class 0, which holds exactly 1/10 of the samples.
  Architecture logistic;
  logistic.input_shape = {1, 6, 6};
  logistic.n_classes = 10;
  logistic.layers = {flat(), lin(10)};
  TrainableNet constant(logistic, 1);
  constant.params().setZero();
  const double acc = constant.evaluate_accuracy(data);
  const double p = 1.0 / 10.0;
  const double se = std::sqrt(p * (1 - p) / data.n);
  CHECK(std::abs(acc - p) <= 3 * se + 1e-12);

  // Teach the labels exactly: accuracy 1.0 on the separable set.
  TrainableNet learner(logistic, 2);
  TrainOptions opt;
  opt.epochs = 20;
  opt.lr = 0.05;
  learner.train(data, {LossMode::HardOnly, 0}, opt);
  CHECK(learner.evaluate_accuracy(data) == 1.0);

  Dataset empty;
  CHECK_THROWS_AS(constant.evaluate_accuracy(empty), std::invalid_argument);
}

TEST_CASE("train rejects bad inputs and missing logits") {
  Architecture logistic;
  logistic.input_shape = {1, 6, 6};
  logistic.n_classes = 3;
  logistic.layers = {flat(), lin(3)};
  TrainableNet net(logistic, 1);

  SyntheticSpec spec;
  spec.n_classes = 3;
  spec.samples_per_class = 4;
  spec.image_size = 6;
  const Dataset data = gen_synthetic(spec);

  TrainOptions opt;
  opt.epochs = 0;
  CHECK_THROWS_AS(net.train(data, {LossMode::HardOnly, 0}, opt), std::invalid_argument);
  TrainOptions ok;
  CHECK_THROWS_AS(net.train(data, {LossMode::KDOnly, 0}, ok), std::invalid_argument);
}
