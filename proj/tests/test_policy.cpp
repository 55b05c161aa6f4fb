#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ncomp/policy.hpp"
#include "ncomp/rng.hpp"
#include "test_support.hpp"

using namespace ncomp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_inputs(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd x(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) x(i, j) = rng.uniform();
  return x;
}

// Pin the Bernoulli head: zero weights, fixed bias.
void set_head_bias(RecurrentPolicy& p, double bias) {
  // The head block sits just before the (absent) value head at the end.
  const int state = p.state_size();
  const int n_actions = p.n_actions();
  const int head_w = p.n_params() - n_actions * state - n_actions;
  p.params().segment(head_w, n_actions * state).setZero();
  p.params().segment(head_w + n_actions * state, n_actions).setConstant(bias);
}

}  // namespace

TEST_CASE("factor grid mapping") {
  CHECK(shrink_level_to_factor(0) == doctest::Approx(0.1));
  CHECK(shrink_level_to_factor(9) == doctest::Approx(1.0));
  CHECK(shrink_factor_to_level(0.1) == 0);
  CHECK(shrink_factor_to_level(1.0) == 9);
  CHECK_THROWS_AS(shrink_factor_to_level(0.55), std::invalid_argument);
}

TEST_CASE("spec policy shapes") {
  const RecurrentPolicy removal = make_removal_policy(1);
  CHECK(removal.hidden_size() == 30);
  CHECK(removal.n_layers() == 2);
  CHECK(removal.bidirectional());
  CHECK(removal.input_size() == 12);
  CHECK(removal.n_actions() == 1);

  const RecurrentPolicy shrink = make_shrink_policy(1);
  CHECK(shrink.hidden_size() == 50);
  CHECK(shrink.n_layers() == 2);
  CHECK_FALSE(shrink.bidirectional());
  CHECK(shrink.input_size() == 13);
  CHECK(shrink.n_actions() == 10);
}

TEST_CASE("sample_removal: determinism, saturation, uniform Bernoulli") {
  RecurrentPolicy policy = make_removal_policy(3);
  const auto inputs = policy_inputs(encode_layer_features(testing::conv_teacher()));

  const Trajectory a = sample_removal(policy, inputs, 42);
  const Trajectory b = sample_removal(policy, inputs, 42);
  CHECK(a.actions == b.actions);
  CHECK(a.log_probs == b.log_probs);
  CHECK(testing::bits_equal(a.hidden_states, b.hidden_states));

  // Saturated keep policy.
  set_head_bias(policy, 100.0);
  const Trajectory keep = sample_removal(policy, inputs, 7);
  for (std::size_t t = 0; t < keep.actions.size(); ++t) {
    CHECK(keep.actions[t] == 1);
    CHECK(keep.log_probs[t] == doctest::Approx(0.0).epsilon(1e-12));
  }

  // Uniform Bernoulli: any 3-step mask has total log-prob ln(1/8).
  RecurrentPolicy uniform = RecurrentPolicy(PolicyKind::Removal, 4, 5, 2, false, 9);
  set_head_bias(uniform, 0.0);
  const MatrixXd x3 = random_inputs(4, 3, 5);
  const Trajectory u = sample_removal(uniform, x3, 11);
  CHECK(u.total_log_prob() == doctest::Approx(std::log(1.0 / 8.0)));
  CHECK(u.entropy == doctest::Approx(3 * std::log(2.0)));
}

TEST_CASE("sample_removal: forced steps are pinned with log-prob zero") {
  RecurrentPolicy policy = make_removal_policy(3);
  set_head_bias(policy, -100.0);  // wants to remove everything
  const auto inputs = policy_inputs(encode_layer_features(testing::conv_teacher()));
  const std::vector<int> forced = {static_cast<int>(inputs.cols()) - 1};
  const Trajectory t = sample_removal(policy, inputs, 1, forced);
  CHECK(t.actions.back() == 1);
  CHECK(t.log_probs.back() == 0.0);
  CHECK(t.forced.back() == 1);
  for (std::size_t i = 0; i + 1 < t.actions.size(); ++i) CHECK(t.actions[i] == 0);
}

TEST_CASE("sample_shrink: determinism, uniform categorical, empty trajectory") {
  RecurrentPolicy policy = make_shrink_policy(3);
  const Architecture teacher = testing::conv_teacher();
  const auto inputs =
      shrink_policy_inputs(encode_layer_features(teacher), shrink_variables(teacher));

  const Trajectory a = sample_shrink(policy, inputs, 42);
  const Trajectory b = sample_shrink(policy, inputs, 42);
  CHECK(a.actions == b.actions);
  CHECK(a.log_probs == b.log_probs);

  set_head_bias(policy, 0.25);  // equal logits -> uniform 10-way
  const Trajectory u = sample_shrink(policy, inputs, 5);
  for (double lp : u.log_probs) CHECK(lp == doctest::Approx(std::log(0.1)));

  const Trajectory empty = sample_shrink(policy, MatrixXd(12, 0), 1);
  CHECK(empty.actions.empty());
  CHECK(empty.total_log_prob() == 0.0);
}

TEST_CASE("log_prob_of: replay consistency and the -30 floor") {
  RecurrentPolicy policy = make_removal_policy(17);
  const auto inputs = policy_inputs(encode_layer_features(testing::surrogate8_teacher()));
  const Trajectory t = sample_removal(policy, inputs, 23, std::vector<int>{7});
  const auto lps = log_prob_of(policy, inputs, t.actions, {t.forced.data(), t.forced.size()});
  REQUIRE(lps.size() == t.log_probs.size());
  for (std::size_t i = 0; i < lps.size(); ++i)
    CHECK(lps[i] == doctest::Approx(t.log_probs[i]).epsilon(1e-12));

  // Contradicting a saturated policy hits the floor.
  set_head_bias(policy, 100.0);
  const std::vector<int> contradiction(inputs.cols(), 0);
  const auto floored = log_prob_of(policy, inputs, contradiction);
  for (double lp : floored) {
    CHECK(lp <= kLogProbFloor + 1e-12);
    CHECK(lp >= kLogProbFloor - 1e-12);
  }

  // Shrink replay.
  RecurrentPolicy shrink = make_shrink_policy(29);
  const Architecture teacher = testing::conv_teacher();
  const auto sx =
      shrink_policy_inputs(encode_layer_features(teacher), shrink_variables(teacher));
  const Trajectory st = sample_shrink(shrink, sx, 77);
  const auto slps = log_prob_of(shrink, sx, st.actions);
  for (std::size_t i = 0; i < slps.size(); ++i)
    CHECK(slps[i] == doctest::Approx(st.log_probs[i]).epsilon(1e-12));

  // Uniform Bernoulli closed form: -L ln 2.
  RecurrentPolicy uniform = RecurrentPolicy(PolicyKind::Removal, 4, 5, 2, false, 9);
  set_head_bias(uniform, 0.0);
  const MatrixXd x = random_inputs(4, 4, 13);
  const auto ulps = log_prob_of(uniform, x, {1, 0, 1, 1});
  double total = 0;
  for (double lp : ulps) total += lp;
  CHECK(total == doctest::Approx(-4 * std::log(2.0)));
}

TEST_CASE("log_prob_of validates lengths") {
  const RecurrentPolicy policy = make_removal_policy(1);
  const MatrixXd x = random_inputs(12, 3, 1);
  CHECK_THROWS_AS(log_prob_of(policy, x, {1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(log_prob_of(policy, random_inputs(7, 3, 1), {1, 0, 1}),
                  std::invalid_argument);
}

TEST_CASE("gradient check: removal policy BPTT vs finite differences") {
  for (int L : {1, 3, 4}) {
    RecurrentPolicy policy(PolicyKind::Removal, 5, 7, 2, false, 1000 + L);
    const MatrixXd x = random_inputs(5, L, 2000 + L);
    std::vector<int> actions(L);
    for (int t = 0; t < L; ++t) actions[t] = (t * 7 + L) % 2;
    const std::vector<double> weights(L, 1.0);

    const VectorXd grad = log_prob_grad(policy, x, actions, weights);
    const double h = 1e-5;
    double max_rel = 0;
    for (int i = 0; i < policy.n_params(); ++i) {
      const double orig = policy.params()(i);
      policy.params()(i) = orig + h;
      double lp_plus = 0;
      for (double v : log_prob_of(policy, x, actions)) lp_plus += v;
      policy.params()(i) = orig - h;
      double lp_minus = 0;
      for (double v : log_prob_of(policy, x, actions)) lp_minus += v;
      policy.params()(i) = orig;
      const double fd = (lp_plus - lp_minus) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(grad(i)), 1e-4});
      max_rel = std::max(max_rel, std::abs(fd - grad(i)) / denom);
    }
    CHECK(max_rel < 1e-4);
  }
}

TEST_CASE("gradient check: shrink policy BPTT vs finite differences") {
  for (int L : {1, 4}) {
    RecurrentPolicy policy(PolicyKind::Shrink, 6, 8, 2, false, 3000 + L);
    const MatrixXd x = random_inputs(5, L, 4000 + L);
    std::vector<int> actions(L);
    for (int t = 0; t < L; ++t) actions[t] = (t * 3 + 1) % kShrinkLevels;
    std::vector<double> weights(L);
    for (int t = 0; t < L; ++t) weights[t] = 0.5 + 0.25 * t;  // per-step weights

    const VectorXd grad = log_prob_grad(policy, x, actions, weights);
    const double h = 1e-5;
    double max_rel = 0;
    for (int i = 0; i < policy.n_params(); ++i) {
      const double orig = policy.params()(i);
      auto weighted = [&] {
        double s = 0;
        const auto lps = log_prob_of(policy, x, actions);
        for (int t = 0; t < L; ++t) s += weights[t] * lps[t];
        return s;
      };
      policy.params()(i) = orig + h;
      const double lp_plus = weighted();
      policy.params()(i) = orig - h;
      const double lp_minus = weighted();
      policy.params()(i) = orig;
      const double fd = (lp_plus - lp_minus) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(grad(i)), 1e-4});
      max_rel = std::max(max_rel, std::abs(fd - grad(i)) / denom);
    }
    CHECK(max_rel < 1e-4);
  }
}

TEST_CASE("sampling frequencies match policy probabilities (3 standard errors)") {
  const int n_seeds = 10000;

  RecurrentPolicy removal(PolicyKind::Removal, 5, 6, 2, false, 77);
  const MatrixXd x = random_inputs(5, 4, 78);
  const VectorXd probs = removal_keep_probs(removal, x);
  std::vector<int> keep_counts(4, 0);
  for (int s = 0; s < n_seeds; ++s) {
    const Trajectory t = sample_removal(removal, x, 10000 + s);
    for (int i = 0; i < 4; ++i) keep_counts[i] += t.actions[i];
  }
  for (int i = 0; i < 4; ++i) {
    const double p = probs(i);
    const double se = std::sqrt(p * (1 - p) / n_seeds);
    CHECK(std::abs(keep_counts[i] / double(n_seeds) - p) <= 3 * se + 1e-9);
  }

  // Shrink: the first step's distribution is action-history free.
  RecurrentPolicy shrink(PolicyKind::Shrink, 6, 6, 2, false, 79);
  const MatrixXd sx = random_inputs(5, 2, 80);
  const MatrixXd sm = shrink_action_probs(shrink, sx, {0, 0});
  std::vector<int> counts(kShrinkLevels, 0);
  for (int s = 0; s < n_seeds; ++s) counts[sample_shrink(shrink, sx, 20000 + s).actions[0]]++;
  for (int a = 0; a < kShrinkLevels; ++a) {
    const double p = sm(a, 0);
    const double se = std::sqrt(p * (1 - p) / n_seeds);
    CHECK(std::abs(counts[a] / double(n_seeds) - p) <= 3 * se + 1e-9);
  }
}

TEST_CASE("shrink policy shares parameters across time") {
  // The same (input, previous action, hidden state) gives the same step
  // distribution no matter where in the sequence it occurs.
  RecurrentPolicy policy(PolicyKind::Shrink, 6, 7, 2, false, 99);
  MatrixXd u = random_inputs(5, 1, 101);
  MatrixXd uu(5, 2), uuu(5, 3);
  uu << u, u;
  uuu << u, u, u;
  const MatrixXd p2 = shrink_action_probs(policy, uu, {3, 3});
  const MatrixXd p3 = shrink_action_probs(policy, uuu, {3, 3, 3});
  CHECK((p2.col(0) - p3.col(0)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((p2.col(1) - p3.col(1)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("value head: zero map, determinism, shapes") {
  RecurrentPolicy policy(PolicyKind::Shrink, 6, 5, 1, true, 7);
  const auto [off, len] = policy.value_head_span();
  policy.params().segment(off, len).setZero();

  MatrixXd h = random_inputs(5, 3, 8);
  const auto zeros = value_of(policy, h);
  for (double v : zeros) CHECK(v == 0.0);

  Rng rng(9);
  for (int i = 0; i < len; ++i) policy.params()(off + i) = rng.uniform(-1, 1);
  MatrixXd same(5, 2);
  same.col(0) = h.col(0);
  same.col(1) = h.col(0);
  const auto vals = value_of(policy, same);
  CHECK(vals[0] == vals[1]);

  const auto one = value_of(policy, MatrixXd(h.col(0)));
  CHECK(one.size() == 1);

  RecurrentPolicy no_head(PolicyKind::Shrink, 6, 5, 1, false, 7);
  CHECK_THROWS_AS(value_of(no_head, h), std::logic_error);
}

TEST_CASE("policy checkpoints round-trip exactly") {
  for (bool value_head : {false, true}) {
    const RecurrentPolicy policy = make_removal_policy(12345, value_head);
    const RecurrentPolicy back = parse_policy(serialize_policy(policy));
    CHECK(back.kind() == policy.kind());
    CHECK(back.hidden_size() == policy.hidden_size());
    CHECK(back.has_value_head() == policy.has_value_head());
    REQUIRE(back.n_params() == policy.n_params());
    CHECK(testing::bits_equal(back.params(), policy.params()));
  }

  const RecurrentPolicy shrink = make_shrink_policy(777);
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "ncomp_test_policy.ckpt";
  save_policy(path.string(), shrink);
  const RecurrentPolicy loaded = load_policy(path.string());
  CHECK(testing::bits_equal(loaded.params(), shrink.params()));
  fs::remove(path);

  CHECK_THROWS(parse_policy("garbage"));
}
