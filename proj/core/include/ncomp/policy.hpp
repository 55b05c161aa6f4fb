#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ncomp/arch.hpp"

namespace ncomp {

enum class PolicyKind { Removal, Shrink };
std::string_view to_string(PolicyKind k);

// Recorded log-probabilities are floored here; the gradient path uses the
// exact distribution and stays finite on its own.
inline constexpr double kLogProbFloor = -30.0;

// Shrink actions index the 10-way grid {0.1, 0.2, ..., 1.0}.
inline constexpr int kShrinkLevels = 10;
inline double shrink_level_to_factor(int level) { return (level + 1) / 10.0; }
int shrink_factor_to_level(double factor);  // throws on off-grid factors

// One sampled rollout. For removal, actions are keep(1)/remove(0) per layer;
// for shrink, grid levels 0..9 per configuration variable. hidden_states
// holds the top recurrent state per step (both directions concatenated for
// the bidirectional policy) and feeds the optional value head.
struct Trajectory {
  std::vector<int> actions;
  std::vector<double> log_probs;
  Eigen::MatrixXd hidden_states;   // (state_dim, T)
  double entropy = 0;
  std::vector<std::uint8_t> forced;  // steps pinned by the environment, log_prob 0

  RemovalMask removal_mask() const;
  ShrinkVector shrink_vector() const;
  double total_log_prob() const;
};

// Stacked LSTM policy over a flat parameter vector. The removal flavor is
// bidirectional with a per-step Bernoulli head; the shrink flavor is
// unidirectional, feeds the previous action back in, and ends in a 10-way
// softmax head. The optional value head is an affine map from the top
// hidden state to a scalar, used by the Actor-Critic variant.
class RecurrentPolicy {
 public:
  RecurrentPolicy(PolicyKind kind, int input_size, int hidden_size, int n_layers,
                  bool value_head, std::uint64_t init_seed);

  PolicyKind kind() const { return kind_; }
  int input_size() const { return input_size_; }
  int hidden_size() const { return hidden_size_; }
  int n_layers() const { return n_layers_; }
  bool bidirectional() const { return kind_ == PolicyKind::Removal; }
  bool has_value_head() const { return has_value_head_; }
  int n_actions() const { return kind_ == PolicyKind::Removal ? 1 : kShrinkLevels; }
  // Width of the per-step state exposed to the heads.
  int state_size() const { return hidden_size_ * (bidirectional() ? 2 : 1); }

  Eigen::VectorXd& params() { return theta_; }
  const Eigen::VectorXd& params() const { return theta_; }
  int n_params() const { return static_cast<int>(theta_.size()); }

  // Slice of the flat vector owned by the value head (offset, length).
  std::pair<int, int> value_head_span() const;

 private:
  friend struct PolicyOps;
  PolicyKind kind_;
  int input_size_, hidden_size_, n_layers_;
  bool has_value_head_;
  Eigen::VectorXd theta_;
};

// Spec sizes: removal 2x30 bidirectional over 12 inputs, shrink 2x50
// unidirectional over 12 inputs plus the previous action.
inline constexpr int kRemovalInputSize = kLayerTypeCount + 6;
inline constexpr int kShrinkInputSize = kRemovalInputSize + 1;
RecurrentPolicy make_removal_policy(std::uint64_t seed, bool value_head = false);
RecurrentPolicy make_shrink_policy(std::uint64_t seed, bool value_head = false);

// One-hot type code + the six normalized numeric fields, one column per
// layer (removal) or per shrink variable (owning layer's features).
Eigen::MatrixXd policy_inputs(std::span<const LayerFeature> features);
Eigen::MatrixXd shrink_policy_inputs(std::span<const LayerFeature> layer_features,
                                     std::span<const ShrinkVar> vars);

// Samples a full removal mask. Hidden states are computed over the whole
// sequence first (both directions), then actions are drawn independently
// per step; steps listed in forced_keep are pinned to keep with log_prob 0.
Trajectory sample_removal(const RecurrentPolicy& policy, const Eigen::MatrixXd& inputs,
                          std::uint64_t rng_seed, std::span<const int> forced_keep = {});

// Samples shrink factors autoregressively; the input at step t is
// (x_t, a_{t-1}) with a_0 = 1.0.
Trajectory sample_shrink(const RecurrentPolicy& policy, const Eigen::MatrixXd& inputs,
                         std::uint64_t rng_seed);

// Per-step log-probabilities of the given actions under the current
// weights. Matches what sampling would have recorded.
std::vector<double> log_prob_of(const RecurrentPolicy& policy, const Eigen::MatrixXd& inputs,
                                const std::vector<int>& actions,
                                std::span<const std::uint8_t> forced = {});

// d/dtheta of sum_t weight_t * log P(a_t); the REINFORCE building block.
Eigen::VectorXd log_prob_grad(const RecurrentPolicy& policy, const Eigen::MatrixXd& inputs,
                              const std::vector<int>& actions,
                              const std::vector<double>& step_weights,
                              std::span<const std::uint8_t> forced = {});

// Per-step scalar value estimates from the value head.
std::vector<double> value_of(const RecurrentPolicy& policy,
                             const Eigen::MatrixXd& hidden_states);

// Gradient of sum_t weight_t * V_t over the value-head slice (zeros
// elsewhere); the critic update building block.
Eigen::VectorXd value_grad(const RecurrentPolicy& policy, const Eigen::MatrixXd& hidden_states,
                           const std::vector<double>& step_weights);

// Distribution probes for tests and diagnostics.
Eigen::VectorXd removal_keep_probs(const RecurrentPolicy& policy, const Eigen::MatrixXd& inputs);
Eigen::MatrixXd shrink_action_probs(const RecurrentPolicy& policy, const Eigen::MatrixXd& inputs,
                                    const std::vector<int>& actions);

// Versioned text checkpoint; weights at full precision, exact round-trip.
std::string serialize_policy(const RecurrentPolicy& policy);
RecurrentPolicy parse_policy(const std::string& text);
void save_policy(const std::string& path, const RecurrentPolicy& policy);
RecurrentPolicy load_policy(const std::string& path);

}  // namespace ncomp
