#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ncomp/policy.hpp"

namespace ncomp {

// Exponential-moving-average reward baseline. The first update seeds the
// average with the batch mean so the first gradient is zero-centered.
struct BaselineState {
  double value = 0;
  double decay = 0.9;
  bool initialized = false;
};

BaselineState update_baseline(BaselineState state, double batch_mean_reward);

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long long step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;

  static AdamState sized_like(const Eigen::VectorXd& theta, double lr);
};

// Ascent step with bias correction: theta += lr * m_hat / (sqrt(v_hat) + eps).
// Callers maximizing a reward pass the gradient as-is; callers minimizing a
// loss pass its negation.
void adam_step(AdamState& state, Eigen::VectorXd& theta, const Eigen::VectorXd& gradient);

// The m sampled rollouts behind one policy update. Policy inputs are shared
// across rollouts of a batch (the base architecture is fixed within a stage).
struct RolloutBatch {
  Eigen::MatrixXd inputs;  // (12, T) base features
  std::vector<Trajectory> trajectories;
  std::vector<double> rewards;
};

// (1/m) sum_k sum_t grad log P(a_t) * (R_k - b); ascent direction on the
// expected reward. Throws if the baseline was never initialized or any
// gradient entry is non-finite.
Eigen::VectorXd reinforce_gradient(const RecurrentPolicy& policy, const RolloutBatch& batch,
                                   const BaselineState& baseline);

struct ActorCriticGrads {
  Eigen::VectorXd policy;  // ascent direction, advantage (R_k - V_t) per step
  Eigen::VectorXd critic;  // descent direction of the value-head MSE
};

// REINFORCE with the per-step value estimate as baseline. The advantage is
// a constant with respect to theta in the policy term; the critic gradient
// covers the value-head slice only.
ActorCriticGrads actor_critic_gradient(const RecurrentPolicy& policy,
                                       const RolloutBatch& batch);

}  // namespace ncomp
