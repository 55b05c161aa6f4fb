#include "ncomp/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ncomp {

BaselineState update_baseline(BaselineState state, double batch_mean_reward) {
  if (!state.initialized) {
    state.value = batch_mean_reward;
    state.initialized = true;
    return state;
  }
  state.value = state.decay * state.value + (1.0 - state.decay) * batch_mean_reward;
  return state;
}

AdamState AdamState::sized_like(const Eigen::VectorXd& theta, double lr_in) {
  AdamState st;
  st.first_moment = Eigen::VectorXd::Zero(theta.size());
  st.second_moment = Eigen::VectorXd::Zero(theta.size());
  st.lr = lr_in;
  return st;
}

void adam_step(AdamState& state, Eigen::VectorXd& theta, const Eigen::VectorXd& gradient) {
  if (theta.size() != gradient.size() || theta.size() != state.first_moment.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state size mismatch");
  if (!gradient.allFinite()) throw std::runtime_error("adam_step: non-finite gradient");

  state.step_count += 1;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * gradient;
  state.second_moment = state.beta2 * state.second_moment +
                        (1.0 - state.beta2) * gradient.cwiseProduct(gradient);
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  const Eigen::VectorXd m_hat = state.first_moment / bc1;
  const Eigen::VectorXd v_hat = state.second_moment / bc2;
  theta += state.lr *
           m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + state.eps_hat).matrix());
}

namespace {

void check_batch(const RolloutBatch& batch) {
  if (batch.trajectories.empty()) throw std::invalid_argument("empty rollout batch");
  if (batch.trajectories.size() != batch.rewards.size())
    throw std::invalid_argument("rollout batch has " +
                                std::to_string(batch.trajectories.size()) +
                                " trajectories but " + std::to_string(batch.rewards.size()) +
                                " rewards");
}

}  // namespace

Eigen::VectorXd reinforce_gradient(const RecurrentPolicy& policy, const RolloutBatch& batch,
                                   const BaselineState& baseline) {
  check_batch(batch);
  if (!baseline.initialized)
    throw std::logic_error("reinforce_gradient: baseline not initialized");

  const double m = static_cast<double>(batch.trajectories.size());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.n_params());
  for (std::size_t k = 0; k < batch.trajectories.size(); ++k) {
    const Trajectory& traj = batch.trajectories[k];
    const double advantage = batch.rewards[k] - baseline.value;
    const std::vector<double> weights(traj.actions.size(), advantage / m);
    grad += log_prob_grad(policy, batch.inputs, traj.actions, weights,
                          {traj.forced.data(), traj.forced.size()});
  }
  if (!grad.allFinite()) throw std::runtime_error("reinforce_gradient: non-finite gradient");
  return grad;
}

ActorCriticGrads actor_critic_gradient(const RecurrentPolicy& policy,
                                       const RolloutBatch& batch) {
  check_batch(batch);
  if (!policy.has_value_head())
    throw std::logic_error("actor_critic_gradient: policy has no value head");

  const double m = static_cast<double>(batch.trajectories.size());
  ActorCriticGrads out;
  out.policy = Eigen::VectorXd::Zero(policy.n_params());
  out.critic = Eigen::VectorXd::Zero(policy.n_params());

  for (std::size_t k = 0; k < batch.trajectories.size(); ++k) {
    const Trajectory& traj = batch.trajectories[k];
    const int T = static_cast<int>(traj.actions.size());
    if (T == 0) continue;
    const std::vector<double> values = value_of(policy, traj.hidden_states);

    std::vector<double> adv(T), dv(T);
    for (int t = 0; t < T; ++t) {
      adv[t] = (batch.rewards[k] - values[t]) / m;
      // d/dV of (1/(mT)) sum (V - R)^2
      dv[t] = 2.0 * (values[t] - batch.rewards[k]) / (m * T);
    }
    out.policy += log_prob_grad(policy, batch.inputs, traj.actions, adv,
                                {traj.forced.data(), traj.forced.size()});
    out.critic += value_grad(policy, traj.hidden_states, dv);
  }
  if (!out.policy.allFinite() || !out.critic.allFinite())
    throw std::runtime_error("actor_critic_gradient: non-finite gradient");
  return out;
}

}  // namespace ncomp
