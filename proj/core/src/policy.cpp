#include "ncomp/policy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ncomp/rng.hpp"

namespace ncomp {

std::string_view to_string(PolicyKind k) {
  return k == PolicyKind::Removal ? "removal" : "shrink";
}

int shrink_factor_to_level(double factor) {
  for (int level = 0; level < kShrinkLevels; ++level)
    if (std::abs(shrink_level_to_factor(level) - factor) < 1e-9) return level;
  throw std::invalid_argument("shrink factor not on the 0.1..1.0 grid: " +
                              std::to_string(factor));
}

RemovalMask Trajectory::removal_mask() const {
  RemovalMask m;
  m.keep.reserve(actions.size());
  for (int a : actions) m.keep.push_back(a ? 1 : 0);
  return m;
}

ShrinkVector Trajectory::shrink_vector() const {
  ShrinkVector v;
  v.factors.reserve(actions.size());
  for (int a : actions) v.factors.push_back(shrink_level_to_factor(a));
  return v;
}

double Trajectory::total_log_prob() const {
  double s = 0;
  for (double lp : log_probs) s += lp;
  return s;
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

using Eigen::MatrixXd;
using Eigen::VectorXd;

}  // namespace

// ---------------------------------------------------------------------------
// Parameter layout and recurrence internals
// ---------------------------------------------------------------------------

struct PolicyOps {
  struct LayerDir {
    int w = 0, u = 0, b = 0;  // offsets into the flat vector
    int in = 0;               // input width of this layer
  };
  struct Layout {
    std::vector<LayerDir> ld;  // layer-major, direction-minor
    int head_w = 0, head_b = 0;
    int value_w = -1, value_b = -1;
    int total = 0;
    int hidden = 0, n_dirs = 1, n_actions = 1, input = 0, n_layers = 0;
  };

  static Layout layout_of(const RecurrentPolicy& p) {
    Layout lay;
    lay.hidden = p.hidden_size_;
    lay.n_dirs = p.bidirectional() ? 2 : 1;
    lay.n_actions = p.n_actions();
    lay.input = p.input_size_;
    lay.n_layers = p.n_layers_;
    const int H = lay.hidden;
    int off = 0;
    for (int l = 0; l < lay.n_layers; ++l) {
      const int in = l == 0 ? lay.input : H * lay.n_dirs;
      for (int d = 0; d < lay.n_dirs; ++d) {
        LayerDir ld;
        ld.in = in;
        ld.w = off;
        off += 4 * H * in;
        ld.u = off;
        off += 4 * H * H;
        ld.b = off;
        off += 4 * H;
        lay.ld.push_back(ld);
      }
    }
    const int state = H * lay.n_dirs;
    lay.head_w = off;
    off += lay.n_actions * state;
    lay.head_b = off;
    off += lay.n_actions;
    if (p.has_value_head_) {
      lay.value_w = off;
      off += state;
      lay.value_b = off;
      off += 1;
    }
    lay.total = off;
    return lay;
  }

  struct DirCache {
    MatrixXd x;      // (in, T)
    MatrixXd h, c;   // (H, T)
    MatrixXd gates;  // (4H, T), [i; f; g; o] after the nonlinearities
    bool reversed = false;
  };

  struct ForwardCache {
    std::vector<DirCache> dirs;  // layer-major, direction-minor
    MatrixXd top;                // (state, T)
    MatrixXd logits;             // (n_actions, T)
  };

  static DirCache run_dir(const double* theta, const LayerDir& ld, int H,
                          const MatrixXd& x, bool reversed) {
    const Eigen::Map<const MatrixXd> W(theta + ld.w, 4 * H, ld.in);
    const Eigen::Map<const MatrixXd> U(theta + ld.u, 4 * H, H);
    const Eigen::Map<const VectorXd> b(theta + ld.b, 4 * H);
    const int T = static_cast<int>(x.cols());

    DirCache dc;
    dc.x = x;
    dc.reversed = reversed;
    dc.h = MatrixXd::Zero(H, T);
    dc.c = MatrixXd::Zero(H, T);
    dc.gates = MatrixXd::Zero(4 * H, T);

    VectorXd h_prev = VectorXd::Zero(H), c_prev = VectorXd::Zero(H);
    for (int pos = 0; pos < T; ++pos) {
      const int t = reversed ? T - 1 - pos : pos;
      VectorXd z = W * x.col(t) + U * h_prev + b;
      for (int j = 0; j < H; ++j) {
        z(j) = sigmoid(z(j));                    // input gate
        z(H + j) = sigmoid(z(H + j));            // forget gate
        z(2 * H + j) = std::tanh(z(2 * H + j));  // candidate
        z(3 * H + j) = sigmoid(z(3 * H + j));    // output gate
      }
      VectorXd c = z.segment(H, H).cwiseProduct(c_prev) +
                   z.head(H).cwiseProduct(z.segment(2 * H, H));
      VectorXd h = z.tail(H).cwiseProduct(c.array().tanh().matrix());
      dc.gates.col(t) = z;
      dc.c.col(t) = c;
      dc.h.col(t) = h;
      h_prev = h;
      c_prev = c;
    }
    return dc;
  }

  // Accumulates parameter gradients for one direction and returns the
  // gradient with respect to this direction's input sequence.
  static MatrixXd bptt_dir(const double* theta, double* grad, const LayerDir& ld, int H,
                           const DirCache& dc, const MatrixXd& dh_ext) {
    const Eigen::Map<const MatrixXd> W(theta + ld.w, 4 * H, ld.in);
    const Eigen::Map<const MatrixXd> U(theta + ld.u, 4 * H, H);
    Eigen::Map<MatrixXd> gW(grad + ld.w, 4 * H, ld.in);
    Eigen::Map<MatrixXd> gU(grad + ld.u, 4 * H, H);
    Eigen::Map<VectorXd> gb(grad + ld.b, 4 * H);

    const int T = static_cast<int>(dc.x.cols());
    MatrixXd dx = MatrixXd::Zero(ld.in, T);
    VectorXd dh_rec = VectorXd::Zero(H), dc_rec = VectorXd::Zero(H);

    for (int pos = T - 1; pos >= 0; --pos) {
      const int t = dc.reversed ? T - 1 - pos : pos;
      const int prev_t = pos > 0 ? (dc.reversed ? t + 1 : t - 1) : -1;

      const auto gate_i = dc.gates.col(t).head(H);
      const auto gate_f = dc.gates.col(t).segment(H, H);
      const auto gate_g = dc.gates.col(t).segment(2 * H, H);
      const auto gate_o = dc.gates.col(t).tail(H);
      const VectorXd tc = dc.c.col(t).array().tanh().matrix();

      const VectorXd dh = dh_ext.col(t) + dh_rec;
      const VectorXd d_o = dh.cwiseProduct(tc);
      const VectorXd dcv =
          dc_rec + dh.cwiseProduct(gate_o).cwiseProduct(
                       (1.0 - tc.array().square()).matrix());

      const VectorXd c_prev = prev_t >= 0 ? VectorXd(dc.c.col(prev_t)) : VectorXd::Zero(H);
      const VectorXd h_prev = prev_t >= 0 ? VectorXd(dc.h.col(prev_t)) : VectorXd::Zero(H);

      VectorXd dz(4 * H);
      dz.head(H) = dcv.cwiseProduct(gate_g)
                       .cwiseProduct(gate_i)
                       .cwiseProduct((1.0 - gate_i.array()).matrix());
      dz.segment(H, H) = dcv.cwiseProduct(c_prev)
                             .cwiseProduct(gate_f)
                             .cwiseProduct((1.0 - gate_f.array()).matrix());
      dz.segment(2 * H, H) =
          dcv.cwiseProduct(gate_i).cwiseProduct((1.0 - gate_g.array().square()).matrix());
      dz.tail(H) =
          d_o.cwiseProduct(gate_o).cwiseProduct((1.0 - gate_o.array()).matrix());

      gW.noalias() += dz * dc.x.col(t).transpose();
      gU.noalias() += dz * h_prev.transpose();
      gb += dz;
      dx.col(t) = W.transpose() * dz;
      dh_rec = U.transpose() * dz;
      dc_rec = dcv.cwiseProduct(gate_f);
    }
    return dx;
  }

  static ForwardCache forward_seq(const RecurrentPolicy& p, const MatrixXd& x0) {
    const Layout lay = layout_of(p);
    const double* theta = p.theta_.data();
    const int H = lay.hidden;
    ForwardCache fc;
    MatrixXd cur = x0;
    for (int l = 0; l < lay.n_layers; ++l) {
      DirCache fwd = run_dir(theta, lay.ld[l * lay.n_dirs], H, cur, false);
      if (lay.n_dirs == 2) {
        DirCache bwd = run_dir(theta, lay.ld[l * lay.n_dirs + 1], H, cur, true);
        MatrixXd next(2 * H, cur.cols());
        next.topRows(H) = fwd.h;
        next.bottomRows(H) = bwd.h;
        fc.dirs.push_back(std::move(fwd));
        fc.dirs.push_back(std::move(bwd));
        cur = std::move(next);
      } else {
        cur = fwd.h;
        fc.dirs.push_back(std::move(fwd));
      }
    }
    fc.top = cur;
    const Eigen::Map<const MatrixXd> Wh(theta + lay.head_w, lay.n_actions, H * lay.n_dirs);
    const Eigen::Map<const VectorXd> bh(theta + lay.head_b, lay.n_actions);
    fc.logits = (Wh * fc.top).colwise() + bh;
    return fc;
  }

  // Backpropagates d(objective)/d(logits) through the head and the stack.
  static VectorXd backward_seq(const RecurrentPolicy& p, const ForwardCache& fc,
                               const MatrixXd& dlogits) {
    const Layout lay = layout_of(p);
    const double* theta = p.theta_.data();
    const int H = lay.hidden;
    const int T = static_cast<int>(fc.top.cols());

    VectorXd grad = VectorXd::Zero(lay.total);
    double* g = grad.data();

    const Eigen::Map<const MatrixXd> Wh(theta + lay.head_w, lay.n_actions, H * lay.n_dirs);
    Eigen::Map<MatrixXd> gWh(g + lay.head_w, lay.n_actions, H * lay.n_dirs);
    Eigen::Map<VectorXd> gbh(g + lay.head_b, lay.n_actions);
    gWh.noalias() += dlogits * fc.top.transpose();
    gbh += dlogits.rowwise().sum();

    MatrixXd dcur = Wh.transpose() * dlogits;  // (state, T)
    for (int l = lay.n_layers - 1; l >= 0; --l) {
      if (lay.n_dirs == 2) {
        const MatrixXd dx_f = bptt_dir(theta, g, lay.ld[l * 2], H, fc.dirs[l * 2],
                                       dcur.topRows(H));
        const MatrixXd dx_b = bptt_dir(theta, g, lay.ld[l * 2 + 1], H, fc.dirs[l * 2 + 1],
                                       dcur.bottomRows(H));
        dcur = dx_f + dx_b;
      } else {
        dcur = bptt_dir(theta, g, lay.ld[l], H, fc.dirs[l], dcur);
      }
      (void)T;
    }
    return grad;
  }
};

// ---------------------------------------------------------------------------
// Policy construction
// ---------------------------------------------------------------------------

RecurrentPolicy::RecurrentPolicy(PolicyKind kind, int input_size, int hidden_size,
                                 int n_layers, bool value_head, std::uint64_t init_seed)
    : kind_(kind),
      input_size_(input_size),
      hidden_size_(hidden_size),
      n_layers_(n_layers),
      has_value_head_(value_head) {
  if (input_size < 1 || hidden_size < 1 || n_layers < 1)
    throw std::invalid_argument("policy dimensions must be positive");
  const PolicyOps::Layout lay = PolicyOps::layout_of(*this);
  theta_.resize(lay.total);
  Rng rng(init_seed);
  for (int i = 0; i < lay.total; ++i) theta_(i) = rng.uniform(-0.08, 0.08);
  // Forget-gate bias starts at 1 so early memories survive.
  for (const auto& ld : lay.ld)
    for (int j = 0; j < hidden_size_; ++j) theta_(ld.b + hidden_size_ + j) = 1.0;
}

std::pair<int, int> RecurrentPolicy::value_head_span() const {
  if (!has_value_head_) throw std::logic_error("policy has no value head");
  const PolicyOps::Layout lay = PolicyOps::layout_of(*this);
  return {lay.value_w, state_size() + 1};
}

RecurrentPolicy make_removal_policy(std::uint64_t seed, bool value_head) {
  return RecurrentPolicy(PolicyKind::Removal, kRemovalInputSize, 30, 2, value_head, seed);
}

RecurrentPolicy make_shrink_policy(std::uint64_t seed, bool value_head) {
  return RecurrentPolicy(PolicyKind::Shrink, kShrinkInputSize, 50, 2, value_head, seed);
}

// ---------------------------------------------------------------------------
// Policy inputs
// ---------------------------------------------------------------------------

static Eigen::VectorXd feature_column(const LayerFeature& f) {
  Eigen::VectorXd col = Eigen::VectorXd::Zero(kRemovalInputSize);
  col(f.type_code) = 1.0;
  col(kLayerTypeCount + 0) = f.kernel;
  col(kLayerTypeCount + 1) = f.stride;
  col(kLayerTypeCount + 2) = f.padding;
  col(kLayerTypeCount + 3) = f.n_out;
  col(kLayerTypeCount + 4) = f.skip_start;
  col(kLayerTypeCount + 5) = f.skip_end;
  return col;
}

Eigen::MatrixXd policy_inputs(std::span<const LayerFeature> features) {
  MatrixXd x(kRemovalInputSize, features.size());
  for (std::size_t i = 0; i < features.size(); ++i) x.col(i) = feature_column(features[i]);
  return x;
}

Eigen::MatrixXd shrink_policy_inputs(std::span<const LayerFeature> layer_features,
                                     std::span<const ShrinkVar> vars) {
  MatrixXd x(kRemovalInputSize, vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const int layer = vars[i].layer;
    if (layer < 0 || layer >= static_cast<int>(layer_features.size()))
      throw std::invalid_argument("shrink variable references a missing layer");
    x.col(i) = feature_column(layer_features[layer]);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Sampling and evaluation
// ---------------------------------------------------------------------------

namespace {

void check_kind(const RecurrentPolicy& p, PolicyKind want) {
  if (p.kind() != want)
    throw std::invalid_argument(std::string("expected a ") + std::string(to_string(want)) +
                                " policy");
}

void check_rows(const RecurrentPolicy& p, const MatrixXd& inputs) {
  const int want = p.kind() == PolicyKind::Shrink ? p.input_size() - 1 : p.input_size();
  if (static_cast<int>(inputs.rows()) != want)
    throw std::invalid_argument("policy inputs have " + std::to_string(inputs.rows()) +
                                " rows, expected " + std::to_string(want));
}

// Base-12 inputs plus the previous-action row, given the whole action vector.
MatrixXd shrink_x0(const MatrixXd& inputs, const std::vector<int>& actions) {
  MatrixXd x0(inputs.rows() + 1, inputs.cols());
  x0.topRows(inputs.rows()) = inputs;
  for (int t = 0; t < static_cast<int>(inputs.cols()); ++t)
    x0(inputs.rows(), t) = t == 0 ? 1.0 : shrink_level_to_factor(actions[t - 1]);
  return x0;
}

double bernoulli_log_prob(double logit, int action) {
  const double lp = action ? -softplus(-logit) : -softplus(logit);
  return std::max(lp, kLogProbFloor);
}

VectorXd softmax_of(const VectorXd& logits) {
  const double mx = logits.maxCoeff();
  VectorXd e = (logits.array() - mx).exp();
  return e / e.sum();
}

double categorical_log_prob(const VectorXd& logits, int action) {
  const double mx = logits.maxCoeff();
  const double lse = std::log((logits.array() - mx).exp().sum()) + mx;
  return std::max(logits(action) - lse, kLogProbFloor);
}

}  // namespace

Trajectory sample_removal(const RecurrentPolicy& policy, const Eigen::MatrixXd& inputs,
                          std::uint64_t rng_seed, std::span<const int> forced_keep) {
  check_kind(policy, PolicyKind::Removal);
  check_rows(policy, inputs);
  const int T = static_cast<int>(inputs.cols());

  const auto fc = PolicyOps::forward_seq(policy, inputs);
  Trajectory traj;
  traj.actions.resize(T);
  traj.log_probs.resize(T);
  traj.forced.assign(T, 0);
  traj.hidden_states = fc.top;

  for (int idx : forced_keep) {
    if (idx < 0 || idx >= T) throw std::invalid_argument("forced keep index out of range");
    traj.forced[idx] = 1;
  }

  Rng rng(rng_seed);
  for (int t = 0; t < T; ++t) {
    const double p = sigmoid(fc.logits(0, t));
    if (traj.forced[t]) {
      traj.actions[t] = 1;
      traj.log_probs[t] = 0.0;
      continue;
    }
    const int a = rng.bernoulli(p) ? 1 : 0;
    traj.actions[t] = a;
    traj.log_probs[t] = bernoulli_log_prob(fc.logits(0, t), a);
    const double q = 1.0 - p;
    if (p > 0 && q > 0) traj.entropy += -p * std::log(p) - q * std::log(q);
  }
  return traj;
}

Trajectory sample_shrink(const RecurrentPolicy& policy, const Eigen::MatrixXd& inputs,
                         std::uint64_t rng_seed) {
  check_kind(policy, PolicyKind::Shrink);
  check_rows(policy, inputs);
  const PolicyOps::Layout lay = PolicyOps::layout_of(policy);
  const int H = lay.hidden;
  const int T = static_cast<int>(inputs.cols());
  const double* theta = policy.params().data();

  Trajectory traj;
  traj.hidden_states = MatrixXd::Zero(H, T);
  if (T == 0) return traj;
  traj.actions.resize(T);
  traj.log_probs.resize(T);
  traj.forced.assign(T, 0);

  std::vector<VectorXd> h(lay.n_layers, VectorXd::Zero(H));
  std::vector<VectorXd> c(lay.n_layers, VectorXd::Zero(H));
  const Eigen::Map<const MatrixXd> Wh(theta + lay.head_w, lay.n_actions, H);
  const Eigen::Map<const VectorXd> bh(theta + lay.head_b, lay.n_actions);

  Rng rng(rng_seed);
  double a_prev = 1.0;
  for (int t = 0; t < T; ++t) {
    VectorXd x(policy.input_size());
    x.head(inputs.rows()) = inputs.col(t);
    x(inputs.rows()) = a_prev;
    for (int l = 0; l < lay.n_layers; ++l) {
      const auto& ld = lay.ld[l];
      const Eigen::Map<const MatrixXd> W(theta + ld.w, 4 * H, ld.in);
      const Eigen::Map<const MatrixXd> U(theta + ld.u, 4 * H, H);
      const Eigen::Map<const VectorXd> b(theta + ld.b, 4 * H);
      VectorXd z = W * x + U * h[l] + b;
      for (int j = 0; j < H; ++j) {
        z(j) = sigmoid(z(j));
        z(H + j) = sigmoid(z(H + j));
        z(2 * H + j) = std::tanh(z(2 * H + j));
        z(3 * H + j) = sigmoid(z(3 * H + j));
      }
      c[l] = z.segment(H, H).cwiseProduct(c[l]) + z.head(H).cwiseProduct(z.segment(2 * H, H));
      h[l] = z.tail(H).cwiseProduct(c[l].array().tanh().matrix());
      x = h[l];
    }
    traj.hidden_states.col(t) = h[lay.n_layers - 1];
    const VectorXd logits = Wh * h[lay.n_layers - 1] + bh;
    const VectorXd probs = softmax_of(logits);
    const int a = rng.categorical({probs.data(), static_cast<std::size_t>(probs.size())});
    traj.actions[t] = a;
    traj.log_probs[t] = categorical_log_prob(logits, a);
    for (int j = 0; j < lay.n_actions; ++j)
      if (probs(j) > 0) traj.entropy -= probs(j) * std::log(probs(j));
    a_prev = shrink_level_to_factor(a);
  }
  return traj;
}

std::vector<double> log_prob_of(const RecurrentPolicy& policy, const Eigen::MatrixXd& inputs,
                                const std::vector<int>& actions,
                                std::span<const std::uint8_t> forced) {
  check_rows(policy, inputs);
  const int T = static_cast<int>(inputs.cols());
  if (static_cast<int>(actions.size()) != T)
    throw std::invalid_argument("action count does not match trajectory length");
  if (!forced.empty() && static_cast<int>(forced.size()) != T)
    throw std::invalid_argument("forced mask length does not match trajectory length");

  const MatrixXd x0 =
      policy.kind() == PolicyKind::Shrink ? shrink_x0(inputs, actions) : inputs;
  const auto fc = PolicyOps::forward_seq(policy, x0);

  std::vector<double> lps(T);
  for (int t = 0; t < T; ++t) {
    if (!forced.empty() && forced[t]) {
      lps[t] = 0.0;
      continue;
    }
    lps[t] = policy.kind() == PolicyKind::Removal
                 ? bernoulli_log_prob(fc.logits(0, t), actions[t])
                 : categorical_log_prob(fc.logits.col(t), actions[t]);
  }
  return lps;
}

Eigen::VectorXd log_prob_grad(const RecurrentPolicy& policy, const Eigen::MatrixXd& inputs,
                              const std::vector<int>& actions,
                              const std::vector<double>& step_weights,
                              std::span<const std::uint8_t> forced) {
  check_rows(policy, inputs);
  const int T = static_cast<int>(inputs.cols());
  if (static_cast<int>(actions.size()) != T || static_cast<int>(step_weights.size()) != T)
    throw std::invalid_argument("actions/weights do not match trajectory length");
  if (T == 0) return VectorXd::Zero(policy.n_params());

  const MatrixXd x0 =
      policy.kind() == PolicyKind::Shrink ? shrink_x0(inputs, actions) : inputs;
  const auto fc = PolicyOps::forward_seq(policy, x0);

  MatrixXd dlogits = MatrixXd::Zero(fc.logits.rows(), T);
  for (int t = 0; t < T; ++t) {
    if (!forced.empty() && forced[t]) continue;
    if (policy.kind() == PolicyKind::Removal) {
      const double p = sigmoid(fc.logits(0, t));
      dlogits(0, t) = step_weights[t] * (actions[t] - p);
    } else {
      VectorXd sm = softmax_of(fc.logits.col(t));
      sm = -sm;
      sm(actions[t]) += 1.0;
      dlogits.col(t) = step_weights[t] * sm;
    }
  }
  return PolicyOps::backward_seq(policy, fc, dlogits);
}

std::vector<double> value_of(const RecurrentPolicy& policy,
                             const Eigen::MatrixXd& hidden_states) {
  if (!policy.has_value_head()) throw std::logic_error("policy has no value head");
  if (static_cast<int>(hidden_states.rows()) != policy.state_size())
    throw std::invalid_argument("hidden-state rows do not match the policy state size");
  const auto [off, len] = policy.value_head_span();
  const Eigen::Map<const VectorXd> wv(policy.params().data() + off, len - 1);
  const double bv = policy.params()(off + len - 1);
  std::vector<double> out(hidden_states.cols());
  for (int t = 0; t < static_cast<int>(hidden_states.cols()); ++t)
    out[t] = wv.dot(hidden_states.col(t)) + bv;
  return out;
}

Eigen::VectorXd value_grad(const RecurrentPolicy& policy, const Eigen::MatrixXd& hidden_states,
                           const std::vector<double>& step_weights) {
  if (!policy.has_value_head()) throw std::logic_error("policy has no value head");
  if (static_cast<int>(step_weights.size()) != hidden_states.cols())
    throw std::invalid_argument("weights do not match hidden-state count");
  VectorXd grad = VectorXd::Zero(policy.n_params());
  const auto [off, len] = policy.value_head_span();
  for (int t = 0; t < static_cast<int>(hidden_states.cols()); ++t) {
    grad.segment(off, len - 1) += step_weights[t] * hidden_states.col(t);
    grad(off + len - 1) += step_weights[t];
  }
  return grad;
}

Eigen::VectorXd removal_keep_probs(const RecurrentPolicy& policy,
                                   const Eigen::MatrixXd& inputs) {
  check_kind(policy, PolicyKind::Removal);
  check_rows(policy, inputs);
  const auto fc = PolicyOps::forward_seq(policy, inputs);
  VectorXd p(inputs.cols());
  for (int t = 0; t < static_cast<int>(inputs.cols()); ++t) p(t) = sigmoid(fc.logits(0, t));
  return p;
}

Eigen::MatrixXd shrink_action_probs(const RecurrentPolicy& policy,
                                    const Eigen::MatrixXd& inputs,
                                    const std::vector<int>& actions) {
  check_kind(policy, PolicyKind::Shrink);
  check_rows(policy, inputs);
  if (static_cast<int>(actions.size()) != inputs.cols())
    throw std::invalid_argument("need one (teacher-forced) action per step");
  const auto fc = PolicyOps::forward_seq(policy, shrink_x0(inputs, actions));
  MatrixXd probs(kShrinkLevels, inputs.cols());
  for (int t = 0; t < static_cast<int>(inputs.cols()); ++t)
    probs.col(t) = softmax_of(fc.logits.col(t));
  return probs;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

std::string serialize_policy(const RecurrentPolicy& policy) {
  std::ostringstream out;
  out << "ncomp-policy v1\n";
  out << "kind " << to_string(policy.kind()) << '\n';
  out << "input " << policy.input_size() << '\n';
  out << "hidden " << policy.hidden_size() << '\n';
  out << "layers " << policy.n_layers() << '\n';
  out << "value_head " << (policy.has_value_head() ? 1 : 0) << '\n';
  out << "params " << policy.n_params() << '\n';
  char buf[40];
  for (int i = 0; i < policy.n_params(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", policy.params()(i));
    out << buf << '\n';
  }
  return out.str();
}

RecurrentPolicy parse_policy(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "ncomp-policy v1")
    throw std::runtime_error("bad policy checkpoint header");

  std::string kind_name;
  int input = 0, hidden = 0, layers = 0, value_head = 0;
  long long n_params = -1;
  auto expect = [&](const char* tag) {
    if (!std::getline(in, line)) throw std::runtime_error("truncated policy checkpoint");
    std::istringstream ls(line);
    std::string got;
    ls >> got;
    if (got != tag)
      throw std::runtime_error(std::string("policy checkpoint: expected '") + tag +
                               "', got '" + got + "'");
    return ls;
  };
  { auto ls = expect("kind"); ls >> kind_name; }
  { auto ls = expect("input"); ls >> input; }
  { auto ls = expect("hidden"); ls >> hidden; }
  { auto ls = expect("layers"); ls >> layers; }
  { auto ls = expect("value_head"); ls >> value_head; }
  { auto ls = expect("params"); ls >> n_params; }

  PolicyKind kind;
  if (kind_name == "removal") kind = PolicyKind::Removal;
  else if (kind_name == "shrink") kind = PolicyKind::Shrink;
  else throw std::runtime_error("unknown policy kind '" + kind_name + "'");

  RecurrentPolicy policy(kind, input, hidden, layers, value_head != 0, 0);
  if (n_params != policy.n_params())
    throw std::runtime_error("policy checkpoint parameter count mismatch");
  for (int i = 0; i < policy.n_params(); ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("truncated policy weights");
    policy.params()(i) = std::strtod(line.c_str(), nullptr);
  }
  return policy;
}

void save_policy(const std::string& path, const RecurrentPolicy& policy) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write policy checkpoint: " + path);
  f << serialize_policy(policy);
}

RecurrentPolicy load_policy(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open policy checkpoint: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_policy(buf.str());
}

}  // namespace ncomp
