#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ncomp/arch.hpp"
#include "ncomp/dataset.hpp"
#include "ncomp/optim.hpp"

namespace ncomp {

enum class LossMode { HardOnly, KDOnly, Combined };

struct LossSpec {
  LossMode mode = LossMode::HardOnly;
  double lambda = 0.5;  // KD weight in Combined mode
};

struct TrainOptions {
  int epochs = 5;
  int batch_size = 64;
  double lr = 1e-3;
  enum class Optimizer { Adam, Sgd } optimizer = Optimizer::Adam;
};

struct TrainDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A trainable realization of an Architecture: flat weight vector plus
// BatchNorm running statistics. Activations flow as (features, batch)
// column-major matrices; Linear layers consume their input flattened.
class TrainableNet {
 public:
  // He fan-in init for Conv2d/Linear, unit scale and zero shift for
  // BatchNorm; deterministic given the seed. Requires a Valid architecture.
  TrainableNet(const Architecture& arch, std::uint64_t seed,
               const DegeneracyLimits& limits = {});
  TrainableNet(const TrainableNet&);
  TrainableNet(TrainableNet&&) noexcept;
  TrainableNet& operator=(const TrainableNet&);
  TrainableNet& operator=(TrainableNet&&) noexcept;
  ~TrainableNet();

  const Architecture& arch() const { return arch_; }
  std::uint64_t seed() const { return seed_; }
  long long n_params() const { return theta_.size(); }
  Eigen::VectorXd& params() { return theta_; }
  const Eigen::VectorXd& params() const { return theta_; }

  // Un-normalized class scores, one row per sample. Uses BatchNorm running
  // statistics (inference mode).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs_nchw_rows) const;

  // Convenience: forward over dataset rows [begin, end).
  Eigen::MatrixXd forward(const Dataset& data, int begin, int end) const;

  // Mini-batch training; deterministic given the construction seed. Throws
  // TrainDivergence when the loss goes non-finite.
  void train(const Dataset& data, const LossSpec& loss, const TrainOptions& opt);

  // Fraction of argmax(logits) == label. Throws on an empty dataset.
  double evaluate_accuracy(const Dataset& data) const;

  // BatchNorm running statistics, one pair per BatchNorm layer in order.
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> batchnorm_stats() const;
  void set_batchnorm_stats(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>&);

  // Testing hooks: loss and gradient of one explicit batch (training-mode
  // BatchNorm, no parameter update).
  double batch_loss(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                    const Eigen::MatrixXd& z, const LossSpec& loss) const;
  Eigen::VectorXd batch_grad(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                             const Eigen::MatrixXd& z, const LossSpec& loss) const;

 private:
  struct LayerState;
  struct Cache;

  Eigen::MatrixXd forward_impl(const Eigen::MatrixXd& x0, bool training, Cache* cache) const;
  double loss_and_grad(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                       const Eigen::MatrixXd& z, const LossSpec& loss,
                       Eigen::VectorXd* grad) const;

  Architecture arch_;
  std::uint64_t seed_ = 0;
  std::vector<LayerState> layers_;
  Eigen::VectorXd theta_;
  // Running BatchNorm statistics, mutated by training-mode forwards.
  mutable std::vector<Eigen::VectorXd> bn_mean_, bn_var_;
};

// Mean squared distance between student and teacher logits:
// (1/N) sum_i ||logits_i - z_i||^2. Rows are samples.
double kd_loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& z);

// Mean cross-entropy of softmax(logits) against hard labels.
double cross_entropy_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

// cross_entropy + lambda * kd_loss.
double combined_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                     const Eigen::MatrixXd& z, double lambda);

}  // namespace ncomp
