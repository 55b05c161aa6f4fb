#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ncomp/dataset.hpp"
#include "ncomp/reward.hpp"

namespace ncomp {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConstraintParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Where candidate-evaluation data comes from.
struct DataConfig {
  enum class Source { Synthetic, Idx } source = Source::Synthetic;
  SyntheticSpec synth;
  std::string images, labels;
  int train_limit = -1;
  double val_fraction = 0.1;
  std::uint64_t split_seed = 9001;
  bool operator==(const DataConfig&) const = default;
};

struct RunConfig {
  // [run]
  int n1 = 100;
  int n2 = 100;
  int rollouts = 5;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string stage = "both";  // "1", "2", or "both"
  bool surrogate = false;
  bool actor_critic = false;
  int checkpoint_every = 10;
  std::string transfer_checkpoint;

  // [policy]
  double lr_remove = 0.003;
  double lr_shrink = 0.01;
  double baseline_beta = 0.9;

  // [train]
  int eval_epochs = 5;
  int teacher_epochs = 10;
  int final_epochs = 20;
  int batch_size = 64;
  double train_lr = 1e-3;
  double kd_lambda = 0.5;
  long long max_flatten = 16384;

  // [reward]; t_anneal = 0 means half the stage's iteration count
  ConstraintMode constraint_mode = ConstraintMode::None;
  int t_anneal = 0;
  std::vector<ConstraintRow> constraints;

  // [surrogate]
  double surrogate_a_teacher = 0.99;
  double surrogate_alpha = 0.3;
  double surrogate_beta = 0.4;

  // [data]
  DataConfig data;

  bool operator==(const RunConfig&) const = default;
};

// Flat key-value text with [section] headers; unknown keys are errors.
// parse(serialize(cfg)) == cfg.
std::string serialize_config(const RunConfig& cfg);
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& cfg);

// "params<=20000" (whitespace tolerated) -> single-variable row over
// #params(student). Throws ConstraintParseError otherwise.
ConstraintRow parse_constraint_expr(const std::string& expr);

}  // namespace ncomp
