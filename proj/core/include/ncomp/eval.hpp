#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "ncomp/arch.hpp"
#include "ncomp/dataset.hpp"
#include "ncomp/net.hpp"
#include "ncomp/reward.hpp"

namespace ncomp {

// Analytic accuracy proxy for exercising the RL machinery without training.
// accuracy = a_teacher * (1 - alpha*depth_deficit - beta*width_deficit),
// clamped to [0,1]; depth_deficit is the fraction of removed weight-bearing
// layers, width_deficit the fraction of removed output-unit mass. Both only
// grow under removal/shrinkage, so the proxy is monotone by construction.
struct SurrogateModel {
  double a_teacher = 0.99;
  double alpha = 0.3;
  double beta = 0.4;
  int teacher_weight_layers = 0;
  double teacher_nout_mass = 0;

  double accuracy_of(const Architecture& arch) const;
};

SurrogateModel make_surrogate(const Architecture& teacher, double a_teacher,
                              double alpha = 0.3, double beta = 0.4);

struct EvalCounters {
  std::atomic<long long> trained{0};
  std::atomic<long long> degenerate{0};
  std::atomic<long long> cache_hits{0};
};

struct EvalReport {
  RewardRecord record;
  long long params = 0;
  double wall_seconds = 0;
};

struct EvalOptions {
  int eval_epochs = 5;
  int batch_size = 64;
  double lr = 1e-3;
  DegeneracyLimits limits;
};

// Everything a candidate evaluation needs about the teacher. Distillation
// contexts carry the trained teacher and datasets; surrogate contexts only
// the proxy. Shared read-only across rollout workers; the reward cache and
// counters are internally synchronized.
class TeacherContext {
 public:
  Architecture arch;
  long long params = 0;
  double a_teacher = 0;
  std::uint64_t seed = 0;
  FeatureScale scale;
  EvalOptions opts;

  std::shared_ptr<const Dataset> train_data;  // carries cached teacher logits
  std::shared_ptr<const Dataset> val_data;
  std::shared_ptr<const TrainableNet> net;
  std::optional<SurrogateModel> surrogate;

  // Descriptor lines recorded in meta.txt so a context reloads with the
  // exact same data.
  SyntheticSpec synth_spec;
  bool data_is_synthetic = true;
  std::string idx_images, idx_labels;
  int train_limit = -1;
  double val_fraction = 0.1;
  std::uint64_t split_seed = 9001;

  bool can_distill() const { return net && train_data && val_data; }

  const EvalCounters& counters() const { return counters_; }
  void reset_counters();

 private:
  friend EvalReport evaluate_candidate(const Architecture&, const TeacherContext&,
                                       const RewardConfig&, int);
  friend EvalReport surrogate_evaluate(const Architecture&, const TeacherContext&,
                                       const RewardConfig&, int);
  struct CachedEval {
    double accuracy = 0;
    long long params = 0;
    Degeneracy degenerate = Degeneracy::Valid;
  };
  mutable std::mutex cache_mu_;
  mutable std::unordered_map<std::uint64_t, CachedEval> cache_;
  mutable EvalCounters counters_;
};

// Trains the teacher on hard labels, measures a_teacher on the validation
// split, and caches its logits over the training split for distillation.
std::shared_ptr<TeacherContext> train_teacher(const Architecture& arch, const Dataset& data,
                                              int epochs, std::uint64_t seed,
                                              const EvalOptions& opts = {},
                                              double val_fraction = 0.1,
                                              std::uint64_t split_seed = 9001);

// Surrogate-only context: no training assets required.
std::shared_ptr<TeacherContext> make_surrogate_context(const Architecture& teacher,
                                                       double a_teacher, double alpha,
                                                       double beta, std::uint64_t seed,
                                                       const EvalOptions& opts = {});

// Degeneracy gate first (fixed reward -1, no training); then KD-train the
// student for eval_epochs on the cached teacher logits and score it.
// Deterministic per candidate: the student seed derives from the
// architecture hash, which also keys the reward cache.
EvalReport evaluate_candidate(const Architecture& candidate, const TeacherContext& ctx,
                              const RewardConfig& cfg, int iteration);

// Same reward pipeline with the proxy accuracy; near-zero cost.
EvalReport surrogate_evaluate(const Architecture& candidate, const TeacherContext& ctx,
                              const RewardConfig& cfg, int iteration);

// Dispatches on ctx.surrogate.
EvalReport evaluate(const Architecture& candidate, const TeacherContext& ctx,
                    const RewardConfig& cfg, int iteration);

// Directory layout: teacher.arch, weights.nct, logits.nct, meta.txt.
void save_teacher_context(const std::string& dir, const TeacherContext& ctx);
std::shared_ptr<TeacherContext> load_teacher_context(const std::string& dir);

}  // namespace ncomp
