#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ncomp/config.hpp"
#include "ncomp/eval.hpp"
#include "ncomp/policy.hpp"

namespace ncomp {

// One rollout's row of the append-only iteration log. best_so_far is
// in-memory bookkeeping; the CSV carries the columns through `baseline`.
struct RolloutLog {
  int stage = 1;
  int iteration = 0;  // 1-based
  int rollout = 0;    // 0-based within the iteration
  double reward = 0;
  double accuracy = 0;
  double compression = 0;
  long long params = 0;
  Degeneracy degenerate = Degeneracy::Valid;
  double baseline = 0;     // value used in this iteration's gradient
  double best_so_far = -2; // -2 until a usable architecture appears
};

struct StageResult {
  bool found_valid = false;
  Architecture best_arch;
  double best_reward = -2;
  RecurrentPolicy policy;
  std::vector<RolloutLog> log;
};

// Raised when every rollout of 10 consecutive iterations was degenerate.
struct DegenerateRunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Seed discipline: cfg.seed is the master. Policy init uses
// derive_seed(seed, stage, 0xA11C), rollout sampling
// derive_seed(seed, stage, iteration, rollout), and student training seeds
// derive from the candidate architecture hash (see eval).

// N1 iterations of the layer-removal policy over the teacher. The best
// architecture is the highest-reward Valid rollout, additionally required
// to satisfy the constraints when any are configured.
StageResult run_stage1(const TeacherContext& ctx, const RunConfig& cfg,
                       const std::string& run_dir = "");

// N2 iterations of the layer-shrinkage policy over the stage-1 candidate.
// A candidate with no shrinkable variables is returned unchanged.
StageResult run_stage2(const Architecture& candidate, const TeacherContext& ctx,
                       const RunConfig& cfg, const std::string& run_dir = "");

// Loads a pretrained policy checkpoint and validates it against the stage:
// kind and input width must match.
RecurrentPolicy load_transfer_policy(const std::string& path, PolicyKind expected_kind);

struct FinalReport {
  long long params = 0;
  long long params_teacher = 0;
  double compression = 0;
  double accuracy = 0;
  double teacher_accuracy = 0;
  double delta_accuracy = 0;

  std::string to_text() const;
  static FinalReport from_text(const std::string& text);
};

// Retrains the winning architecture with the combined hard+distillation
// loss for the configured convergence budget and reports against the
// teacher.
FinalReport finalize_student(const Architecture& best_arch, const TeacherContext& ctx,
                             const RunConfig& cfg);

struct RunSummary {
  std::optional<StageResult> stage1;
  std::optional<StageResult> stage2;
  Architecture winner;
  double winner_reward = -2;
  FinalReport report;
};

// Full pipeline into a run directory: config snapshot, per-stage CSV logs,
// checkpoints, best-architecture files and the final report.
RunSummary run_compress(const TeacherContext& ctx, const RunConfig& cfg,
                        const std::string& run_dir);

void write_stage_csv(const std::string& path, const std::vector<RolloutLog>& rows);
std::vector<RolloutLog> read_stage_csv(const std::string& path);

// Per-rollout projection shaped for reward/accuracy/compression-vs-iteration
// plots; returns the written row count.
int export_plot_csv(const std::string& stage_csv, const std::string& out_csv);

}  // namespace ncomp
