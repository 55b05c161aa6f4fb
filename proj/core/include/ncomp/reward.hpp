#pragma once

#include <vector>

#include "ncomp/arch.hpp"

namespace ncomp {

enum class ConstraintMode { None, Hard, Annealed };
std::string_view to_string(ConstraintMode m);
std::optional<ConstraintMode> constraint_mode_from(std::string_view name);

// One linear row of Ax <= b over the constrained-variable vector x.
struct ConstraintRow {
  std::vector<double> coeffs;
  double bound = 0;
  bool operator==(const ConstraintRow&) const = default;
};

struct RewardConfig {
  double a_teacher = 1.0;                 // teacher validation accuracy, in (0,1]
  std::vector<ConstraintRow> constraints; // rows of Ax <= b
  ConstraintMode mode = ConstraintMode::None;
  int t_anneal = 1;                       // iterations until epsilon hits 0
};

struct RewardRecord {
  double compression = 0;   // C in [0,1)
  double accuracy = 0;      // A in [0,1]
  double reward = 0;
  Degeneracy degenerate = Degeneracy::Valid;
  bool constraint_satisfied = true;
};

// C = 1 - params_student/params_teacher, clamped at 0 for students that
// round out larger than the teacher. Throws on params_teacher == 0.
double compression_ratio(long long params_student, long long params_teacher);

// R = R_c * R_a = C(2-C) * A/a_teacher.
double base_reward(double compression, double accuracy, double a_teacher);

// Relaxation schedule for soft constraints: 1 at iteration 0, linear decay
// to 0 at iteration >= t_anneal.
double epsilon_at(int iteration, int t_anneal);

bool constraints_satisfied(const std::vector<ConstraintRow>& rows,
                           const std::vector<double>& x);

// Reward for a Valid rollout under the configured constraint handling.
// `iteration` is 0-based so the first policy iteration sees epsilon = 1.
double constrained_reward(double compression, double accuracy,
                          const std::vector<double>& x, const RewardConfig& cfg,
                          int iteration);

// -1 for any non-Valid class; callers skip reward computation entirely.
inline constexpr double kDegenerateReward = -1.0;
bool is_degenerate(Degeneracy d);

// Full scoring path: degeneracy override, then constraint handling.
RewardRecord score_rollout(Degeneracy degenerate, double compression, double accuracy,
                           const std::vector<double>& x, const RewardConfig& cfg,
                           int iteration);

}  // namespace ncomp
