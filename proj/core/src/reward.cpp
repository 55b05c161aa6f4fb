#include "ncomp/reward.hpp"

#include <algorithm>
#include <stdexcept>

namespace ncomp {

std::string_view to_string(ConstraintMode m) {
  switch (m) {
    case ConstraintMode::None: return "none";
    case ConstraintMode::Hard: return "hard";
    case ConstraintMode::Annealed: return "annealed";
  }
  return "?";
}

std::optional<ConstraintMode> constraint_mode_from(std::string_view name) {
  if (name == "none") return ConstraintMode::None;
  if (name == "hard") return ConstraintMode::Hard;
  if (name == "annealed") return ConstraintMode::Annealed;
  return std::nullopt;
}

double compression_ratio(long long params_student, long long params_teacher) {
  if (params_teacher <= 0) throw std::invalid_argument("teacher has no parameters");
  const double c = 1.0 - static_cast<double>(params_student) / static_cast<double>(params_teacher);
  return std::max(0.0, c);
}

double base_reward(double compression, double accuracy, double a_teacher) {
  return compression * (2.0 - compression) * (accuracy / a_teacher);
}

double epsilon_at(int iteration, int t_anneal) {
  if (t_anneal < 1) throw std::invalid_argument("t_anneal must be >= 1");
  return std::max(0.0, 1.0 - static_cast<double>(iteration) / static_cast<double>(t_anneal));
}

bool constraints_satisfied(const std::vector<ConstraintRow>& rows,
                           const std::vector<double>& x) {
  for (const ConstraintRow& row : rows) {
    if (row.coeffs.size() != x.size())
      throw std::invalid_argument("constraint row has " + std::to_string(row.coeffs.size()) +
                                  " coefficients for " + std::to_string(x.size()) +
                                  " variables");
    double lhs = 0;
    for (std::size_t i = 0; i < x.size(); ++i) lhs += row.coeffs[i] * x[i];
    if (lhs > row.bound) return false;
  }
  return true;
}

double constrained_reward(double compression, double accuracy,
                          const std::vector<double>& x, const RewardConfig& cfg,
                          int iteration) {
  const double base = base_reward(compression, accuracy, cfg.a_teacher);
  if (cfg.mode == ConstraintMode::None || cfg.constraints.empty()) return base;
  if (constraints_satisfied(cfg.constraints, x)) return base;
  if (cfg.mode == ConstraintMode::Hard) return -1.0;
  const double eps = epsilon_at(iteration, cfg.t_anneal);
  return eps * (base + 1.0) - 1.0;
}

bool is_degenerate(Degeneracy d) { return d != Degeneracy::Valid; }

RewardRecord score_rollout(Degeneracy degenerate, double compression, double accuracy,
                           const std::vector<double>& x, const RewardConfig& cfg,
                           int iteration) {
  RewardRecord rec;
  rec.degenerate = degenerate;
  rec.compression = compression;
  rec.accuracy = accuracy;
  if (is_degenerate(degenerate)) {
    rec.reward = kDegenerateReward;
    rec.constraint_satisfied = false;
    return rec;
  }
  rec.constraint_satisfied =
      cfg.mode == ConstraintMode::None || cfg.constraints.empty()
          ? true
          : constraints_satisfied(cfg.constraints, x);
  rec.reward = constrained_reward(compression, accuracy, x, cfg, iteration);
  return rec;
}

}  // namespace ncomp
