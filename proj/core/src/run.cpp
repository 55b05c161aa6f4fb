#include "ncomp/run.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <semaphore>
#include <sstream>

#include "ncomp/arch_text.hpp"
#include "ncomp/optim.hpp"
#include "ncomp/rng.hpp"

namespace ncomp {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

RewardConfig reward_config_for(const TeacherContext& ctx, const RunConfig& cfg,
                               int n_iters) {
  RewardConfig rcfg;
  rcfg.a_teacher = ctx.a_teacher;
  rcfg.constraints = cfg.constraints;
  rcfg.mode = cfg.constraint_mode;
  rcfg.t_anneal = cfg.t_anneal > 0 ? cfg.t_anneal : std::max(1, n_iters / 2);
  return rcfg;
}

bool usable_best(const RewardRecord& rec, const RunConfig& cfg) {
  if (is_degenerate(rec.degenerate)) return false;
  if (cfg.constraint_mode != ConstraintMode::None && !cfg.constraints.empty())
    return rec.constraint_satisfied;
  return true;
}

struct StageDriver {
  int stage = 1;
  int n_iters = 1;
  const TeacherContext* ctx = nullptr;
  const RunConfig* cfg = nullptr;
  std::string run_dir;
  Eigen::MatrixXd inputs;
  std::function<Trajectory(const RecurrentPolicy&, std::uint64_t)> sample;
  std::function<Architecture(const Trajectory&)> materialize;
};

StageResult drive_stage(const StageDriver& d, RecurrentPolicy policy, double lr) {
  const RunConfig& cfg = *d.cfg;
  const TeacherContext& ctx = *d.ctx;
  if (cfg.actor_critic && !policy.has_value_head())
    throw std::runtime_error("actor-critic run needs a policy with a value head; the "
                             "loaded checkpoint has none");
  const RewardConfig rcfg = reward_config_for(ctx, cfg, d.n_iters);
  const int m = cfg.rollouts;

  StageResult result{.found_valid = false,
                     .best_arch = {},
                     .best_reward = -2,
                     .policy = std::move(policy),
                     .log = {}};

  AdamState adam = AdamState::sized_like(result.policy.params(), lr);
  BaselineState baseline;
  baseline.decay = cfg.baseline_beta;

  const std::string ckpt_dir =
      d.run_dir.empty() ? "" : (fs::path(d.run_dir) / "checkpoints").string();
  if (!ckpt_dir.empty()) fs::create_directories(ckpt_dir);

  int degenerate_streak = 0;
  for (int iter = 1; iter <= d.n_iters; ++iter) {
    std::vector<Trajectory> trajs;
    std::vector<Architecture> archs;
    trajs.reserve(m);
    archs.reserve(m);
    for (int k = 0; k < m; ++k) {
      trajs.push_back(
          d.sample(result.policy, derive_seed(cfg.seed, d.stage, iter, k)));
      archs.push_back(d.materialize(trajs.back()));
    }

    // Fan the m evaluations out to the worker pool and join in rollout
    // order; seeds derive from content, so scheduling cannot change results.
    std::vector<EvalReport> reports(m);
    if (cfg.workers > 1) {
      std::counting_semaphore<> slots(cfg.workers);
      std::vector<std::future<EvalReport>> futs;
      futs.reserve(m);
      for (int k = 0; k < m; ++k) {
        futs.push_back(std::async(std::launch::async, [&, k] {
          slots.acquire();
          EvalReport r = evaluate(archs[k], ctx, rcfg, iter - 1);
          slots.release();
          return r;
        }));
      }
      for (int k = 0; k < m; ++k) reports[k] = futs[k].get();
    } else {
      for (int k = 0; k < m; ++k) reports[k] = evaluate(archs[k], ctx, rcfg, iter - 1);
    }

    RolloutBatch batch;
    batch.inputs = d.inputs;
    batch.trajectories = trajs;
    double mean_reward = 0;
    bool all_degenerate = true;
    for (int k = 0; k < m; ++k) {
      batch.rewards.push_back(reports[k].record.reward);
      mean_reward += reports[k].record.reward;
      all_degenerate &= is_degenerate(reports[k].record.degenerate);
    }
    mean_reward /= m;

    if (!baseline.initialized) baseline = update_baseline(baseline, mean_reward);
    const double baseline_used = baseline.value;

    Eigen::VectorXd grad;
    if (cfg.actor_critic) {
      const ActorCriticGrads ac = actor_critic_gradient(result.policy, batch);
      grad = ac.policy - ac.critic;
    } else {
      grad = reinforce_gradient(result.policy, batch, baseline);
    }
    adam_step(adam, result.policy.params(), grad);
    baseline = update_baseline(baseline, mean_reward);

    for (int k = 0; k < m; ++k) {
      const RewardRecord& rec = reports[k].record;
      if (usable_best(rec, cfg) && rec.reward > result.best_reward) {
        result.best_reward = rec.reward;
        result.best_arch = archs[k];
        result.found_valid = true;
      }
      result.log.push_back(RolloutLog{d.stage, iter, k, rec.reward, rec.accuracy,
                                      rec.compression, reports[k].params, rec.degenerate,
                                      baseline_used,
                                      result.found_valid ? result.best_reward : -2});
    }

    degenerate_streak = all_degenerate ? degenerate_streak + 1 : 0;
    if (degenerate_streak >= 10)
      throw DegenerateRunError(
          "stage " + std::to_string(d.stage) + ": every rollout of iterations " +
          std::to_string(iter - 9) + ".." + std::to_string(iter) +
          " was degenerate; the teacher or limits make all candidates invalid");

    if (!ckpt_dir.empty() && cfg.checkpoint_every > 0 &&
        (iter % cfg.checkpoint_every == 0 || iter == d.n_iters)) {
      save_policy((fs::path(ckpt_dir) / ("stage" + std::to_string(d.stage) + "_iter" +
                                         std::to_string(iter) + ".policy"))
                      .string(),
                  result.policy);
    }
  }
  return result;
}

}  // namespace

RecurrentPolicy load_transfer_policy(const std::string& path, PolicyKind expected_kind) {
  RecurrentPolicy policy = load_policy(path);
  if (policy.kind() != expected_kind)
    throw std::runtime_error("transfer checkpoint is a " +
                             std::string(to_string(policy.kind())) + " policy, expected " +
                             std::string(to_string(expected_kind)));
  const int want = expected_kind == PolicyKind::Removal ? kRemovalInputSize
                                                         : kShrinkInputSize;
  if (policy.input_size() != want)
    throw std::runtime_error("transfer checkpoint input size " +
                             std::to_string(policy.input_size()) + " != expected " +
                             std::to_string(want));
  return policy;
}

StageResult run_stage1(const TeacherContext& ctx, const RunConfig& cfg,
                       const std::string& run_dir) {
  const auto features = encode_layer_features(ctx.arch, ctx.scale);
  const int classifier = final_classifier_index(ctx.arch);
  std::vector<int> forced;
  if (classifier >= 0) forced.push_back(classifier);

  StageDriver d;
  d.stage = 1;
  d.n_iters = cfg.n1;
  d.ctx = &ctx;
  d.cfg = &cfg;
  d.run_dir = run_dir;
  d.inputs = policy_inputs(features);
  d.sample = [&d, forced](const RecurrentPolicy& p, std::uint64_t seed) {
    return sample_removal(p, d.inputs, seed, forced);
  };
  const Architecture teacher = ctx.arch;
  d.materialize = [teacher](const Trajectory& t) {
    return apply_removal(teacher, t.removal_mask());
  };

  RecurrentPolicy policy =
      !cfg.transfer_checkpoint.empty()
          ? load_transfer_policy(cfg.transfer_checkpoint, PolicyKind::Removal)
          : make_removal_policy(derive_seed(cfg.seed, 1, 0xA11C), cfg.actor_critic);
  return drive_stage(d, std::move(policy), cfg.lr_remove);
}

StageResult run_stage2(const Architecture& candidate, const TeacherContext& ctx,
                       const RunConfig& cfg, const std::string& run_dir) {
  const auto vars = shrink_variables(candidate);
  RecurrentPolicy policy =
      !cfg.transfer_checkpoint.empty() && cfg.stage == "2"
          ? load_transfer_policy(cfg.transfer_checkpoint, PolicyKind::Shrink)
          : make_shrink_policy(derive_seed(cfg.seed, 2, 0xA11C), cfg.actor_critic);

  if (vars.empty()) {
    std::cerr << "[ncomp] stage 2: candidate has no shrinkable variables; "
                 "returning it unchanged\n";
    const RewardConfig rcfg = reward_config_for(ctx, cfg, cfg.n2);
    const EvalReport report = evaluate(candidate, ctx, rcfg, 0);
    StageResult result{.found_valid = !is_degenerate(report.record.degenerate),
                       .best_arch = candidate,
                       .best_reward = report.record.reward,
                       .policy = std::move(policy),
                       .log = {}};
    return result;
  }

  const auto features = encode_layer_features(candidate, ctx.scale);

  StageDriver d;
  d.stage = 2;
  d.n_iters = cfg.n2;
  d.ctx = &ctx;
  d.cfg = &cfg;
  d.run_dir = run_dir;
  d.inputs = shrink_policy_inputs(features, vars);
  d.sample = [&d](const RecurrentPolicy& p, std::uint64_t seed) {
    return sample_shrink(p, d.inputs, seed);
  };
  d.materialize = [candidate](const Trajectory& t) {
    return apply_shrinkage(candidate, t.shrink_vector());
  };
  return drive_stage(d, std::move(policy), cfg.lr_shrink);
}

// ---------------------------------------------------------------------------
// Final report
// ---------------------------------------------------------------------------

std::string FinalReport::to_text() const {
  std::ostringstream out;
  char buf[40];
  auto full = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "ncomp-report v1\n";
  out << "params " << params << '\n';
  out << "params_teacher " << params_teacher << '\n';
  out << "compression " << full(compression) << '\n';
  out << "accuracy " << full(accuracy) << '\n';
  out << "teacher_accuracy " << full(teacher_accuracy) << '\n';
  out << "delta_accuracy " << full(delta_accuracy) << '\n';
  return out.str();
}

FinalReport FinalReport::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "ncomp-report v1")
    throw std::runtime_error("bad final report header");
  FinalReport r;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "params") ls >> r.params;
    else if (key == "params_teacher") ls >> r.params_teacher;
    else if (key == "compression") ls >> r.compression;
    else if (key == "accuracy") ls >> r.accuracy;
    else if (key == "teacher_accuracy") ls >> r.teacher_accuracy;
    else if (key == "delta_accuracy") ls >> r.delta_accuracy;
  }
  return r;
}

FinalReport finalize_student(const Architecture& best_arch, const TeacherContext& ctx,
                             const RunConfig& cfg) {
  if (!ctx.can_distill())
    throw std::logic_error("finalize_student needs a trained teacher context");
  TrainableNet student(best_arch, derive_seed(ctx.seed, arch_hash(best_arch), 0xF1),
                       ctx.opts.limits);
  TrainOptions topt;
  topt.epochs = cfg.final_epochs;
  topt.batch_size = cfg.batch_size;
  topt.lr = cfg.train_lr;
  student.train(*ctx.train_data, LossSpec{LossMode::Combined, cfg.kd_lambda}, topt);

  FinalReport report;
  report.params = student.n_params();
  report.params_teacher = ctx.params;
  report.compression = compression_ratio(report.params, ctx.params);
  report.accuracy = student.evaluate_accuracy(*ctx.val_data);
  report.teacher_accuracy = ctx.a_teacher;
  report.delta_accuracy = report.accuracy - ctx.a_teacher;
  return report;
}

// ---------------------------------------------------------------------------
// CSV logs
// ---------------------------------------------------------------------------

void write_stage_csv(const std::string& path, const std::vector<RolloutLog>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write log csv: " + path);
  f << "stage,iteration,rollout,reward,accuracy,compression,params,degenerate,baseline\n";
  for (const RolloutLog& r : rows) {
    f << r.stage << ',' << r.iteration << ',' << r.rollout << ',' << fmt(r.reward) << ','
      << fmt(r.accuracy) << ',' << fmt(r.compression) << ',' << r.params << ','
      << to_string(r.degenerate) << ',' << fmt(r.baseline) << '\n';
  }
}

std::vector<RolloutLog> read_stage_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open log csv: " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty log csv: " + path);
  std::vector<RolloutLog> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string piece;
    RolloutLog r;
    auto next = [&]() {
      if (!std::getline(ls, piece, ',')) throw std::runtime_error("short csv row: " + line);
      return piece;
    };
    r.stage = std::stoi(next());
    r.iteration = std::stoi(next());
    r.rollout = std::stoi(next());
    r.reward = std::stod(next());
    r.accuracy = std::stod(next());
    r.compression = std::stod(next());
    r.params = std::stoll(next());
    const auto deg = degeneracy_from(next());
    if (!deg) throw std::runtime_error("bad degeneracy tag in csv row: " + line);
    r.degenerate = *deg;
    r.baseline = std::stod(next());
    rows.push_back(r);
  }
  return rows;
}

int export_plot_csv(const std::string& stage_csv, const std::string& out_csv) {
  const std::vector<RolloutLog> rows = read_stage_csv(stage_csv);
  std::ofstream f(out_csv, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write plot csv: " + out_csv);
  f << "stage,iteration,rollout,reward,accuracy,compression\n";
  for (const RolloutLog& r : rows)
    f << r.stage << ',' << r.iteration << ',' << r.rollout << ',' << fmt(r.reward) << ','
      << fmt(r.accuracy) << ',' << fmt(r.compression) << '\n';
  return static_cast<int>(rows.size());
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

RunSummary run_compress(const TeacherContext& ctx, const RunConfig& cfg,
                        const std::string& run_dir) {
  fs::create_directories(run_dir);
  save_config((fs::path(run_dir) / "config.txt").string(), cfg);

  RunSummary summary;
  Architecture stage2_base = ctx.arch;

  if (cfg.stage == "1" || cfg.stage == "both") {
    summary.stage1 = run_stage1(ctx, cfg, run_dir);
    write_stage_csv((fs::path(run_dir) / "stage1.csv").string(), summary.stage1->log);
    save_policy((fs::path(run_dir) / "stage1.policy").string(), summary.stage1->policy);
    if (!summary.stage1->found_valid)
      throw std::runtime_error("stage 1 produced no usable architecture");
    save_architecture((fs::path(run_dir) / "best_stage1.arch").string(),
                      summary.stage1->best_arch);
    stage2_base = summary.stage1->best_arch;
    summary.winner = summary.stage1->best_arch;
    summary.winner_reward = summary.stage1->best_reward;
  }

  if (cfg.stage == "2" || cfg.stage == "both") {
    summary.stage2 = run_stage2(stage2_base, ctx, cfg, run_dir);
    write_stage_csv((fs::path(run_dir) / "stage2.csv").string(), summary.stage2->log);
    save_policy((fs::path(run_dir) / "stage2.policy").string(), summary.stage2->policy);
    if (summary.stage2->found_valid) {
      save_architecture((fs::path(run_dir) / "best_stage2.arch").string(),
                        summary.stage2->best_arch);
      if (summary.stage2->best_reward > summary.winner_reward) {
        summary.winner = summary.stage2->best_arch;
        summary.winner_reward = summary.stage2->best_reward;
      }
    }
  }

  if (summary.winner.layers.empty())
    throw std::runtime_error("compression produced no usable architecture");
  save_architecture((fs::path(run_dir) / "best_final.arch").string(), summary.winner);

  if (ctx.can_distill()) {
    summary.report = finalize_student(summary.winner, ctx, cfg);
  } else {
    // Surrogate runs report the proxy numbers without retraining.
    summary.report.params = param_count(summary.winner);
    summary.report.params_teacher = ctx.params;
    summary.report.compression = compression_ratio(summary.report.params, ctx.params);
    summary.report.accuracy = ctx.surrogate->accuracy_of(summary.winner);
    summary.report.teacher_accuracy = ctx.a_teacher;
    summary.report.delta_accuracy = summary.report.accuracy - ctx.a_teacher;
  }
  std::ofstream report_file((fs::path(run_dir) / "final_report.txt").string(),
                            std::ios::binary);
  report_file << summary.report.to_text();
  return summary;
}

}  // namespace ncomp
