// ncomp: two-stage reinforcement-learning network compression.
//
// Exit codes: 0 success, 2 bad command line, 3 unreadable or invalid
// config, 4 constraint parse failure, 1 anything else.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "ncomp/arch_text.hpp"
#include "ncomp/config.hpp"
#include "ncomp/eval.hpp"
#include "ncomp/run.hpp"

namespace fs = std::filesystem;
using namespace ncomp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitConstraint = 4;

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "ncomp-out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool surrogate = false;
  std::vector<std::string> constraints;
  int workers = 0;
  int train_limit = 0;
  bool train_limit_set = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run configuration file");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_flag("--surrogate", flags.surrogate, "score candidates with the analytic proxy");
  cmd->add_option("--constraint", flags.constraints,
                  "parameter budget, e.g. \"params<=20000\" (repeatable; implies hard mode "
                  "unless the config sets annealed)");
  cmd->add_option("--workers", flags.workers, "concurrent candidate evaluations");
  cmd->add_option("--train-limit", flags.train_limit, "cap on training samples")
      ->each([&flags](const std::string&) { flags.train_limit_set = true; });
  cmd->add_option("--seed", flags.seed, "master seed")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
}

RunConfig build_config(const CommonFlags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) cfg = load_config(flags.config_path);
  if (flags.seed_set) cfg.seed = flags.seed;
  if (flags.surrogate) cfg.surrogate = true;
  if (flags.workers > 0) cfg.workers = flags.workers;
  if (flags.train_limit_set) cfg.data.train_limit = flags.train_limit;
  for (const std::string& expr : flags.constraints) {
    cfg.constraints.push_back(parse_constraint_expr(expr));
    if (cfg.constraint_mode == ConstraintMode::None)
      cfg.constraint_mode = ConstraintMode::Hard;
  }
  return cfg;
}

Dataset build_dataset(const RunConfig& cfg) {
  Dataset data = cfg.data.source == DataConfig::Source::Synthetic
                     ? gen_synthetic(cfg.data.synth)
                     : load_idx_dataset(cfg.data.images, cfg.data.labels, 10, -1);
  if (cfg.data.train_limit > 0) data = data.head(cfg.data.train_limit);
  return data;
}

EvalOptions eval_options(const RunConfig& cfg) {
  EvalOptions opts;
  opts.eval_epochs = cfg.eval_epochs;
  opts.batch_size = cfg.batch_size;
  opts.lr = cfg.train_lr;
  opts.limits.max_flatten = cfg.max_flatten;
  return opts;
}

std::shared_ptr<TeacherContext> context_for(const RunConfig& cfg,
                                            const std::string& teacher_dir,
                                            const std::string& arch_path) {
  if (cfg.surrogate) {
    Architecture teacher;
    if (!arch_path.empty()) teacher = load_architecture(arch_path);
    else if (!teacher_dir.empty())
      teacher = load_architecture((fs::path(teacher_dir) / "teacher.arch").string());
    else
      throw std::runtime_error("surrogate mode needs --arch or --teacher");
    return make_surrogate_context(teacher, cfg.surrogate_a_teacher, cfg.surrogate_alpha,
                                  cfg.surrogate_beta, cfg.seed, eval_options(cfg));
  }
  if (teacher_dir.empty()) throw std::runtime_error("--teacher is required");
  auto ctx = load_teacher_context(teacher_dir);
  ctx->opts = eval_options(cfg);
  return ctx;
}

void print_summary(const RunSummary& summary, const std::string& run_dir) {
  const FinalReport& r = summary.report;
  std::cout << "run directory: " << run_dir << '\n';
  if (summary.stage1)
    std::cout << "stage 1 best reward: " << summary.stage1->best_reward << '\n';
  if (summary.stage2)
    std::cout << "stage 2 best reward: " << summary.stage2->best_reward << '\n';
  std::cout << "student params: " << r.params << " (teacher " << r.params_teacher << ")\n"
            << "compression:   " << r.compression << '\n'
            << "accuracy:      " << r.accuracy << " (teacher " << r.teacher_accuracy
            << ", delta " << r.delta_accuracy << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage policy-gradient network compression"};
  app.require_subcommand(1);

  // train-teacher
  auto* cmd_teacher = app.add_subcommand("train-teacher", "train a teacher and cache logits");
  CommonFlags tf;
  std::string teacher_arch_path;
  int teacher_epochs_override = 0;
  cmd_teacher->add_option("--arch", teacher_arch_path, "teacher architecture file")
      ->required();
  cmd_teacher->add_option("--epochs", teacher_epochs_override, "teacher training epochs");
  add_common_flags(cmd_teacher, tf);

  // compress
  auto* cmd_compress = app.add_subcommand("compress", "run the two-stage compression");
  CommonFlags cf;
  std::string compress_teacher_dir, compress_arch_path, stage_override;
  cmd_compress->add_option("--teacher", compress_teacher_dir, "teacher context directory");
  cmd_compress->add_option("--arch", compress_arch_path,
                           "teacher architecture file (surrogate mode)");
  cmd_compress->add_option("--stage", stage_override, "1, 2 or both");
  add_common_flags(cmd_compress, cf);

  // transfer
  auto* cmd_transfer = app.add_subcommand("transfer", "compress with a pretrained policy");
  CommonFlags xf;
  std::string transfer_teacher_dir, transfer_arch_path, transfer_stage, checkpoint_path;
  cmd_transfer->add_option("--checkpoint", checkpoint_path, "policy checkpoint")->required();
  cmd_transfer->add_option("--teacher", transfer_teacher_dir, "teacher context directory");
  cmd_transfer->add_option("--arch", transfer_arch_path,
                           "teacher architecture file (surrogate mode)");
  cmd_transfer->add_option("--stage", transfer_stage, "1, 2 or both");
  add_common_flags(cmd_transfer, xf);

  // evaluate
  auto* cmd_eval = app.add_subcommand("evaluate", "score one candidate architecture");
  CommonFlags ef;
  std::string eval_arch_path, eval_teacher_dir, eval_teacher_arch;
  cmd_eval->add_option("--arch", eval_arch_path, "candidate architecture file")->required();
  cmd_eval->add_option("--teacher", eval_teacher_dir, "teacher context directory");
  cmd_eval->add_option("--teacher-arch", eval_teacher_arch,
                       "teacher architecture file (surrogate mode)");
  add_common_flags(cmd_eval, ef);

  // export-plots
  auto* cmd_plots = app.add_subcommand("export-plots",
                                       "emit per-iteration CSVs for the run's figures");
  std::string plots_run_dir, plots_out_dir;
  cmd_plots->add_option("--run", plots_run_dir, "run directory with stage CSV logs")
      ->required();
  cmd_plots->add_option("--out", plots_out_dir, "output directory (defaults to --run)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*cmd_teacher) {
      RunConfig cfg = build_config(tf);
      if (teacher_epochs_override > 0) cfg.teacher_epochs = teacher_epochs_override;
      const Architecture arch = load_architecture(teacher_arch_path);
      const Dataset data = build_dataset(cfg);
      auto ctx = train_teacher(arch, data, cfg.teacher_epochs, cfg.seed, eval_options(cfg),
                               cfg.data.val_fraction, cfg.data.split_seed);
      ctx->data_is_synthetic = cfg.data.source == DataConfig::Source::Synthetic;
      ctx->synth_spec = cfg.data.synth;
      ctx->idx_images = cfg.data.images;
      ctx->idx_labels = cfg.data.labels;
      ctx->train_limit = cfg.data.train_limit;
      ctx->val_fraction = cfg.data.val_fraction;
      ctx->split_seed = cfg.data.split_seed;
      save_teacher_context(tf.out_dir, *ctx);
      std::cout << "teacher accuracy: " << ctx->a_teacher << '\n'
                << "teacher params:   " << ctx->params << '\n'
                << "context saved to: " << tf.out_dir << '\n';
      return kExitOk;
    }

    if (*cmd_compress || *cmd_transfer) {
      const bool is_transfer = static_cast<bool>(*cmd_transfer);
      CommonFlags& flags = is_transfer ? xf : cf;
      RunConfig cfg = build_config(flags);
      const std::string stage = is_transfer ? transfer_stage : stage_override;
      if (!stage.empty()) cfg.stage = stage;
      if (cfg.stage != "1" && cfg.stage != "2" && cfg.stage != "both")
        throw ConfigError("--stage must be 1, 2 or both");
      if (is_transfer) cfg.transfer_checkpoint = checkpoint_path;
      auto ctx = context_for(cfg, is_transfer ? transfer_teacher_dir : compress_teacher_dir,
                             is_transfer ? transfer_arch_path : compress_arch_path);
      const RunSummary summary = run_compress(*ctx, cfg, flags.out_dir);
      print_summary(summary, flags.out_dir);
      return kExitOk;
    }

    if (*cmd_eval) {
      RunConfig cfg = build_config(ef);
      auto ctx = context_for(cfg, eval_teacher_dir, eval_teacher_arch);
      const Architecture candidate = load_architecture(eval_arch_path);
      const RewardConfig rcfg{ctx->a_teacher, cfg.constraints, cfg.constraint_mode,
                              std::max(1, cfg.t_anneal)};
      const EvalReport report = evaluate(candidate, *ctx, rcfg, 0);
      std::cout << "degeneracy:  " << to_string(report.record.degenerate) << '\n'
                << "params:      " << report.params << '\n'
                << "compression: " << report.record.compression << '\n'
                << "accuracy:    " << report.record.accuracy << '\n'
                << "reward:      " << report.record.reward << '\n'
                << "wall_s:      " << report.wall_seconds << '\n';
      return kExitOk;
    }

    if (*cmd_plots) {
      const std::string out = plots_out_dir.empty() ? plots_run_dir : plots_out_dir;
      fs::create_directories(out);
      int total = 0;
      for (int stage : {1, 2}) {
        const fs::path src = fs::path(plots_run_dir) / ("stage" + std::to_string(stage) +
                                                        ".csv");
        if (!fs::exists(src)) continue;
        const fs::path dst = fs::path(out) / ("plot_stage" + std::to_string(stage) + ".csv");
        const int rows = export_plot_csv(src.string(), dst.string());
        std::cout << dst.string() << ": " << rows << " rows\n";
        total += rows;
      }
      if (total == 0) throw std::runtime_error("no stage CSV logs under " + plots_run_dir);
      return kExitOk;
    }
  } catch (const ConstraintParseError& e) {
    std::cerr << "constraint error: " << e.what() << '\n';
    return kExitConstraint;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n'
              << "run '" << argv[0] << " --help' for usage\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
