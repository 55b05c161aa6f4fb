#include "ncomp/eval.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ncomp/arch_text.hpp"
#include "ncomp/rng.hpp"
#include "ncomp/tensor_store.hpp"

namespace ncomp {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Surrogate model
// ---------------------------------------------------------------------------

namespace {

int weight_layer_count(const Architecture& arch) {
  int n = 0;
  for (const auto& l : arch.layers) n += l.has_weights();
  return n;
}

double nout_mass(const Architecture& arch) {
  double m = 0;
  for (const auto& l : arch.layers)
    if (l.has_weights()) m += l.n_out;
  return m;
}

}  // namespace

SurrogateModel make_surrogate(const Architecture& teacher, double a_teacher, double alpha,
                              double beta) {
  SurrogateModel m;
  m.a_teacher = a_teacher;
  m.alpha = alpha;
  m.beta = beta;
  m.teacher_weight_layers = weight_layer_count(teacher);
  m.teacher_nout_mass = nout_mass(teacher);
  if (m.teacher_weight_layers == 0 || m.teacher_nout_mass <= 0)
    throw std::invalid_argument("surrogate teacher has no weight-bearing layers");
  return m;
}

double SurrogateModel::accuracy_of(const Architecture& arch) const {
  const double depth_deficit = std::clamp(
      1.0 - static_cast<double>(weight_layer_count(arch)) / teacher_weight_layers, 0.0, 1.0);
  const double width_deficit =
      std::clamp(1.0 - nout_mass(arch) / teacher_nout_mass, 0.0, 1.0);
  const double acc = a_teacher * (1.0 - alpha * depth_deficit - beta * width_deficit);
  return std::clamp(acc, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Contexts
// ---------------------------------------------------------------------------

void TeacherContext::reset_counters() {
  counters_.trained = 0;
  counters_.degenerate = 0;
  counters_.cache_hits = 0;
}

std::shared_ptr<TeacherContext> train_teacher(const Architecture& arch, const Dataset& data,
                                              int epochs, std::uint64_t seed,
                                              const EvalOptions& opts, double val_fraction,
                                              std::uint64_t split_seed) {
  auto ctx = std::make_shared<TeacherContext>();
  ctx->arch = arch;
  ctx->params = param_count(arch);
  ctx->seed = seed;
  ctx->scale = feature_scale_from(arch);
  ctx->opts = opts;
  ctx->val_fraction = val_fraction;
  ctx->split_seed = split_seed;

  auto [train_split, val_split] = split_train_val(data, val_fraction, split_seed);

  auto net = std::make_shared<TrainableNet>(arch, seed, opts.limits);
  TrainOptions topt;
  topt.epochs = epochs;
  topt.batch_size = opts.batch_size;
  topt.lr = opts.lr;
  net->train(train_split, LossSpec{LossMode::HardOnly, 0.0}, topt);
  ctx->a_teacher = net->evaluate_accuracy(val_split);

  // Cache the teacher logits over the training split for distillation.
  train_split.teacher_logits.resize(1LL * train_split.n * train_split.n_classes);
  const int chunk = 256;
  for (int begin = 0; begin < train_split.n; begin += chunk) {
    const int count = std::min(chunk, train_split.n - begin);
    const Eigen::MatrixXd logits = net->forward(train_split, begin, begin + count);
    for (int i = 0; i < count; ++i)
      for (int c = 0; c < train_split.n_classes; ++c)
        train_split.teacher_logits[1LL * (begin + i) * train_split.n_classes + c] =
            static_cast<float>(logits(i, c));
  }

  ctx->net = std::move(net);
  ctx->train_data = std::make_shared<Dataset>(std::move(train_split));
  ctx->val_data = std::make_shared<Dataset>(std::move(val_split));
  return ctx;
}

std::shared_ptr<TeacherContext> make_surrogate_context(const Architecture& teacher,
                                                       double a_teacher, double alpha,
                                                       double beta, std::uint64_t seed,
                                                       const EvalOptions& opts) {
  auto ctx = std::make_shared<TeacherContext>();
  ctx->arch = teacher;
  ctx->params = param_count(teacher);
  ctx->a_teacher = a_teacher;
  ctx->seed = seed;
  ctx->scale = feature_scale_from(teacher);
  ctx->opts = opts;
  ctx->surrogate = make_surrogate(teacher, a_teacher, alpha, beta);
  return ctx;
}

// ---------------------------------------------------------------------------
// Candidate evaluation
// ---------------------------------------------------------------------------

namespace {

EvalReport score(const TeacherContext& ctx, const RewardConfig& cfg, int iteration,
                 Degeneracy degenerate, double accuracy, long long params,
                 double wall_seconds) {
  EvalReport report;
  report.params = params;
  report.wall_seconds = wall_seconds;
  const double compression =
      is_degenerate(degenerate) ? 0.0 : compression_ratio(params, ctx.params);
  const std::vector<double> x = {static_cast<double>(params)};
  report.record = score_rollout(degenerate, compression, accuracy, x, cfg, iteration);
  return report;
}

}  // namespace

EvalReport evaluate_candidate(const Architecture& candidate, const TeacherContext& ctx,
                              const RewardConfig& cfg, int iteration) {
  if (!ctx.can_distill())
    throw std::logic_error("evaluate_candidate needs a trained teacher context");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const Degeneracy degenerate = classify_degenerate(candidate, ctx.opts.limits);
  if (is_degenerate(degenerate)) {
    ctx.counters_.degenerate.fetch_add(1);
    return score(ctx, cfg, iteration, degenerate, 0.0, 0, elapsed());
  }

  const std::uint64_t key = arch_hash(candidate);
  {
    std::lock_guard<std::mutex> lock(ctx.cache_mu_);
    auto it = ctx.cache_.find(key);
    if (it != ctx.cache_.end()) {
      ctx.counters_.cache_hits.fetch_add(1);
      return score(ctx, cfg, iteration, it->second.degenerate, it->second.accuracy,
                   it->second.params, elapsed());
    }
  }

  const long long params = param_count(candidate);
  double accuracy = 0.0;
  Degeneracy outcome = degenerate;
  try {
    TrainableNet student(candidate, derive_seed(ctx.seed, key), ctx.opts.limits);
    TrainOptions topt;
    topt.epochs = ctx.opts.eval_epochs;
    topt.batch_size = ctx.opts.batch_size;
    topt.lr = ctx.opts.lr;
    student.train(*ctx.train_data, LossSpec{LossMode::KDOnly, 0.0}, topt);
    accuracy = student.evaluate_accuracy(*ctx.val_data);
    ctx.counters_.trained.fetch_add(1);
  } catch (const TrainDivergence&) {
    // Divergent students are scored like degenerate ones instead of
    // aborting the run.
    outcome = Degeneracy::ShapeFailure;
    ctx.counters_.degenerate.fetch_add(1);
    std::lock_guard<std::mutex> lock(ctx.cache_mu_);
    ctx.cache_.emplace(key, TeacherContext::CachedEval{0.0, 0, outcome});
    return score(ctx, cfg, iteration, outcome, 0.0, 0, elapsed());
  }

  {
    std::lock_guard<std::mutex> lock(ctx.cache_mu_);
    ctx.cache_.emplace(key, TeacherContext::CachedEval{accuracy, params, outcome});
  }
  return score(ctx, cfg, iteration, outcome, accuracy, params, elapsed());
}

EvalReport surrogate_evaluate(const Architecture& candidate, const TeacherContext& ctx,
                              const RewardConfig& cfg, int iteration) {
  if (!ctx.surrogate)
    throw std::logic_error("surrogate_evaluate needs a surrogate context");
  const Degeneracy degenerate = classify_degenerate(candidate, ctx.opts.limits);
  if (is_degenerate(degenerate)) {
    ctx.counters_.degenerate.fetch_add(1);
    return score(ctx, cfg, iteration, degenerate, 0.0, 0, 0.0);
  }
  const long long params = param_count(candidate);
  const double accuracy = ctx.surrogate->accuracy_of(candidate);
  return score(ctx, cfg, iteration, degenerate, accuracy, params, 0.0);
}

EvalReport evaluate(const Architecture& candidate, const TeacherContext& ctx,
                    const RewardConfig& cfg, int iteration) {
  return ctx.surrogate ? surrogate_evaluate(candidate, ctx, cfg, iteration)
                       : evaluate_candidate(candidate, ctx, cfg, iteration);
}

// ---------------------------------------------------------------------------
// Teacher context directory
// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_teacher_context(const std::string& dir, const TeacherContext& ctx) {
  if (!ctx.can_distill())
    throw std::logic_error("only trained teacher contexts can be saved");
  fs::create_directories(dir);
  save_architecture((fs::path(dir) / "teacher.arch").string(), ctx.arch);

  std::vector<NamedTensor> weights;
  {
    NamedTensor theta;
    theta.name = "theta";
    theta.dims = {static_cast<int>(ctx.net->params().size())};
    theta.data.resize(ctx.net->params().size());
    for (int i = 0; i < ctx.net->params().size(); ++i)
      theta.data[i] = static_cast<float>(ctx.net->params()(i));
    weights.push_back(std::move(theta));
    const auto stats = ctx.net->batchnorm_stats();
    for (std::size_t i = 0; i < stats.size(); ++i) {
      NamedTensor mean, var;
      mean.name = "bn" + std::to_string(i) + ".mean";
      mean.dims = {static_cast<int>(stats[i].first.size())};
      for (int j = 0; j < stats[i].first.size(); ++j)
        mean.data.push_back(static_cast<float>(stats[i].first(j)));
      var.name = "bn" + std::to_string(i) + ".var";
      var.dims = {static_cast<int>(stats[i].second.size())};
      for (int j = 0; j < stats[i].second.size(); ++j)
        var.data.push_back(static_cast<float>(stats[i].second(j)));
      weights.push_back(std::move(mean));
      weights.push_back(std::move(var));
    }
  }
  save_tensors((fs::path(dir) / "weights.nct").string(), weights);

  NamedTensor logits;
  logits.name = "logits";
  logits.dims = {ctx.train_data->n, ctx.train_data->n_classes};
  logits.data = ctx.train_data->teacher_logits;
  save_tensors((fs::path(dir) / "logits.nct").string(), {logits});

  std::ofstream meta((fs::path(dir) / "meta.txt").string(), std::ios::binary);
  if (!meta) throw std::runtime_error("cannot write teacher metadata");
  meta << "ncomp-teacher v1\n";
  meta << "a_teacher " << fmt_double(ctx.a_teacher) << '\n';
  meta << "params " << ctx.params << '\n';
  meta << "seed " << ctx.seed << '\n';
  meta << "eval_epochs " << ctx.opts.eval_epochs << '\n';
  meta << "batch_size " << ctx.opts.batch_size << '\n';
  meta << "lr " << fmt_double(ctx.opts.lr) << '\n';
  meta << "max_flatten " << ctx.opts.limits.max_flatten << '\n';
  meta << "val_fraction " << fmt_double(ctx.val_fraction) << '\n';
  meta << "split_seed " << ctx.split_seed << '\n';
  meta << "train_limit " << ctx.train_limit << '\n';
  if (ctx.data_is_synthetic) {
    const SyntheticSpec& s = ctx.synth_spec;
    meta << "data synthetic " << s.n_classes << ' ' << s.samples_per_class << ' '
         << s.image_size << ' ' << fmt_double(s.noise_sigma) << ' ' << s.seed << '\n';
  } else {
    meta << "data idx " << ctx.idx_images << ' ' << ctx.idx_labels << '\n';
  }
}

std::shared_ptr<TeacherContext> load_teacher_context(const std::string& dir) {
  const Architecture arch = load_architecture((fs::path(dir) / "teacher.arch").string());

  std::ifstream meta((fs::path(dir) / "meta.txt").string(), std::ios::binary);
  if (!meta) throw std::runtime_error("cannot open teacher metadata in " + dir);
  std::string line;
  if (!std::getline(meta, line) || line != "ncomp-teacher v1")
    throw std::runtime_error("bad teacher metadata header in " + dir);

  auto ctx = std::make_shared<TeacherContext>();
  ctx->arch = arch;
  ctx->scale = feature_scale_from(arch);
  while (std::getline(meta, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "a_teacher") ls >> ctx->a_teacher;
    else if (key == "params") ls >> ctx->params;
    else if (key == "seed") ls >> ctx->seed;
    else if (key == "eval_epochs") ls >> ctx->opts.eval_epochs;
    else if (key == "batch_size") ls >> ctx->opts.batch_size;
    else if (key == "lr") ls >> ctx->opts.lr;
    else if (key == "max_flatten") ls >> ctx->opts.limits.max_flatten;
    else if (key == "val_fraction") ls >> ctx->val_fraction;
    else if (key == "split_seed") ls >> ctx->split_seed;
    else if (key == "train_limit") ls >> ctx->train_limit;
    else if (key == "data") {
      std::string kind;
      ls >> kind;
      if (kind == "synthetic") {
        ctx->data_is_synthetic = true;
        ls >> ctx->synth_spec.n_classes >> ctx->synth_spec.samples_per_class >>
            ctx->synth_spec.image_size >> ctx->synth_spec.noise_sigma >> ctx->synth_spec.seed;
      } else if (kind == "idx") {
        ctx->data_is_synthetic = false;
        ls >> ctx->idx_images >> ctx->idx_labels;
      } else {
        throw std::runtime_error("unknown data descriptor '" + kind + "' in teacher meta");
      }
    }
  }

  Dataset full = ctx->data_is_synthetic
                     ? gen_synthetic(ctx->synth_spec)
                     : load_idx_dataset(ctx->idx_images, ctx->idx_labels, 10, -1);
  if (ctx->train_limit > 0) full = full.head(ctx->train_limit);
  auto [train_split, val_split] = split_train_val(full, ctx->val_fraction, ctx->split_seed);

  const auto weights = load_tensors((fs::path(dir) / "weights.nct").string());
  auto net = std::make_shared<TrainableNet>(arch, ctx->seed, ctx->opts.limits);
  const NamedTensor& theta = find_tensor(weights, "theta");
  if (theta.elem_count() != net->params().size())
    throw std::runtime_error("teacher weight count mismatch in " + dir);
  for (int i = 0; i < net->params().size(); ++i) net->params()(i) = theta.data[i];
  auto stats = net->batchnorm_stats();
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const NamedTensor& mean = find_tensor(weights, "bn" + std::to_string(i) + ".mean");
    const NamedTensor& var = find_tensor(weights, "bn" + std::to_string(i) + ".var");
    for (int j = 0; j < static_cast<int>(mean.data.size()); ++j) {
      stats[i].first(j) = mean.data[j];
      stats[i].second(j) = var.data[j];
    }
  }
  net->set_batchnorm_stats(stats);

  const auto logit_tensors = load_tensors((fs::path(dir) / "logits.nct").string());
  const NamedTensor& logits = find_tensor(logit_tensors, "logits");
  if (logits.dims.size() != 2 || logits.dims[0] != train_split.n ||
      logits.dims[1] != train_split.n_classes)
    throw std::runtime_error("cached logits do not match the training split in " + dir);
  train_split.teacher_logits = logits.data;

  ctx->net = std::move(net);
  ctx->train_data = std::make_shared<Dataset>(std::move(train_split));
  ctx->val_data = std::make_shared<Dataset>(std::move(val_split));
  return ctx;
}

}  // namespace ncomp
