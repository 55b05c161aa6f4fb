#include "ncomp/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ncomp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "' wants true/false, got '" + v + "'");
}

}  // namespace

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[run]\n";
  out << "n1 = " << cfg.n1 << '\n';
  out << "n2 = " << cfg.n2 << '\n';
  out << "rollouts = " << cfg.rollouts << '\n';
  out << "seed = " << cfg.seed << '\n';
  out << "workers = " << cfg.workers << '\n';
  out << "stage = " << cfg.stage << '\n';
  out << "surrogate = " << (cfg.surrogate ? "true" : "false") << '\n';
  out << "actor_critic = " << (cfg.actor_critic ? "true" : "false") << '\n';
  out << "checkpoint_every = " << cfg.checkpoint_every << '\n';
  if (!cfg.transfer_checkpoint.empty())
    out << "transfer_checkpoint = " << cfg.transfer_checkpoint << '\n';
  out << "\n[policy]\n";
  out << "lr_remove = " << fmt(cfg.lr_remove) << '\n';
  out << "lr_shrink = " << fmt(cfg.lr_shrink) << '\n';
  out << "baseline_beta = " << fmt(cfg.baseline_beta) << '\n';
  out << "\n[train]\n";
  out << "eval_epochs = " << cfg.eval_epochs << '\n';
  out << "teacher_epochs = " << cfg.teacher_epochs << '\n';
  out << "final_epochs = " << cfg.final_epochs << '\n';
  out << "batch_size = " << cfg.batch_size << '\n';
  out << "train_lr = " << fmt(cfg.train_lr) << '\n';
  out << "kd_lambda = " << fmt(cfg.kd_lambda) << '\n';
  out << "max_flatten = " << cfg.max_flatten << '\n';
  out << "\n[reward]\n";
  out << "mode = " << to_string(cfg.constraint_mode) << '\n';
  out << "t_anneal = " << cfg.t_anneal << '\n';
  for (const ConstraintRow& row : cfg.constraints) {
    out << "row = ";
    for (double c : row.coeffs) out << fmt(c) << ", ";
    out << fmt(row.bound) << '\n';
  }
  out << "\n[surrogate]\n";
  out << "a_teacher = " << fmt(cfg.surrogate_a_teacher) << '\n';
  out << "alpha = " << fmt(cfg.surrogate_alpha) << '\n';
  out << "beta = " << fmt(cfg.surrogate_beta) << '\n';
  out << "\n[data]\n";
  out << "source = " << (cfg.data.source == DataConfig::Source::Synthetic ? "synthetic" : "idx")
      << '\n';
  out << "classes = " << cfg.data.synth.n_classes << '\n';
  out << "samples_per_class = " << cfg.data.synth.samples_per_class << '\n';
  out << "image_size = " << cfg.data.synth.image_size << '\n';
  out << "noise_sigma = " << fmt(cfg.data.synth.noise_sigma) << '\n';
  out << "data_seed = " << cfg.data.synth.seed << '\n';
  if (!cfg.data.images.empty()) out << "images = " << cfg.data.images << '\n';
  if (!cfg.data.labels.empty()) out << "labels = " << cfg.data.labels << '\n';
  out << "train_limit = " << cfg.data.train_limit << '\n';
  out << "val_fraction = " << fmt(cfg.data.val_fraction) << '\n';
  out << "split_seed = " << cfg.data.split_seed << '\n';
  return out.str();
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  cfg.constraints.clear();
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qual = section + "." + key;

    try {
      if (qual == "run.n1") cfg.n1 = std::stoi(value);
      else if (qual == "run.n2") cfg.n2 = std::stoi(value);
      else if (qual == "run.rollouts") cfg.rollouts = std::stoi(value);
      else if (qual == "run.seed") cfg.seed = std::stoull(value);
      else if (qual == "run.workers") cfg.workers = std::stoi(value);
      else if (qual == "run.stage") cfg.stage = value;
      else if (qual == "run.surrogate") cfg.surrogate = parse_bool(value, qual);
      else if (qual == "run.actor_critic") cfg.actor_critic = parse_bool(value, qual);
      else if (qual == "run.checkpoint_every") cfg.checkpoint_every = std::stoi(value);
      else if (qual == "run.transfer_checkpoint") cfg.transfer_checkpoint = value;
      else if (qual == "policy.lr_remove") cfg.lr_remove = std::stod(value);
      else if (qual == "policy.lr_shrink") cfg.lr_shrink = std::stod(value);
      else if (qual == "policy.baseline_beta") cfg.baseline_beta = std::stod(value);
      else if (qual == "train.eval_epochs") cfg.eval_epochs = std::stoi(value);
      else if (qual == "train.teacher_epochs") cfg.teacher_epochs = std::stoi(value);
      else if (qual == "train.final_epochs") cfg.final_epochs = std::stoi(value);
      else if (qual == "train.batch_size") cfg.batch_size = std::stoi(value);
      else if (qual == "train.train_lr") cfg.train_lr = std::stod(value);
      else if (qual == "train.kd_lambda") cfg.kd_lambda = std::stod(value);
      else if (qual == "train.max_flatten") cfg.max_flatten = std::stoll(value);
      else if (qual == "reward.mode") {
        const auto mode = constraint_mode_from(value);
        if (!mode) throw ConfigError("unknown constraint mode '" + value + "'");
        cfg.constraint_mode = *mode;
      } else if (qual == "reward.t_anneal") cfg.t_anneal = std::stoi(value);
      else if (qual == "reward.row") {
        ConstraintRow row;
        std::vector<double> vals;
        std::istringstream vs(value);
        std::string piece;
        while (std::getline(vs, piece, ',')) vals.push_back(std::stod(trim(piece)));
        if (vals.size() < 2)
          throw ConfigError("constraint row wants 'coeffs..., bound', got '" + value + "'");
        row.bound = vals.back();
        vals.pop_back();
        row.coeffs = std::move(vals);
        cfg.constraints.push_back(std::move(row));
      } else if (qual == "surrogate.a_teacher") cfg.surrogate_a_teacher = std::stod(value);
      else if (qual == "surrogate.alpha") cfg.surrogate_alpha = std::stod(value);
      else if (qual == "surrogate.beta") cfg.surrogate_beta = std::stod(value);
      else if (qual == "data.source") {
        if (value == "synthetic") cfg.data.source = DataConfig::Source::Synthetic;
        else if (value == "idx") cfg.data.source = DataConfig::Source::Idx;
        else throw ConfigError("unknown data source '" + value + "'");
      } else if (qual == "data.classes") cfg.data.synth.n_classes = std::stoi(value);
      else if (qual == "data.samples_per_class")
        cfg.data.synth.samples_per_class = std::stoi(value);
      else if (qual == "data.image_size") cfg.data.synth.image_size = std::stoi(value);
      else if (qual == "data.noise_sigma") cfg.data.synth.noise_sigma = std::stod(value);
      else if (qual == "data.data_seed") cfg.data.synth.seed = std::stoull(value);
      else if (qual == "data.images") cfg.data.images = value;
      else if (qual == "data.labels") cfg.data.labels = value;
      else if (qual == "data.train_limit") cfg.data.train_limit = std::stoi(value);
      else if (qual == "data.val_fraction") cfg.data.val_fraction = std::stod(value);
      else if (qual == "data.split_seed") cfg.data.split_seed = std::stoull(value);
      else throw ConfigError("unknown config key '" + qual + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": bad value for '" + qual +
                        "': " + e.what());
    }
  }
  if (cfg.stage != "1" && cfg.stage != "2" && cfg.stage != "both")
    throw ConfigError("run.stage must be 1, 2 or both");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write config file: " + path);
  f << serialize_config(cfg);
}

ConstraintRow parse_constraint_expr(const std::string& expr) {
  std::string s;
  for (char c : expr)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  const std::string op = "<=";
  const auto pos = s.find(op);
  if (pos == std::string::npos)
    throw ConstraintParseError("constraint wants the form 'params<=N', got '" + expr + "'");
  const std::string var = s.substr(0, pos);
  const std::string bound_text = s.substr(pos + op.size());
  if (var != "params")
    throw ConstraintParseError("unknown constraint variable '" + var +
                               "' (only 'params' is built in)");
  try {
    std::size_t used = 0;
    const double bound = std::stod(bound_text, &used);
    if (used != bound_text.size() || bound_text.empty())
      throw ConstraintParseError("bad constraint bound '" + bound_text + "'");
    return ConstraintRow{{1.0}, bound};
  } catch (const ConstraintParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ConstraintParseError("bad constraint bound '" + bound_text + "'");
  }
}

}  // namespace ncomp
