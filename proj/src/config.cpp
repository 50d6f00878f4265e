#include "respar/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace respar {

const char* train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::Serial: return "serial";
    case TrainMode::Penalty: return "penalty";
    case TrainMode::Alm: return "alm";
  }
  return "?";
}

TrainMode train_mode_from_name(const std::string& name) {
  if (name == "serial") return TrainMode::Serial;
  if (name == "penalty") return TrainMode::Penalty;
  if (name == "alm") return TrainMode::Alm;
  throw ConfigError("unknown mode '" + name + "' (expected serial, penalty or alm)");
}

const char* init_scheme_name(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::Multilevel: return "multilevel";
    case InitScheme::Warmstart: return "warmstart";
    case InitScheme::Random: return "random";
  }
  return "?";
}

InitScheme init_scheme_from_name(const std::string& name) {
  if (name == "multilevel") return InitScheme::Multilevel;
  if (name == "warmstart") return InitScheme::Warmstart;
  if (name == "random") return InitScheme::Random;
  throw ConfigError("unknown init scheme '" + name +
                    "' (expected multilevel, warmstart or random)");
}

namespace {

void validate_steps(const char* name, const std::vector<std::pair<int, double>>& steps,
                    bool positive_values) {
  int prev_epoch = -1;
  for (const auto& [epoch, value] : steps) {
    if (epoch < 0) throw ConfigError(std::string(name) + ": negative epoch");
    if (epoch <= prev_epoch)
      throw ConfigError(std::string(name) + ": epochs must be strictly increasing");
    if (positive_values && value <= 0.0)
      throw ConfigError(std::string(name) + ": values must be positive");
    prev_epoch = epoch;
  }
}

}  // namespace

void Schedules::validate() const {
  validate_steps("beta schedule", beta_steps, true);
  validate_steps("tau schedule", tau_steps, false);
  validate_steps("lr schedule", lr_steps, true);
  validate_steps("lambda_lr schedule", lambda_lr_steps, true);
  if (lambda_lr_scale < 0.0) throw ConfigError("lambda_lr_scale must be >= 0");
  if (kappa_lr < 0.0) throw ConfigError("kappa_lr must be >= 0");
  if (correction_max_iters < 1) throw ConfigError("correction_max_iters must be >= 1");
  if (noise_sigma_last < 0.0) throw ConfigError("noise_sigma_last must be >= 0");
}

double Schedules::value_at(const std::vector<std::pair<int, double>>& steps, int epoch,
                           double fallback) {
  double value = fallback;
  for (const auto& [e, v] : steps) {
    if (e > epoch) break;
    value = v;
  }
  return value;
}

void TrainConfig::validate() const {
  if (stages < 1) throw ConfigError("stages must be >= 1");
  if (num_blocks < 1) throw ConfigError("blocks must be >= 1");
  if (num_blocks % stages != 0) {
    throw ConfigError("stage count " + std::to_string(stages) + " does not divide " +
                      std::to_string(num_blocks) + " blocks");
  }
  if (feature_dim < 1 || hidden_dim < 1) throw ConfigError("widths must be >= 1");
  if (classes < 2) throw ConfigError("classes must be >= 2");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 0) throw ConfigError("batch_size must be >= 0");
  if (train_points < 1 || test_points < 1) throw ConfigError("dataset sizes must be >= 1");
  if (coarse_epochs < 0 || warmstart_epochs < 0) throw ConfigError("init budgets must be >= 0");
  if (mode == TrainMode::Alm && penalty != PenaltyKind::SquaredL2) {
    throw ConfigError("alm mode requires the squared_l2 penalty (the multiplier update is "
                      "derived for it)");
  }
  schedules.validate();
}

Schedules default_schedules(TrainMode mode) {
  Schedules s;
  s.lr_steps = {{0, 0.1}, {70, 0.01}, {150, 0.001}};
  if (mode == TrainMode::Alm) {
    s.beta_steps = {{0, 0.1}, {100, 1.0}, {250, 10.0}};
  } else {
    s.beta_steps = {{0, 1.0}, {100, 10.0}, {250, 100.0}};
  }
  return s;
}

TrainConfig default_config(TrainMode mode) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.stages = mode == TrainMode::Serial ? 1 : 2;
  cfg.schedules = default_schedules(mode);
  return cfg;
}

namespace {

using nlohmann::json;

std::vector<std::pair<int, double>> parse_steps(const json& j, const std::string& key) {
  std::vector<std::pair<int, double>> steps;
  if (!j.is_array()) throw ConfigError(key + ": expected an array of [epoch, value] pairs");
  for (const auto& item : j) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_number_integer() ||
        !item[1].is_number()) {
      throw ConfigError(key + ": expected [epoch, value] pairs");
    }
    steps.emplace_back(item[0].get<int>(), item[1].get<double>());
  }
  return steps;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

Schedules parse_schedules(const json& j, Schedules s) {
  check_keys(j,
             {"beta", "tau", "lr", "lambda_lr", "lambda_lr_scale", "kappa_lr",
              "correction_max_iters", "noise_sigma_last"},
             "schedules");
  if (j.contains("beta")) s.beta_steps = parse_steps(j["beta"], "schedules.beta");
  if (j.contains("tau")) s.tau_steps = parse_steps(j["tau"], "schedules.tau");
  if (j.contains("lr")) s.lr_steps = parse_steps(j["lr"], "schedules.lr");
  if (j.contains("lambda_lr")) s.lambda_lr_steps = parse_steps(j["lambda_lr"], "schedules.lambda_lr");
  if (j.contains("lambda_lr_scale")) s.lambda_lr_scale = j["lambda_lr_scale"].get<double>();
  if (j.contains("kappa_lr")) s.kappa_lr = j["kappa_lr"].get<double>();
  if (j.contains("correction_max_iters"))
    s.correction_max_iters = j["correction_max_iters"].get<int>();
  if (j.contains("noise_sigma_last")) s.noise_sigma_last = j["noise_sigma_last"].get<double>();
  return s;
}

}  // namespace

TrainConfig parse_config_json(const std::string& text, const TrainConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");
  check_keys(j,
             {"mode", "stages", "blocks", "feature_dim", "hidden_dim", "classes", "epochs",
              "batch_size", "seed", "train_points", "test_points", "penalty", "schedules",
              "init", "coarse_epochs", "warmstart_epochs", "workers", "out", "emit_timing"},
             "config");

  TrainConfig cfg = base;
  try {
    if (j.contains("mode")) {
      cfg.mode = train_mode_from_name(j["mode"].get<std::string>());
      // A mode change re-bases the schedules unless the file also sets them.
      cfg.schedules = default_schedules(cfg.mode);
    }
    if (j.contains("stages")) cfg.stages = j["stages"].get<int>();
    if (j.contains("blocks")) cfg.num_blocks = j["blocks"].get<int>();
    if (j.contains("feature_dim")) cfg.feature_dim = j["feature_dim"].get<int>();
    if (j.contains("hidden_dim")) cfg.hidden_dim = j["hidden_dim"].get<int>();
    if (j.contains("classes")) cfg.classes = j["classes"].get<int>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("train_points")) cfg.train_points = j["train_points"].get<int>();
    if (j.contains("test_points")) cfg.test_points = j["test_points"].get<int>();
    if (j.contains("penalty")) cfg.penalty = penalty_kind_from_name(j["penalty"].get<std::string>());
    if (j.contains("schedules")) cfg.schedules = parse_schedules(j["schedules"], cfg.schedules);
    if (j.contains("init")) cfg.init = init_scheme_from_name(j["init"].get<std::string>());
    if (j.contains("coarse_epochs")) cfg.coarse_epochs = j["coarse_epochs"].get<int>();
    if (j.contains("warmstart_epochs")) cfg.warmstart_epochs = j["warmstart_epochs"].get<int>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    if (j.contains("out")) cfg.out_path = j["out"].get<std::string>();
    if (j.contains("emit_timing")) cfg.emit_timing = j["emit_timing"].get<bool>();
  } catch (const json::type_error& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config_file(const std::string& path, const TrainConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_json(buf.str(), base);
}

}  // namespace respar
