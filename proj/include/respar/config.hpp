#ifndef RESPAR_CONFIG_HPP
#define RESPAR_CONFIG_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "respar/penalty.hpp"

namespace respar {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class TrainMode { Serial, Penalty, Alm };
enum class InitScheme { Multilevel, Warmstart, Random };

const char* train_mode_name(TrainMode mode);
TrainMode train_mode_from_name(const std::string& name);
const char* init_scheme_name(InitScheme scheme);
InitScheme init_scheme_from_name(const std::string& name);

// Piecewise-constant step schedules: the value at epoch e is the entry with
// the largest epoch <= e. An empty tau schedule means "no tolerance", i.e.
// exactly one correction pass per iteration.
struct Schedules {
  std::vector<std::pair<int, double>> beta_steps;
  std::vector<std::pair<int, double>> tau_steps;
  std::vector<std::pair<int, double>> lr_steps;
  // Auxiliary-variable rate: an absolute schedule when set, otherwise
  // lambda_lr_scale times the parameter rate.
  std::vector<std::pair<int, double>> lambda_lr_steps;
  double lambda_lr_scale = 1.0;
  double kappa_lr = 1e-9;
  int correction_max_iters = 1;
  double noise_sigma_last = 0.0;  // Gaussian noise added to lambda_{K-1}

  void validate() const;
  static double value_at(const std::vector<std::pair<int, double>>& steps, int epoch,
                         double fallback);
};

// Full description of one experiment.
struct TrainConfig {
  TrainMode mode = TrainMode::Serial;
  int stages = 1;       // K
  int num_blocks = 60;  // L
  int feature_dim = 8;  // d
  int hidden_dim = 8;   // h
  int classes = 3;
  int epochs = 300;
  int batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  int train_points = 200;
  int test_points = 200;
  PenaltyKind penalty = PenaltyKind::SquaredL2;
  Schedules schedules;
  InitScheme init = InitScheme::Multilevel;
  int coarse_epochs = 50;     // serial budget for the K-block coarse net
  int warmstart_epochs = 10;  // serial budget for the warm-start deep net
  int workers = 0;            // 0 = one per stage; RESPAR_WORKERS overrides
  std::string out_path;
  bool emit_timing = true;  // false writes 0 in the CSV timing column

  void validate() const;
};

// Paper schedules for the toy study: lr 0.1 cut 10x at epochs 70/150; penalty
// beta 1 raised 10x at 100/250; ALM beta 0.1 with the same raises.
Schedules default_schedules(TrainMode mode);
TrainConfig default_config(TrainMode mode);

// Strict parse: unknown keys, wrong types or invalid values all throw
// ConfigError. `base` supplies defaults for keys the file omits.
TrainConfig load_config_file(const std::string& path, const TrainConfig& base);
TrainConfig parse_config_json(const std::string& text, const TrainConfig& base);

}  // namespace respar

#endif  // RESPAR_CONFIG_HPP
