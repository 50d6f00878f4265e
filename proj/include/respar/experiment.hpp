#ifndef RESPAR_EXPERIMENT_HPP
#define RESPAR_EXPERIMENT_HPP

#include <string>
#include <vector>

#include "respar/config.hpp"
#include "respar/metrics.hpp"

namespace respar {

struct ExperimentSummary {
  double final_train_loss = 0.0;
  double final_test_accuracy = 0.0;
  double train_wall_seconds = 0.0;  // training loop only, evaluation excluded
  double mean_epoch_seconds = 0.0;
  double init_seconds = 0.0;
  double speedup = 0.0;  // vs the serial reference; 0 when no reference given
};

struct ExperimentResult {
  ExperimentSummary summary;
  std::vector<MetricsRow> metrics;
};

// Generates the train/test circle sets (test seed = seed + 1), trains, writes
// the metrics CSV when cfg.out_path is set, and computes the speedup against
// a serial reference metrics file when one is given.
ExperimentResult run_experiment(const TrainConfig& cfg, const std::string& serial_ref_path = "");

ExperimentSummary summarize_metrics(const std::vector<MetricsRow>& rows,
                                    const std::string& serial_ref_path = "");

// One row in the style of the result table: train loss, test acc., runtime,
// speedup.
std::string format_summary_table(const ExperimentSummary& summary);

}  // namespace respar

#endif  // RESPAR_EXPERIMENT_HPP
