#include "respar/experiment.hpp"

#include <cstdio>

#include "respar/decoupled.hpp"
#include "respar/runtime.hpp"

namespace respar {

namespace {

double total_seconds(const std::vector<MetricsRow>& rows) {
  double total = 0.0;
  for (const MetricsRow& r : rows) total += r.epoch_seconds;
  return total;
}

}  // namespace

ExperimentResult run_experiment(const TrainConfig& cfg, const std::string& serial_ref_path) {
  cfg.validate();
  const Dataset train_set = gen_circles(cfg.train_points, cfg.seed);
  const Dataset test_set = gen_circles(cfg.test_points, cfg.seed + 1);
  TrainResult trained = train(cfg, train_set, test_set);

  ExperimentResult result;
  result.metrics = std::move(trained.metrics);
  ExperimentSummary& s = result.summary;
  s.final_train_loss = result.metrics.back().train_loss;
  s.final_test_accuracy = result.metrics.back().test_accuracy;
  for (const EpochTiming& t : trained.timings) s.train_wall_seconds += t.train_wall_seconds;
  s.mean_epoch_seconds = s.train_wall_seconds / trained.timings.size();
  s.init_seconds = trained.init_seconds;
  if (!serial_ref_path.empty()) {
    const double ref = total_seconds(read_metrics_csv(serial_ref_path));
    s.speedup = measure_speedup(ref, s.train_wall_seconds);
  }
  if (!cfg.out_path.empty()) write_metrics_csv(result.metrics, cfg.out_path);
  return result;
}

ExperimentSummary summarize_metrics(const std::vector<MetricsRow>& rows,
                                    const std::string& serial_ref_path) {
  if (rows.empty()) throw std::invalid_argument("summarize_metrics: no rows");
  ExperimentSummary s;
  s.final_train_loss = rows.back().train_loss;
  s.final_test_accuracy = rows.back().test_accuracy;
  s.train_wall_seconds = total_seconds(rows);
  s.mean_epoch_seconds = s.train_wall_seconds / rows.size();
  if (!serial_ref_path.empty()) {
    const double ref = total_seconds(read_metrics_csv(serial_ref_path));
    s.speedup = measure_speedup(ref, s.train_wall_seconds);
  }
  return s;
}

std::string format_summary_table(const ExperimentSummary& summary) {
  char buf[256];
  std::string out = "train loss   test acc.   runtime    speedup\n";
  if (summary.speedup > 0.0) {
    std::snprintf(buf, sizeof(buf), "%-12.3g %-11.1f%% %-10.2fs %.2f\n", summary.final_train_loss,
                  100.0 * summary.final_test_accuracy, summary.train_wall_seconds,
                  summary.speedup);
  } else {
    std::snprintf(buf, sizeof(buf), "%-12.3g %-11.1f%% %-10.2fs -\n", summary.final_train_loss,
                  100.0 * summary.final_test_accuracy, summary.train_wall_seconds);
  }
  return out + buf;
}

}  // namespace respar
