#ifndef RESPAR_METRICS_HPP
#define RESPAR_METRICS_HPP

#include <string>
#include <vector>

namespace respar {

// One per-epoch record. train_loss is always evaluated through a full serial
// forward pass, whatever produced the updates.
struct MetricsRow {
  int epoch = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  double max_violation = 0.0;
  double beta = 0.0;
  double lr = 0.0;
  double epoch_seconds = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

std::string metrics_csv_header();
// Doubles are written with 17 significant digits, so read-back is exact.
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

}  // namespace respar

#endif  // RESPAR_METRICS_HPP
