#include "respar/metrics.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace respar {

std::string metrics_csv_header() {
  return "epoch,train_loss,test_accuracy,max_violation,beta,lr,epoch_seconds";
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << metrics_csv_header() << "\n";
  char buf[256];
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                  r.train_loss, r.test_accuracy, r.max_violation, r.beta, r.lr, r.epoch_seconds);
    out << buf;
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != metrics_csv_header()) {
    throw std::runtime_error("'" + path + "' is not a metrics file (bad header)");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    double v[7];
    for (int i = 0; i < 7; ++i) {
      if (!std::getline(ss, field, ',')) {
        throw std::runtime_error("'" + path + "': short row '" + line + "'");
      }
      char* end = nullptr;
      v[i] = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0') {
        throw std::runtime_error("'" + path + "': bad number '" + field + "'");
      }
    }
    rows.push_back({static_cast<int>(v[0]), v[1], v[2], v[3], v[4], v[5], v[6]});
  }
  return rows;
}

}  // namespace respar
