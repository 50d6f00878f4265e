#include "respar/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace respar {

int circles_label(double x, double y) {
  const double r = std::hypot(x, y);
  if (r <= 0.5) return 0;
  if (r <= 0.75) return 1;
  return 2;
}

Dataset gen_circles(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_circles: n must be >= 1");
  Rng rng(seed);
  Dataset data;
  data.points = rng_uniform(rng, n, 2, -1.0, 1.0);
  data.labels.resize(n);
  for (int i = 0; i < n; ++i)
    data.labels[i] = circles_label(data.points.at(i, 0), data.points.at(i, 1));
  return data;
}

void write_points_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "x,y,label\n";
  char buf[96];
  for (int i = 0; i < data.points.rows; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n", data.points.at(i, 0),
                  data.points.at(i, 1), data.labels[i]);
    out << buf;
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace respar
