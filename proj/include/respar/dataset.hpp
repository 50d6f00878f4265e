#ifndef RESPAR_DATASET_HPP
#define RESPAR_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "respar/tensor.hpp"

namespace respar {

// 2-D points in [-1,1]^2 labeled by concentric rings of radius 0.5/0.75/1;
// the square corners outside radius 1 fall in the outer class.
struct Dataset {
  Tensor points;  // n x 2
  std::vector<int> labels;
};

// Points exactly on a circle belong to the inner class.
int circles_label(double x, double y);

Dataset gen_circles(int n, std::uint64_t seed);

void write_points_csv(const Dataset& data, const std::string& path);

}  // namespace respar

#endif  // RESPAR_DATASET_HPP
