#ifndef RESPAR_TENSOR_HPP
#define RESPAR_TENSOR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace respar {

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix of doubles. Rows index samples, columns index
// features, so per-sample adjoints are row vectors (left cotangents).
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // length rows*cols

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
  Tensor(int r, int c, std::vector<double> d);

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  long size() const { return static_cast<long>(rows) * cols; }
  bool empty() const { return rows == 0 && cols == 0; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const;
};

// Matrix product with a fixed ascending-index summation order.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor hadamard(const Tensor& a, const Tensor& b);
// x + row broadcast over every row of x (bias add).
Tensor add_rowvec(const Tensor& x, const Tensor& row);
// 1 x cols vector of column sums.
Tensor col_sum(const Tensor& x);
// Frobenius inner product.
double dot(const Tensor& a, const Tensor& b);
double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& a);
// y += s*x, the one in-place op; reserved for single-owner update steps.
void axpy_inplace(Tensor& y, double s, const Tensor& x);
Tensor slice_rows(const Tensor& x, int row0, int nrows);
void assign_rows(Tensor& dst, int row0, const Tensor& src);

Tensor tanh_fwd(const Tensor& x);
// upstream .* (1 - tanh(x)^2)
Tensor tanh_bwd(const Tensor& x, const Tensor& upstream);

// Counter-based 64-bit generator (splitmix64). A given seed yields the same
// stream on every run and thread count; split() derives an independent stream.
struct Rng {
  std::uint64_t state = 0;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next_u64();
  double next_double();  // uniform in [0, 1)
  Rng split();
};

Tensor rng_uniform(Rng& rng, int rows, int cols, double lo, double hi);
Tensor rng_normal(Rng& rng, int rows, int cols, double mean, double sigma);

}  // namespace respar

#endif  // RESPAR_TENSOR_HPP
