#include "respar/tensor.hpp"

#include <cmath>

namespace respar {

namespace {

[[noreturn]] void throw_shape(const std::string& op, const Tensor& a, const Tensor& b) {
  throw ShapeError(op + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw_shape(op, a, b);
}

}  // namespace

Tensor::Tensor(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
  if (static_cast<long>(data.size()) != size()) {
    throw ShapeError("Tensor: data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str());
  }
}

std::string Tensor::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows) throw_shape("matmul", a, b);
  Tensor out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(k, j);
      out.at(i, j) = s;
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * s;
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape("hadamard", a, b);
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

Tensor add_rowvec(const Tensor& x, const Tensor& row) {
  if (row.rows != 1 || row.cols != x.cols) throw_shape("add_rowvec", x, row);
  Tensor out(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out.at(i, j) = x.at(i, j) + row.at(0, j);
  return out;
}

Tensor col_sum(const Tensor& x) {
  Tensor out(1, x.cols);
  for (int j = 0; j < x.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < x.rows; ++i) s += x.at(i, j);
    out.at(0, j) = s;
  }
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape("dot", a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::fabs(v));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape("max_abs_diff", a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

bool all_finite(const Tensor& a) {
  for (double v : a.data)
    if (!std::isfinite(v)) return false;
  return true;
}

void axpy_inplace(Tensor& y, double s, const Tensor& x) {
  require_same_shape("axpy", y, x);
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += s * x.data[i];
}

Tensor slice_rows(const Tensor& x, int row0, int nrows) {
  if (row0 < 0 || nrows < 0 || row0 + nrows > x.rows) {
    throw ShapeError("slice_rows: range [" + std::to_string(row0) + ", " +
                     std::to_string(row0 + nrows) + ") out of " + x.shape_str());
  }
  Tensor out(nrows, x.cols);
  std::copy(x.data.begin() + static_cast<long>(row0) * x.cols,
            x.data.begin() + static_cast<long>(row0 + nrows) * x.cols, out.data.begin());
  return out;
}

void assign_rows(Tensor& dst, int row0, const Tensor& src) {
  if (src.cols != dst.cols || row0 < 0 || row0 + src.rows > dst.rows) {
    throw ShapeError("assign_rows: cannot place " + src.shape_str() + " at row " +
                     std::to_string(row0) + " of " + dst.shape_str());
  }
  std::copy(src.data.begin(), src.data.end(),
            dst.data.begin() + static_cast<long>(row0) * dst.cols);
}

Tensor tanh_fwd(const Tensor& x) {
  Tensor out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = std::tanh(x.data[i]);
  return out;
}

Tensor tanh_bwd(const Tensor& x, const Tensor& upstream) {
  require_same_shape("tanh_bwd", x, upstream);
  Tensor out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double t = std::tanh(x.data[i]);
    out.data[i] = upstream.data[i] * (1.0 - t * t);
  }
  return out;
}

std::uint64_t Rng::next_u64() {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

Rng Rng::split() { return Rng(next_u64()); }

Tensor rng_uniform(Rng& rng, int rows, int cols, double lo, double hi) {
  if (!(lo < hi)) {
    throw std::invalid_argument("rng_uniform: requires lo < hi, got [" + std::to_string(lo) +
                                ", " + std::to_string(hi) + ")");
  }
  Tensor out(rows, cols);
  for (double& v : out.data) v = lo + (hi - lo) * rng.next_double();
  return out;
}

Tensor rng_normal(Rng& rng, int rows, int cols, double mean, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("rng_normal: sigma must be >= 0");
  Tensor out(rows, cols);
  // Box-Muller; one pair of uniforms per sample keeps the stream layout simple.
  for (double& v : out.data) {
    const double u1 = 1.0 - rng.next_double();  // (0, 1]
    const double u2 = rng.next_double();
    v = mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  return out;
}

}  // namespace respar
