#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace h2rat {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense row-major rank-2 array of doubles. Vectors are d x 1 columns.
///
/// Tensors are plain values. Differentiation lives in Tape, which records the
/// free functions below and holds its own gradient buffers.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor column(std::initializer_list<double> values);
  static Tensor column(std::span<const double> values);
  static Tensor identity(std::size_t n);

  std::size_t rows() const { return shape_.rows; }
  std::size_t cols() const { return shape_.cols; }
  std::size_t size() const { return data_.size(); }
  const Shape& shape() const { return shape_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_.cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_.cols + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  Tensor col(std::size_t c) const;
  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Throws NumericError naming `what` when t holds a NaN or infinity.
void require_finite(const Tensor& t, const char* what);

// Pure operations. Each validates shapes (DimensionError), and checks its
// result is finite (NumericError).

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& t);
Tensor add(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, double factor);

/// Adds v to every column of m: out(i, j) = m(i, j) + v(i).
Tensor broadcast_add_columns(const Tensor& m, const Tensor& v);

Tensor tanh_elem(const Tensor& t);
Tensor sigmoid_elem(const Tensor& t);

/// Softmax over a d x 1 vector with max-subtraction.
Tensor softmax_vec(const Tensor& t);

double sum(const Tensor& t);
std::size_t argmax(const Tensor& t);

// Largest |a - b| over matching shapes.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace h2rat
