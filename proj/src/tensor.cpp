#include "h2rat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "h2rat/errors.hpp"
#include "h2rat/kernels.hpp"

namespace h2rat {

std::string Shape::str() const {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : shape_{rows, cols}, data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : shape_{rows, cols}, data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_.str());
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged rows in Tensor::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(data));
}

Tensor Tensor::column(std::initializer_list<double> values) {
  return Tensor(values.size(), 1, std::vector<double>(values));
}

Tensor Tensor::column(std::span<const double> values) {
  return Tensor(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::col(std::size_t c) const {
  if (c >= cols()) {
    throw DimensionError("column " + std::to_string(c) + " out of range for " + shape_.str());
  }
  Tensor out(rows(), 1);
  for (std::size_t r = 0; r < rows(); ++r) out[r] = (*this)(r, c);
  return out;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite value produced by ") + what);
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + a.shape().str() + " and " +
                         b.shape().str() + " differ");
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions of " + a.shape().str() + " and " +
                         b.shape().str() + " do not agree");
  }
  Tensor out(a.rows(), b.cols());
  kernels::active().matmul(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
  require_finite(out, "matmul");
  return out;
}

Tensor transpose(const Tensor& t) {
  Tensor out(t.cols(), t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) out(c, r) = t(r, c);
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.rows(), a.cols());
  kernels::active().add(a.data(), b.data(), out.data(), a.size());
  require_finite(out, "add");
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor out(a.rows(), a.cols());
  kernels::active().mul(a.data(), b.data(), out.data(), a.size());
  require_finite(out, "hadamard");
  return out;
}

Tensor scale(const Tensor& t, double factor) {
  Tensor out(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] * factor;
  require_finite(out, "scale");
  return out;
}

Tensor broadcast_add_columns(const Tensor& m, const Tensor& v) {
  if (v.cols() != 1 || v.rows() != m.rows()) {
    throw DimensionError("broadcast_add_columns: vector " + v.shape().str() +
                         " does not match matrix rows of " + m.shape().str());
  }
  Tensor out(m.rows(), m.cols());
  kernels::active().add_row_bias(m.data(), v.data(), out.data(), m.rows(), m.cols());
  require_finite(out, "broadcast_add_columns");
  return out;
}

Tensor tanh_elem(const Tensor& t) {
  require_finite(t, "tanh input");
  Tensor out(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::tanh(t[i]);
  return out;
}

Tensor sigmoid_elem(const Tensor& t) {
  require_finite(t, "sigmoid input");
  Tensor out(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) {
    // Split by sign so exp never overflows.
    const double x = t[i];
    if (x >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      out[i] = e / (1.0 + e);
    }
  }
  return out;
}

Tensor softmax_vec(const Tensor& t) {
  if (t.empty()) throw InvalidArgument("softmax_vec: empty vector");
  if (t.cols() != 1) throw DimensionError("softmax_vec: expected a column, got " + t.shape().str());
  require_finite(t, "softmax input");
  const double peak = *std::max_element(t.values().begin(), t.values().end());
  Tensor out(t.rows(), 1);
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    out[i] = std::exp(t[i] - peak);
    total += out[i];
  }
  for (std::size_t i = 0; i < t.size(); ++i) out[i] /= total;
  return out;
}

double sum(const Tensor& t) {
  double s = 0.0;
  for (double x : t.values()) s += x;
  return s;
}

std::size_t argmax(const Tensor& t) {
  if (t.empty()) throw InvalidArgument("argmax of empty tensor");
  return static_cast<std::size_t>(
      std::distance(t.values().begin(), std::max_element(t.values().begin(), t.values().end())));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace h2rat
