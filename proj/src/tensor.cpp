#include "textclf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "textclf/errors.hpp"
#include "textclf/kernels.hpp"

namespace textclf {

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  std::size_t n = shape_numel(shape);
  t.shape = std::move(shape);
  t.values.assign(n, 0.0);
  return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double fill) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.values.begin(), t.values.end(), fill);
  return t;
}

Tensor Tensor::row(std::vector<double> v) {
  Tensor t;
  t.shape = {v.size()};
  t.values = std::move(v);
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  if (rows * cols != v.size())
    throw ShapeError("matrix: " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " needs " + std::to_string(rows * cols) + " values, got " +
                     std::to_string(v.size()));
  Tensor t;
  t.shape = {rows, cols};
  t.values = std::move(v);
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw ShapeError("rows: tensor of shape " + shape_str(*this) + " is not rank-2");
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ShapeError("cols: tensor of shape " + shape_str(*this) + " is not rank-2");
  return shape[1];
}

double& Tensor::at2(std::size_t r, std::size_t c) { return values[r * shape[1] + c]; }
double Tensor::at2(std::size_t r, std::size_t c) const { return values[r * shape[1] + c]; }

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::string shape_str(const Tensor& t) { return shape_str(t.shape); }

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

bool all_finite(const Tensor& t) {
  for (double v : t.values)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0])
    throw ShapeError("matmul: incompatible shapes " + shape_str(a) + " and " + shape_str(b));
  Tensor c = Tensor::zeros({a.shape[0], b.shape[1]});
  kernels::matmul_auto(a.values.data(), b.values.data(), c.values.data(), a.shape[0], a.shape[1],
                       b.shape[1]);
  return c;
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  if (w.rank() != 2 || x.rank() != 1 || w.shape[1] != x.shape[0])
    throw ShapeError("matvec: incompatible shapes " + shape_str(w) + " and " + shape_str(x));
  Tensor y = Tensor::zeros({w.shape[0]});
  for (std::size_t i = 0; i < w.shape[0]; ++i) {
    double acc = 0.0;
    const double* row = w.values.data() + i * w.shape[1];
    for (std::size_t j = 0; j < w.shape[1]; ++j) acc += row[j] * x.values[j];
    y.values[i] = acc;
  }
  return y;
}

Tensor matvec_transposed(const Tensor& w, const Tensor& g) {
  if (w.rank() != 2 || g.rank() != 1 || w.shape[0] != g.shape[0])
    throw ShapeError("matvec_transposed: incompatible shapes " + shape_str(w) + " and " +
                     shape_str(g));
  Tensor y = Tensor::zeros({w.shape[1]});
  for (std::size_t i = 0; i < w.shape[0]; ++i) {
    const double* row = w.values.data() + i * w.shape[1];
    double gi = g.values[i];
    for (std::size_t j = 0; j < w.shape[1]; ++j) y.values[j] += row[j] * gi;
  }
  return y;
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor c = a;
  for (std::size_t i = 0; i < c.numel(); ++i) c.values[i] += b.values[i];
  return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor c = a;
  for (std::size_t i = 0; i < c.numel(); ++i) c.values[i] -= b.values[i];
  return c;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor c = a;
  for (std::size_t i = 0; i < c.numel(); ++i) c.values[i] *= b.values[i];
  return c;
}

Tensor scale(const Tensor& a, double s) {
  Tensor c = a;
  for (double& v : c.values) v *= s;
  return c;
}

void add_inplace(Tensor& into, const Tensor& from) {
  require_same_shape(into, from, "add_inplace");
  for (std::size_t i = 0; i < into.numel(); ++i) into.values[i] += from.values[i];
}

void add_outer(Tensor& w, const Tensor& g, const Tensor& x) {
  if (w.rank() != 2 || g.rank() != 1 || x.rank() != 1 || w.shape[0] != g.shape[0] ||
      w.shape[1] != x.shape[0])
    throw ShapeError("add_outer: incompatible shapes " + shape_str(w) + ", " + shape_str(g) +
                     ", " + shape_str(x));
  for (std::size_t i = 0; i < g.shape[0]; ++i) {
    double gi = g.values[i];
    double* row = w.values.data() + i * w.shape[1];
    for (std::size_t j = 0; j < x.shape[0]; ++j) row[j] += gi * x.values[j];
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {
// Softmax over one contiguous stretch of `n` values, max-subtracted.
void softmax_span(const double* in, double* out, std::size_t n) {
  double mx = in[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, in[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
}
}  // namespace

Tensor activation(Activation kind, const Tensor& x) {
  Tensor y = x;
  switch (kind) {
    case Activation::none:
      return y;
    case Activation::sigmoid:
      for (double& v : y.values) v = sigmoid(v);
      return y;
    case Activation::tanh:
      for (double& v : y.values) v = std::tanh(v);
      return y;
    case Activation::softmax: {
      if (x.rank() != 1 && x.rank() != 2)
        throw ShapeError("softmax: need a vector or batch of vectors, got " + shape_str(x));
      std::size_t width = x.shape.back();
      if (width == 0) throw ShapeError("softmax: empty last axis");
      std::size_t rows = x.numel() / width;
      for (std::size_t r = 0; r < rows; ++r)
        softmax_span(x.values.data() + r * width, y.values.data() + r * width, width);
      return y;
    }
  }
  throw ShapeError("activation: unknown kind");
}

Tensor activation_backward(Activation kind, const Tensor& y, const Tensor& grad_out) {
  require_same_shape(y, grad_out, "activation_backward");
  Tensor g = grad_out;
  switch (kind) {
    case Activation::none:
      return g;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < g.numel(); ++i)
        g.values[i] *= y.values[i] * (1.0 - y.values[i]);
      return g;
    case Activation::tanh:
      for (std::size_t i = 0; i < g.numel(); ++i)
        g.values[i] *= 1.0 - y.values[i] * y.values[i];
      return g;
    case Activation::softmax: {
      // dL/dx_i = y_i * (g_i - sum_j g_j y_j), per row.
      std::size_t width = y.shape.back();
      std::size_t rows = y.numel() / width;
      for (std::size_t r = 0; r < rows; ++r) {
        const double* yr = y.values.data() + r * width;
        double* gr = g.values.data() + r * width;
        double dot = 0.0;
        for (std::size_t i = 0; i < width; ++i) dot += gr[i] * yr[i];
        for (std::size_t i = 0; i < width; ++i) gr[i] = yr[i] * (gr[i] - dot);
      }
      return g;
    }
  }
  throw ShapeError("activation_backward: unknown kind");
}

const char* activation_name(Activation kind) {
  switch (kind) {
    case Activation::none: return "none";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

Activation activation_from_name(const std::string& name) {
  if (name == "none") return Activation::none;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "softmax") return Activation::softmax;
  throw ShapeError("activation_from_name: unknown activation '" + name + "'");
}

}  // namespace textclf
