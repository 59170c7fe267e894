#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace textclf {

// Dense row-major tensor of 64-bit floats. The shape product always equals
// values.size(); construction and every public operation preserve that.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double fill);
  static Tensor row(std::vector<double> v);  // rank-1
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

  std::size_t numel() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;  // rank-2 only
  std::size_t cols() const;

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& at2(std::size_t r, std::size_t c);
  double at2(std::size_t r, std::size_t c) const;

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

std::string shape_str(const std::vector<std::size_t>& shape);
std::string shape_str(const Tensor& t);
std::size_t shape_numel(const std::vector<std::size_t>& shape);

bool all_finite(const Tensor& t);

// C[m x n] = A[m x k] * B[k x n]. Throws ShapeError naming both shapes when the
// inner dimensions disagree or either operand is not rank-2.
Tensor matmul(const Tensor& a, const Tensor& b);

// y[out] = W[out x in] * x[in]
Tensor matvec(const Tensor& w, const Tensor& x);
// y[in] = W^T[in x out] * g[out]
Tensor matvec_transposed(const Tensor& w, const Tensor& g);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
void add_inplace(Tensor& into, const Tensor& from);
// W += g * x^T (outer product accumulate, used by layer backward rules)
void add_outer(Tensor& w, const Tensor& g, const Tensor& x);

enum class Activation { none, sigmoid, tanh, softmax };

double sigmoid(double x);

// Elementwise sigmoid/tanh; softmax over the last axis (rank-1 vector or the
// rows of a rank-2 batch), computed with max subtraction.
Tensor activation(Activation kind, const Tensor& x);

// Given post-activation values y and the gradient at the output, returns the
// gradient at the pre-activation. Softmax applies the full Jacobian.
Tensor activation_backward(Activation kind, const Tensor& y, const Tensor& grad_out);

const char* activation_name(Activation kind);
Activation activation_from_name(const std::string& name);

}  // namespace textclf
