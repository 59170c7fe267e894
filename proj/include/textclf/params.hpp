#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "textclf/tensor.hpp"

namespace textclf {

struct NamedParam {
  std::string name;
  Tensor value;
  bool kernel = false;  // weight matrices; L2 skips biases and non-kernels
};

// Flat registry of a model's trainable tensors. Fixed once the model is built;
// layers refer to entries by index, so the vector must not grow afterwards.
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor value, bool kernel);
  std::size_t size() const { return params_.size(); }
  NamedParam& at(std::size_t i) { return params_[i]; }
  const NamedParam& at(std::size_t i) const { return params_[i]; }
  Tensor& value(std::size_t i) { return params_[i].value; }
  const Tensor& value(std::size_t i) const { return params_[i].value; }
  std::size_t total_scalars() const;

  std::vector<Tensor> snapshot_values() const;
  void restore_values(const std::vector<Tensor>& snap);

 private:
  std::vector<NamedParam> params_;
};

// Gradient tensors mirroring a store's shapes, in store order.
using GradBuffer = std::vector<Tensor>;

GradBuffer make_grad_buffer(const ParamStore& store);
void zero_grads(GradBuffer& g);
// into += from, elementwise in index order (deterministic reduction).
void accumulate_grads(GradBuffer& into, const GradBuffer& from);
void scale_grads(GradBuffer& g, double s);

}  // namespace textclf
