#include "textclf/params.hpp"

#include "textclf/errors.hpp"

namespace textclf {

std::size_t ParamStore::add(std::string name, Tensor value, bool kernel) {
  params_.push_back({std::move(name), std::move(value), kernel});
  return params_.size() - 1;
}

std::size_t ParamStore::total_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

std::vector<Tensor> ParamStore::snapshot_values() const {
  std::vector<Tensor> snap;
  snap.reserve(params_.size());
  for (const auto& p : params_) snap.push_back(p.value);
  return snap;
}

void ParamStore::restore_values(const std::vector<Tensor>& snap) {
  if (snap.size() != params_.size())
    throw ShapeError("restore_values: snapshot has " + std::to_string(snap.size()) +
                     " tensors, store has " + std::to_string(params_.size()));
  for (std::size_t i = 0; i < snap.size(); ++i) {
    if (!snap[i].same_shape(params_[i].value))
      throw ShapeError("restore_values: shape mismatch at '" + params_[i].name + "'");
    params_[i].value = snap[i];
  }
}

GradBuffer make_grad_buffer(const ParamStore& store) {
  GradBuffer g;
  g.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i)
    g.push_back(Tensor::zeros(store.value(i).shape));
  return g;
}

void zero_grads(GradBuffer& g) {
  for (Tensor& t : g) std::fill(t.values.begin(), t.values.end(), 0.0);
}

void accumulate_grads(GradBuffer& into, const GradBuffer& from) {
  if (into.size() != from.size())
    throw ShapeError("accumulate_grads: buffer size mismatch");
  for (std::size_t i = 0; i < into.size(); ++i) add_inplace(into[i], from[i]);
}

void scale_grads(GradBuffer& g, double s) {
  for (Tensor& t : g)
    for (double& v : t.values) v *= s;
}

}  // namespace textclf
