#include <algorithm>
#include <cmath>

#include "textclf/errors.hpp"
#include "textclf/optim.hpp"

// Losses, L2, and the AMSGrad update. The training loop lives in trainer.cpp.

namespace textclf {

LossResult loss(LossKind kind, const Tensor& pred, int gold) {
  constexpr double kFloor = 1e-12;
  switch (kind) {
    case LossKind::binary_cross_entropy: {
      if (pred.numel() != 1)
        throw ShapeError("bce: expected a single probability, got " + shape_str(pred));
      if (gold != 0 && gold != 1)
        throw ShapeError("bce: gold class must be 0 or 1, got " + std::to_string(gold));
      double p = pred.values[0];
      // Class 0 is the positive class, so y = 1 when gold == 0.
      double y = gold == 0 ? 1.0 : 0.0;
      double pc = std::clamp(p, kFloor, 1.0 - kFloor);
      LossResult r;
      r.value = -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
      r.grad = Tensor::zeros({1});
      r.grad.values[0] = (pc - y) / (pc * (1.0 - pc));
      return r;
    }
    case LossKind::categorical_cross_entropy: {
      if (pred.rank() != 1 || pred.numel() < 2)
        throw ShapeError("cce: expected a probability vector, got " + shape_str(pred));
      if (gold < 0 || static_cast<std::size_t>(gold) >= pred.numel())
        throw ShapeError("cce: gold class " + std::to_string(gold) + " outside " +
                         shape_str(pred));
      double pg = std::max(pred.values[static_cast<std::size_t>(gold)], kFloor);
      LossResult r;
      r.value = -std::log(pg);
      r.grad = Tensor::zeros(pred.shape);
      r.grad.values[static_cast<std::size_t>(gold)] = -1.0 / pg;
      return r;
    }
  }
  throw ShapeError("loss: unknown kind");
}

double l2_penalty(const ParamStore& ps, double lambda, GradBuffer* grads) {
  if (lambda < 0.0) throw ConfigError("l2_penalty: negative lambda");
  double sq = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const NamedParam& p = ps.at(i);
    if (!p.kernel) continue;
    for (std::size_t j = 0; j < p.value.numel(); ++j) {
      double w = p.value.values[j];
      sq += w * w;
      if (grads && lambda != 0.0) (*grads)[i].values[j] += 2.0 * lambda * w;
    }
  }
  return lambda * sq;
}

Amsgrad::Amsgrad(const ParamStore& ps, AmsgradConfig cfg) : cfg_(cfg) {
  m_.reserve(ps.size());
  v_.reserve(ps.size());
  vhat_.reserve(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    m_.push_back(Tensor::zeros(ps.value(i).shape));
    v_.push_back(Tensor::zeros(ps.value(i).shape));
    vhat_.push_back(Tensor::zeros(ps.value(i).shape));
  }
}

void Amsgrad::step(ParamStore& ps, const GradBuffer& grads) {
  if (grads.size() != m_.size())
    throw ShapeError("Amsgrad::step: gradient buffer size mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Tensor& theta = ps.value(i);
    const Tensor& g = grads[i];
    if (!g.same_shape(theta))
      throw ShapeError("Amsgrad::step: gradient shape mismatch at '" + ps.at(i).name + "'");
    for (std::size_t j = 0; j < g.numel(); ++j) {
      double gj = g.values[j];
      double& mj = m_[i].values[j];
      double& vj = v_[i].values[j];
      double& vh = vhat_[i].values[j];
      mj = cfg_.beta1 * mj + (1.0 - cfg_.beta1) * gj;
      vj = cfg_.beta2 * vj + (1.0 - cfg_.beta2) * gj * gj;
      vh = std::max(vh, vj);
      theta.values[j] -= cfg_.lr * mj / (std::sqrt(vh) + cfg_.epsilon);
    }
  }
  ++steps_;
}

}  // namespace textclf
