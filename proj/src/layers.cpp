#include <algorithm>
#include <cmath>
#include <string>

#include "textclf/errors.hpp"
#include "textclf/kernels.hpp"
#include "textclf/layers.hpp"

// Non-recurrent layers: embedding, convolution, pooling, noise, dropout, dense.

namespace textclf {

EmbeddingLayer::EmbeddingLayer(ParamStore* ps, std::size_t table, std::size_t vocab,
                               std::size_t dim)
    : ps_(ps), table_(table), vocab_(vocab), dim_(dim) {}

Tensor EmbeddingLayer::forward(const std::vector<int>& ids) {
  if (ids.empty()) throw ShapeError("EmbeddingLayer: empty id sequence");
  const Tensor& table = ps_->value(table_);
  Tensor out = Tensor::zeros({ids.size(), dim_});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    int id = ids[t];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_)
      throw ShapeError("EmbeddingLayer: id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(vocab_));
    const double* row = table.values.data() + static_cast<std::size_t>(id) * dim_;
    std::copy(row, row + dim_, out.values.data() + t * dim_);
  }
  ids_ = ids;
  has_trace_ = true;
  return out;
}

void EmbeddingLayer::backward(const Tensor& grad_seq, GradBuffer& grads) {
  if (!has_trace_) throw ShapeError("EmbeddingLayer::backward: no forward trace");
  Tensor& dtable = grads[table_];
  for (std::size_t t = 0; t < ids_.size(); ++t) {
    double* row = dtable.values.data() + static_cast<std::size_t>(ids_[t]) * dim_;
    for (std::size_t j = 0; j < dim_; ++j) row[j] += grad_seq.at2(t, j);
  }
}

// ---------------------------------------------------------------------------

ConvBranchLayer::ConvBranchLayer(ParamStore* ps, std::size_t filters, std::size_t biases,
                                 std::size_t height, std::size_t width, std::size_t nfilters)
    : ps_(ps), filters_(filters), biases_(biases), height_(height), width_(width),
      nfilters_(nfilters) {}

Tensor ConvBranchLayer::forward(const Tensor& seq) {
  if (seq.rank() != 2 || seq.shape[1] != width_)
    throw ShapeError("ConvBranchLayer: expected [L x " + std::to_string(width_) + "], got " +
                     shape_str(seq));
  std::size_t L = seq.shape[0];
  if (L < height_)
    throw ShapeError("ConvBranchLayer: sequence length " + std::to_string(L) +
                     " below filter height " + std::to_string(height_));
  const Tensor& filt = ps_->value(filters_);
  const Tensor& bias = ps_->value(biases_);
  std::size_t positions = L - height_ + 1;
  std::vector<double> featmap(positions * nfilters_);
  kernels::conv_valid_auto(seq.values.data(), L, width_, filt.values.data(), height_,
                           bias.values.data(), nfilters_, featmap.data());

  Tensor out = Tensor::zeros({nfilters_});
  argmax_.assign(nfilters_, 0);
  for (std::size_t f = 0; f < nfilters_; ++f) {
    double best = featmap[f];
    std::size_t best_p = 0;
    for (std::size_t p = 1; p < positions; ++p) {
      double v = featmap[p * nfilters_ + f];
      if (v > best) {  // strict: first position wins ties
        best = v;
        best_p = p;
      }
    }
    out.values[f] = best;
    argmax_[f] = best_p;
  }
  input_ = seq;
  has_trace_ = true;
  return out;
}

Tensor ConvBranchLayer::backward(const Tensor& grad_out, GradBuffer& grads) {
  if (!has_trace_) throw ShapeError("ConvBranchLayer::backward: no forward trace");
  const Tensor& filt = ps_->value(filters_);
  Tensor& dfilt = grads[filters_];
  Tensor& dbias = grads[biases_];
  std::size_t L = input_.shape[0];
  Tensor dx = Tensor::zeros({L, width_});
  for (std::size_t f = 0; f < nfilters_; ++f) {
    double g = grad_out.values[f];
    std::size_t p = argmax_[f];
    dbias.values[f] += g;
    for (std::size_t i = 0; i < height_; ++i) {
      const double* in_row = input_.values.data() + (p + i) * width_;
      double* dx_row = dx.values.data() + (p + i) * width_;
      for (std::size_t j = 0; j < width_; ++j) {
        std::size_t fi = (i * width_ + j) * nfilters_ + f;
        dfilt.values[fi] += g * in_row[j];
        dx_row[j] += g * filt.values[fi];
      }
    }
  }
  return dx;
}

ConvStack::ConvStack(ParamStore* ps, const std::string& prefix, std::size_t width,
                     std::size_t nfilters, RngStream& rng) {
  auto glorot = InitScheme::glorot_uniform();
  for (std::size_t h : {std::size_t{1}, std::size_t{3}, std::size_t{5}, std::size_t{7}}) {
    std::string base = prefix + ".h" + std::to_string(h);
    std::size_t filters =
        ps->add(base + ".filters", init_params(glorot, {h, width, nfilters}, rng), true);
    std::size_t biases = ps->add(base + ".bias", Tensor::zeros({nfilters}), false);
    branches_.emplace_back(ps, filters, biases, h, width, nfilters);
  }
}

Tensor ConvStack::forward(const Tensor& seq) {
  if (seq.rank() != 2 || seq.shape[0] < min_length())
    throw ShapeError("ConvStack: sequence length must be at least " +
                     std::to_string(min_length()) + ", got " + shape_str(seq));
  Tensor out = Tensor::zeros({out_width()});
  std::size_t off = 0;
  for (auto& b : branches_) {
    Tensor part = b.forward(seq);
    std::copy(part.values.begin(), part.values.end(), out.values.begin() + off);
    off += part.numel();
  }
  return out;
}

Tensor ConvStack::backward(const Tensor& grad_out, GradBuffer& grads) {
  Tensor dx;
  std::size_t off = 0;
  for (auto& b : branches_) {
    Tensor part = Tensor::row(std::vector<double>(grad_out.values.begin() + off,
                                                  grad_out.values.begin() + off + b.nfilters()));
    Tensor dxi = b.backward(part, grads);
    if (dx.numel() == 0)
      dx = std::move(dxi);
    else
      add_inplace(dx, dxi);
    off += b.nfilters();
  }
  return dx;
}

std::size_t ConvStack::out_width() const {
  std::size_t w = 0;
  for (const auto& b : branches_) w += b.nfilters();
  return w;
}

// ---------------------------------------------------------------------------

Tensor global_average_pool(const Tensor& seq, const std::vector<std::uint8_t>& mask) {
  if (seq.rank() != 2)
    throw ShapeError("global_average_pool: need [L x d], got " + shape_str(seq));
  if (mask.size() != seq.shape[0])
    throw ShapeError("global_average_pool: mask length " + std::to_string(mask.size()) +
                     " vs sequence length " + std::to_string(seq.shape[0]));
  std::size_t count = 0;
  for (auto m : mask) count += m ? 1 : 0;
  if (count == 0) throw ShapeError("global_average_pool: all-zero mask");
  std::size_t d = seq.shape[1];
  Tensor out = Tensor::zeros({d});
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (!mask[t]) continue;
    for (std::size_t j = 0; j < d; ++j) out.values[j] += seq.at2(t, j);
  }
  for (double& v : out.values) v /= static_cast<double>(count);
  return out;
}

Tensor GlobalAveragePool::forward(const Tensor& seq, const std::vector<std::uint8_t>& mask) {
  Tensor out = global_average_pool(seq, mask);
  mask_ = mask;
  len_ = seq.shape[0];
  dim_ = seq.shape[1];
  has_trace_ = true;
  return out;
}

Tensor GlobalAveragePool::backward(const Tensor& grad_out) {
  if (!has_trace_) throw ShapeError("GlobalAveragePool::backward: no forward trace");
  std::size_t count = 0;
  for (auto m : mask_) count += m ? 1 : 0;
  Tensor dx = Tensor::zeros({len_, dim_});
  for (std::size_t t = 0; t < len_; ++t) {
    if (!mask_[t]) continue;
    for (std::size_t j = 0; j < dim_; ++j)
      dx.at2(t, j) = grad_out.values[j] / static_cast<double>(count);
  }
  return dx;
}

// ---------------------------------------------------------------------------

GaussianNoise::GaussianNoise(double stddev) : stddev_(stddev) {
  if (stddev < 0.0) throw ShapeError("GaussianNoise: negative stddev");
}

Tensor GaussianNoise::forward(const Tensor& x, Phase phase, RngStream* rng) {
  if (phase == Phase::eval || stddev_ == 0.0) {
    noise_ = Tensor::zeros(x.shape);
    has_trace_ = true;
    return x;
  }
  if (!rng) throw ShapeError("GaussianNoise: train forward needs an rng");
  noise_ = Tensor::zeros(x.shape);
  for (double& v : noise_.values) v = rng->normal(0.0, stddev_);
  has_trace_ = true;
  return add(x, noise_);
}

Tensor GaussianNoise::forward_replay(const Tensor& x) const {
  if (!has_trace_) throw ShapeError("GaussianNoise::forward_replay: no stored noise");
  return add(x, noise_);
}

Tensor GaussianNoise::backward(const Tensor& grad_out) const {
  if (!has_trace_) throw ShapeError("GaussianNoise::backward: no forward trace");
  return grad_out;
}

Dropout::Dropout(double rate) : rate_(rate) {
  if (rate < 0.0 || rate >= 1.0)
    throw ShapeError("Dropout: rate must lie in [0, 1), got " + std::to_string(rate));
}

Tensor Dropout::forward(const Tensor& x, Phase phase, RngStream* rng) {
  if (phase == Phase::eval || rate_ == 0.0) {
    identity_ = true;
    has_trace_ = true;
    return x;
  }
  if (!rng) throw ShapeError("Dropout: train forward needs an rng");
  identity_ = false;
  keep_.assign(x.numel(), 1);
  Tensor out = x;
  double inv = 1.0 / (1.0 - rate_);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (rng->uniform() < rate_) {
      keep_[i] = 0;
      out.values[i] = 0.0;
    } else {
      out.values[i] *= inv;
    }
  }
  has_trace_ = true;
  return out;
}

Tensor Dropout::forward_replay(const Tensor& x) const {
  if (!has_trace_) throw ShapeError("Dropout::forward_replay: no stored mask");
  if (identity_) return x;
  Tensor out = x;
  double inv = 1.0 / (1.0 - rate_);
  for (std::size_t i = 0; i < x.numel(); ++i) out.values[i] = keep_[i] ? x.values[i] * inv : 0.0;
  return out;
}

Tensor Dropout::backward(const Tensor& grad_out) const {
  if (!has_trace_) throw ShapeError("Dropout::backward: no forward trace");
  if (identity_) return grad_out;
  Tensor g = grad_out;
  double inv = 1.0 / (1.0 - rate_);
  for (std::size_t i = 0; i < g.numel(); ++i) g.values[i] = keep_[i] ? g.values[i] * inv : 0.0;
  return g;
}

// ---------------------------------------------------------------------------

DenseLayer::DenseLayer(ParamStore* ps, std::size_t w, std::size_t b, Activation act)
    : ps_(ps), w_(w), b_(b), act_(act) {}

Tensor DenseLayer::forward(const Tensor& x) {
  const Tensor& W = ps_->value(w_);
  const Tensor& bias = ps_->value(b_);
  Tensor pre = add(matvec(W, x), bias);
  out_ = activation(act_, pre);
  x_ = x;
  has_trace_ = true;
  return out_;
}

Tensor DenseLayer::backward(const Tensor& grad_out, GradBuffer& grads) {
  if (!has_trace_) throw ShapeError("DenseLayer::backward: no forward trace");
  Tensor da = activation_backward(act_, out_, grad_out);
  add_outer(grads[w_], da, x_);
  add_inplace(grads[b_], da);
  return matvec_transposed(ps_->value(w_), da);
}

std::size_t add_dense_params(ParamStore& ps, const std::string& prefix, std::size_t in,
                             std::size_t out, const InitScheme& kernel_init, RngStream& rng,
                             std::size_t* bias_id) {
  std::size_t w = ps.add(prefix + ".W", init_params(kernel_init, {out, in}, rng), true);
  std::size_t b = ps.add(prefix + ".b", Tensor::zeros({out}), false);
  if (bias_id) *bias_id = b;
  return w;
}

}  // namespace textclf
