#include <cmath>
#include <string>

#include "textclf/errors.hpp"
#include "textclf/layers.hpp"

// Recurrent cells and their sequence/bidirectional wrappers.

namespace textclf {

namespace {
void check_vec(const Tensor& v, std::size_t want, const char* what) {
  if (v.rank() != 1 || v.shape[0] != want)
    throw ShapeError(std::string(what) + ": expected [" + std::to_string(want) + "], got " +
                     shape_str(v));
}

Tensor sigmoid_vec(const Tensor& x) { return activation(Activation::sigmoid, x); }
Tensor tanh_vec(const Tensor& x) { return activation(Activation::tanh, x); }

// d(pre-activation) for a sigmoid gate given gate output y and dL/dy.
Tensor sigmoid_pre_grad(const Tensor& y, const Tensor& dy) {
  return activation_backward(Activation::sigmoid, y, dy);
}

Tensor tanh_pre_grad(const Tensor& y, const Tensor& dy) {
  return activation_backward(Activation::tanh, y, dy);
}
}  // namespace

GruStepTrace gru_step(const GruWeights& w, const Tensor& x, const Tensor& h_prev) {
  std::size_t hidden = w.Wz->shape[0];
  std::size_t input = w.Wz->shape[1];
  check_vec(x, input, "gru_step x");
  check_vec(h_prev, hidden, "gru_step h_prev");

  GruStepTrace t;
  t.x = x;
  t.h_prev = h_prev;
  t.z = sigmoid_vec(add(add(matvec(*w.Wz, x), matvec(*w.Uz, h_prev)), *w.bz));
  t.r = sigmoid_vec(add(add(matvec(*w.Wr, x), matvec(*w.Ur, h_prev)), *w.br));
  Tensor uh = matvec(*w.Uh, h_prev);
  t.hcand = tanh_vec(add(add(matvec(*w.Wh, x), hadamard(t.r, uh)), *w.bh));
  t.h = Tensor::zeros({hidden});
  for (std::size_t i = 0; i < hidden; ++i)
    t.h.values[i] = (1.0 - t.z.values[i]) * h_prev.values[i] + t.z.values[i] * t.hcand.values[i];
  return t;
}

void gru_step_backward(const GruWeights& w, const GruStepTrace& t, const Tensor& dh,
                       const GruGradRefs& g, Tensor& dx_out, Tensor& dh_prev_out) {
  std::size_t hidden = t.h.shape[0];

  // h = (1-z).h_prev + z.hcand
  Tensor dz = Tensor::zeros({hidden});
  Tensor dhcand = Tensor::zeros({hidden});
  Tensor dh_prev = Tensor::zeros({hidden});
  for (std::size_t i = 0; i < hidden; ++i) {
    dz.values[i] = dh.values[i] * (t.hcand.values[i] - t.h_prev.values[i]);
    dhcand.values[i] = dh.values[i] * t.z.values[i];
    dh_prev.values[i] = dh.values[i] * (1.0 - t.z.values[i]);
  }

  // hcand = tanh(Wh x + r.(Uh h_prev) + bh)
  Tensor da_h = tanh_pre_grad(t.hcand, dhcand);
  Tensor uh = matvec(*w.Uh, t.h_prev);  // recomputed rather than stored in the trace
  Tensor dr = hadamard(da_h, uh);
  Tensor da_h_r = hadamard(da_h, t.r);
  add_outer(*g.dWh, da_h, t.x);
  add_outer(*g.dUh, da_h_r, t.h_prev);
  add_inplace(*g.dbh, da_h);
  add_inplace(dh_prev, matvec_transposed(*w.Uh, da_h_r));
  Tensor dx = matvec_transposed(*w.Wh, da_h);

  // z and r gates
  Tensor da_z = sigmoid_pre_grad(t.z, dz);
  add_outer(*g.dWz, da_z, t.x);
  add_outer(*g.dUz, da_z, t.h_prev);
  add_inplace(*g.dbz, da_z);
  add_inplace(dx, matvec_transposed(*w.Wz, da_z));
  add_inplace(dh_prev, matvec_transposed(*w.Uz, da_z));

  Tensor da_r = sigmoid_pre_grad(t.r, dr);
  add_outer(*g.dWr, da_r, t.x);
  add_outer(*g.dUr, da_r, t.h_prev);
  add_inplace(*g.dbr, da_r);
  add_inplace(dx, matvec_transposed(*w.Wr, da_r));
  add_inplace(dh_prev, matvec_transposed(*w.Ur, da_r));

  dx_out = std::move(dx);
  dh_prev_out = std::move(dh_prev);
}

LstmStepTrace lstm_step(const LstmWeights& w, const Tensor& x, const Tensor& h_prev,
                        const Tensor& c_prev) {
  std::size_t hidden = w.Wi->shape[0];
  std::size_t input = w.Wi->shape[1];
  check_vec(x, input, "lstm_step x");
  check_vec(h_prev, hidden, "lstm_step h_prev");
  check_vec(c_prev, hidden, "lstm_step c_prev");

  LstmStepTrace t;
  t.x = x;
  t.h_prev = h_prev;
  t.c_prev = c_prev;
  t.i = sigmoid_vec(add(add(matvec(*w.Wi, x), matvec(*w.Ui, h_prev)), *w.bi));
  t.f = sigmoid_vec(add(add(matvec(*w.Wf, x), matvec(*w.Uf, h_prev)), *w.bf));
  t.o = sigmoid_vec(add(add(matvec(*w.Wo, x), matvec(*w.Uo, h_prev)), *w.bo));
  t.g = tanh_vec(add(add(matvec(*w.Wg, x), matvec(*w.Ug, h_prev)), *w.bg));
  t.c = add(hadamard(t.f, c_prev), hadamard(t.i, t.g));
  t.h = Tensor::zeros({hidden});
  for (std::size_t j = 0; j < hidden; ++j)
    t.h.values[j] = t.o.values[j] * std::tanh(t.c.values[j]);
  return t;
}

void lstm_step_backward(const LstmWeights& w, const LstmStepTrace& t, const Tensor& dh,
                        const Tensor& dc_in, const LstmGradRefs& g, Tensor& dx_out,
                        Tensor& dh_prev_out, Tensor& dc_prev_out) {
  std::size_t hidden = t.h.shape[0];

  Tensor do_ = Tensor::zeros({hidden});
  Tensor dc = dc_in;
  for (std::size_t j = 0; j < hidden; ++j) {
    double tc = std::tanh(t.c.values[j]);
    do_.values[j] = dh.values[j] * tc;
    dc.values[j] += dh.values[j] * t.o.values[j] * (1.0 - tc * tc);
  }

  Tensor df = hadamard(dc, t.c_prev);
  Tensor di = hadamard(dc, t.g);
  Tensor dg = hadamard(dc, t.i);
  Tensor dc_prev = hadamard(dc, t.f);

  Tensor da_i = sigmoid_pre_grad(t.i, di);
  Tensor da_f = sigmoid_pre_grad(t.f, df);
  Tensor da_o = sigmoid_pre_grad(t.o, do_);
  Tensor da_g = tanh_pre_grad(t.g, dg);

  add_outer(*g.dWi, da_i, t.x);
  add_outer(*g.dWf, da_f, t.x);
  add_outer(*g.dWo, da_o, t.x);
  add_outer(*g.dWg, da_g, t.x);
  add_outer(*g.dUi, da_i, t.h_prev);
  add_outer(*g.dUf, da_f, t.h_prev);
  add_outer(*g.dUo, da_o, t.h_prev);
  add_outer(*g.dUg, da_g, t.h_prev);
  add_inplace(*g.dbi, da_i);
  add_inplace(*g.dbf, da_f);
  add_inplace(*g.dbo, da_o);
  add_inplace(*g.dbg, da_g);

  Tensor dx = matvec_transposed(*w.Wi, da_i);
  add_inplace(dx, matvec_transposed(*w.Wf, da_f));
  add_inplace(dx, matvec_transposed(*w.Wo, da_o));
  add_inplace(dx, matvec_transposed(*w.Wg, da_g));

  Tensor dh_prev = matvec_transposed(*w.Ui, da_i);
  add_inplace(dh_prev, matvec_transposed(*w.Uf, da_f));
  add_inplace(dh_prev, matvec_transposed(*w.Uo, da_o));
  add_inplace(dh_prev, matvec_transposed(*w.Ug, da_g));

  dx_out = std::move(dx);
  dh_prev_out = std::move(dh_prev);
  dc_prev_out = std::move(dc_prev);
}

Tensor bidirectional_run(const GruWeights& fwd, const GruWeights& bwd, const Tensor& seq) {
  if (seq.rank() != 2 || seq.shape[0] == 0)
    throw ShapeError("bidirectional_run: need a nonempty [L x input] sequence, got " +
                     shape_str(seq));
  std::size_t L = seq.shape[0], input = seq.shape[1];
  std::size_t hf = fwd.Wz->shape[0], hb = bwd.Wz->shape[0];
  if (fwd.Wz->shape[1] != input || bwd.Wz->shape[1] != input)
    throw ShapeError("bidirectional_run: cells expect input " +
                     std::to_string(fwd.Wz->shape[1]) + "/" + std::to_string(bwd.Wz->shape[1]) +
                     ", sequence has " + std::to_string(input));

  Tensor out = Tensor::zeros({L, hf + hb});
  Tensor h = Tensor::zeros({hf});
  for (std::size_t s = 0; s < L; ++s) {
    Tensor x = Tensor::row(std::vector<double>(seq.values.begin() + s * input,
                                               seq.values.begin() + (s + 1) * input));
    h = gru_step(fwd, x, h).h;
    for (std::size_t j = 0; j < hf; ++j) out.at2(s, j) = h.values[j];
  }
  h = Tensor::zeros({hb});
  for (std::size_t s = L; s-- > 0;) {
    Tensor x = Tensor::row(std::vector<double>(seq.values.begin() + s * input,
                                               seq.values.begin() + (s + 1) * input));
    h = gru_step(bwd, x, h).h;
    for (std::size_t j = 0; j < hb; ++j) out.at2(s, hf + j) = h.values[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameter wiring.
// ---------------------------------------------------------------------------

GruParamIds add_gru_params(ParamStore& ps, const std::string& prefix, std::size_t input,
                           std::size_t hidden, RngStream& rng) {
  auto glorot = InitScheme::glorot_uniform();
  auto W = [&](const char* n) {
    return ps.add(prefix + "." + n, init_params(glorot, {hidden, input}, rng), true);
  };
  auto U = [&](const char* n) {
    return ps.add(prefix + "." + n, init_params(glorot, {hidden, hidden}, rng), true);
  };
  auto b = [&](const char* n) { return ps.add(prefix + "." + n, Tensor::zeros({hidden}), false); };
  GruParamIds ids;
  ids.Wz = W("Wz");
  ids.Wr = W("Wr");
  ids.Wh = W("Wh");
  ids.Uz = U("Uz");
  ids.Ur = U("Ur");
  ids.Uh = U("Uh");
  ids.bz = b("bz");
  ids.br = b("br");
  ids.bh = b("bh");
  ids.input = input;
  ids.hidden = hidden;
  return ids;
}

LstmParamIds add_lstm_params(ParamStore& ps, const std::string& prefix, std::size_t input,
                             std::size_t hidden, RngStream& rng) {
  auto glorot = InitScheme::glorot_uniform();
  auto W = [&](const char* n) {
    return ps.add(prefix + "." + n, init_params(glorot, {hidden, input}, rng), true);
  };
  auto U = [&](const char* n) {
    return ps.add(prefix + "." + n, init_params(glorot, {hidden, hidden}, rng), true);
  };
  auto b = [&](const char* n) { return ps.add(prefix + "." + n, Tensor::zeros({hidden}), false); };
  LstmParamIds ids;
  ids.Wi = W("Wi");
  ids.Wf = W("Wf");
  ids.Wo = W("Wo");
  ids.Wg = W("Wg");
  ids.Ui = U("Ui");
  ids.Uf = U("Uf");
  ids.Uo = U("Uo");
  ids.Ug = U("Ug");
  ids.bi = b("bi");
  ids.bf = b("bf");
  ids.bo = b("bo");
  ids.bg = b("bg");
  ids.input = input;
  ids.hidden = hidden;
  return ids;
}

// ---------------------------------------------------------------------------
// Sequence wrappers.
// ---------------------------------------------------------------------------

GruSequence::GruSequence(ParamStore* ps, GruParamIds ids, bool reverse)
    : ps_(ps), ids_(ids), reverse_(reverse) {}

GruWeights GruSequence::weights() const {
  return {&ps_->value(ids_.Wz), &ps_->value(ids_.Wr), &ps_->value(ids_.Wh),
          &ps_->value(ids_.Uz), &ps_->value(ids_.Ur), &ps_->value(ids_.Uh),
          &ps_->value(ids_.bz), &ps_->value(ids_.br), &ps_->value(ids_.bh)};
}

Tensor GruSequence::forward(const Tensor& seq) {
  if (seq.rank() != 2 || seq.shape[0] == 0)
    throw ShapeError("GruSequence: need a nonempty [L x input] sequence, got " + shape_str(seq));
  std::size_t L = seq.shape[0], input = seq.shape[1];
  GruWeights w = weights();
  steps_.clear();
  steps_.reserve(L);
  Tensor out = Tensor::zeros({L, ids_.hidden});
  Tensor h = Tensor::zeros({ids_.hidden});
  for (std::size_t s = 0; s < L; ++s) {
    std::size_t pos = reverse_ ? L - 1 - s : s;
    Tensor x = Tensor::row(std::vector<double>(seq.values.begin() + pos * input,
                                               seq.values.begin() + (pos + 1) * input));
    steps_.push_back(gru_step(w, x, h));
    h = steps_.back().h;
    for (std::size_t j = 0; j < ids_.hidden; ++j) out.at2(pos, j) = h.values[j];
  }
  return out;
}

Tensor GruSequence::backward(const Tensor& grad_seq, GradBuffer& grads) {
  if (steps_.empty()) throw ShapeError("GruSequence::backward: no forward trace");
  std::size_t L = steps_.size();
  GruWeights w = weights();
  GruGradRefs g{&grads[ids_.Wz], &grads[ids_.Wr], &grads[ids_.Wh],
                &grads[ids_.Uz], &grads[ids_.Ur], &grads[ids_.Uh],
                &grads[ids_.bz], &grads[ids_.br], &grads[ids_.bh]};
  Tensor dx_seq = Tensor::zeros({L, ids_.input});
  Tensor carry = Tensor::zeros({ids_.hidden});
  for (std::size_t s = L; s-- > 0;) {
    std::size_t pos = reverse_ ? L - 1 - s : s;
    Tensor dh = carry;
    for (std::size_t j = 0; j < ids_.hidden; ++j) dh.values[j] += grad_seq.at2(pos, j);
    Tensor dx, dh_prev;
    gru_step_backward(w, steps_[s], dh, g, dx, dh_prev);
    for (std::size_t j = 0; j < ids_.input; ++j) dx_seq.at2(pos, j) += dx.values[j];
    carry = std::move(dh_prev);
  }
  return dx_seq;
}

LstmSequence::LstmSequence(ParamStore* ps, LstmParamIds ids, bool reverse)
    : ps_(ps), ids_(ids), reverse_(reverse) {}

LstmWeights LstmSequence::weights() const {
  return {&ps_->value(ids_.Wi), &ps_->value(ids_.Wf), &ps_->value(ids_.Wo), &ps_->value(ids_.Wg),
          &ps_->value(ids_.Ui), &ps_->value(ids_.Uf), &ps_->value(ids_.Uo), &ps_->value(ids_.Ug),
          &ps_->value(ids_.bi), &ps_->value(ids_.bf), &ps_->value(ids_.bo), &ps_->value(ids_.bg)};
}

Tensor LstmSequence::forward(const Tensor& seq) {
  if (seq.rank() != 2 || seq.shape[0] == 0)
    throw ShapeError("LstmSequence: need a nonempty [L x input] sequence, got " + shape_str(seq));
  std::size_t L = seq.shape[0], input = seq.shape[1];
  LstmWeights w = weights();
  steps_.clear();
  steps_.reserve(L);
  Tensor out = Tensor::zeros({L, ids_.hidden});
  Tensor h = Tensor::zeros({ids_.hidden});
  Tensor c = Tensor::zeros({ids_.hidden});
  for (std::size_t s = 0; s < L; ++s) {
    std::size_t pos = reverse_ ? L - 1 - s : s;
    Tensor x = Tensor::row(std::vector<double>(seq.values.begin() + pos * input,
                                               seq.values.begin() + (pos + 1) * input));
    steps_.push_back(lstm_step(w, x, h, c));
    h = steps_.back().h;
    c = steps_.back().c;
    for (std::size_t j = 0; j < ids_.hidden; ++j) out.at2(pos, j) = h.values[j];
  }
  return out;
}

Tensor LstmSequence::backward(const Tensor& grad_seq, GradBuffer& grads) {
  if (steps_.empty()) throw ShapeError("LstmSequence::backward: no forward trace");
  std::size_t L = steps_.size();
  LstmWeights w = weights();
  LstmGradRefs g{&grads[ids_.Wi], &grads[ids_.Wf], &grads[ids_.Wo], &grads[ids_.Wg],
                 &grads[ids_.Ui], &grads[ids_.Uf], &grads[ids_.Uo], &grads[ids_.Ug],
                 &grads[ids_.bi], &grads[ids_.bf], &grads[ids_.bo], &grads[ids_.bg]};
  Tensor dx_seq = Tensor::zeros({L, ids_.input});
  Tensor dh_carry = Tensor::zeros({ids_.hidden});
  Tensor dc_carry = Tensor::zeros({ids_.hidden});
  for (std::size_t s = L; s-- > 0;) {
    std::size_t pos = reverse_ ? L - 1 - s : s;
    Tensor dh = dh_carry;
    for (std::size_t j = 0; j < ids_.hidden; ++j) dh.values[j] += grad_seq.at2(pos, j);
    Tensor dx, dh_prev, dc_prev;
    lstm_step_backward(w, steps_[s], dh, dc_carry, g, dx, dh_prev, dc_prev);
    for (std::size_t j = 0; j < ids_.input; ++j) dx_seq.at2(pos, j) += dx.values[j];
    dh_carry = std::move(dh_prev);
    dc_carry = std::move(dc_prev);
  }
  return dx_seq;
}

BiGru::BiGru(ParamStore* ps, GruParamIds fwd, GruParamIds bwd)
    : fwd_(ps, fwd, false), bwd_(ps, bwd, true) {}

Tensor BiGru::forward(const Tensor& seq) {
  Tensor f = fwd_.forward(seq);
  Tensor b = bwd_.forward(seq);
  std::size_t L = f.shape[0], hf = f.shape[1], hb = b.shape[1];
  Tensor out = Tensor::zeros({L, hf + hb});
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t j = 0; j < hf; ++j) out.at2(t, j) = f.at2(t, j);
    for (std::size_t j = 0; j < hb; ++j) out.at2(t, hf + j) = b.at2(t, j);
  }
  return out;
}

Tensor BiGru::backward(const Tensor& grad_seq, GradBuffer& grads) {
  std::size_t L = grad_seq.shape[0];
  std::size_t hf = fwd_.hidden(), hb = bwd_.hidden();
  Tensor gf = Tensor::zeros({L, hf}), gb = Tensor::zeros({L, hb});
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t j = 0; j < hf; ++j) gf.at2(t, j) = grad_seq.at2(t, j);
    for (std::size_t j = 0; j < hb; ++j) gb.at2(t, j) = grad_seq.at2(t, hf + j);
  }
  Tensor dx = fwd_.backward(gf, grads);
  add_inplace(dx, bwd_.backward(gb, grads));
  return dx;
}

BiLstm::BiLstm(ParamStore* ps, LstmParamIds fwd, LstmParamIds bwd)
    : fwd_(ps, fwd, false), bwd_(ps, bwd, true) {}

Tensor BiLstm::forward(const Tensor& seq) {
  Tensor f = fwd_.forward(seq);
  Tensor b = bwd_.forward(seq);
  std::size_t L = f.shape[0], hf = f.shape[1], hb = b.shape[1];
  Tensor out = Tensor::zeros({L, hf + hb});
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t j = 0; j < hf; ++j) out.at2(t, j) = f.at2(t, j);
    for (std::size_t j = 0; j < hb; ++j) out.at2(t, hf + j) = b.at2(t, j);
  }
  return out;
}

Tensor BiLstm::backward(const Tensor& grad_seq, GradBuffer& grads) {
  std::size_t L = grad_seq.shape[0];
  std::size_t hf = fwd_.hidden(), hb = bwd_.hidden();
  Tensor gf = Tensor::zeros({L, hf}), gb = Tensor::zeros({L, hb});
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t j = 0; j < hf; ++j) gf.at2(t, j) = grad_seq.at2(t, j);
    for (std::size_t j = 0; j < hb; ++j) gb.at2(t, j) = grad_seq.at2(t, hf + j);
  }
  Tensor dx = fwd_.backward(gf, grads);
  add_inplace(dx, bwd_.backward(gb, grads));
  return dx;
}

}  // namespace textclf
