#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "textclf/params.hpp"
#include "textclf/rng.hpp"
#include "textclf/tensor.hpp"

namespace textclf {

enum class Phase { train, eval };

// ---------------------------------------------------------------------------
// Recurrent cell math, usable standalone (weight views, no parameter store).
// ---------------------------------------------------------------------------

// W*: [hidden x input], U*: [hidden x hidden], b*: [hidden].
struct GruWeights {
  const Tensor *Wz, *Wr, *Wh, *Uz, *Ur, *Uh, *bz, *br, *bh;
};

struct GruStepTrace {
  Tensor x, h_prev;
  Tensor z, r, hcand, h;
};

//   z = sigmoid(Wz x + Uz h_prev + bz)
//   r = sigmoid(Wr x + Ur h_prev + br)
//   hcand = tanh(Wh x + r . (Uh h_prev) + bh)
//   h = (1 - z) . h_prev + z . hcand
GruStepTrace gru_step(const GruWeights& w, const Tensor& x, const Tensor& h_prev);

struct GruGradRefs {
  Tensor *dWz, *dWr, *dWh, *dUz, *dUr, *dUh, *dbz, *dbr, *dbh;
};

// Accumulates this step's parameter gradients and writes the input and
// previous-hidden gradients. dh is the total gradient at h for this step.
void gru_step_backward(const GruWeights& w, const GruStepTrace& t, const Tensor& dh,
                       const GruGradRefs& g, Tensor& dx_out, Tensor& dh_prev_out);

struct LstmWeights {
  const Tensor *Wi, *Wf, *Wo, *Wg, *Ui, *Uf, *Uo, *Ug, *bi, *bf, *bo, *bg;
};

struct LstmStepTrace {
  Tensor x, h_prev, c_prev;
  Tensor i, f, o, g;     // gates and candidate
  Tensor c, h;
};

// Standard formulation: i/f/o sigmoid gates, tanh candidate g,
// c = f . c_prev + i . g, h = o . tanh(c).
LstmStepTrace lstm_step(const LstmWeights& w, const Tensor& x, const Tensor& h_prev,
                        const Tensor& c_prev);

struct LstmGradRefs {
  Tensor *dWi, *dWf, *dWo, *dWg, *dUi, *dUf, *dUo, *dUg, *dbi, *dbf, *dbo, *dbg;
};

void lstm_step_backward(const LstmWeights& w, const LstmStepTrace& t, const Tensor& dh,
                        const Tensor& dc_in, const LstmGradRefs& g, Tensor& dx_out,
                        Tensor& dh_prev_out, Tensor& dc_prev_out);

// Forward-only bidirectional pass over seq [L x input]: row t of the result is
// concat(forward hidden at t, backward hidden at t re-aligned to input order).
// Rejects empty sequences.
Tensor bidirectional_run(const GruWeights& fwd, const GruWeights& bwd, const Tensor& seq);

// ---------------------------------------------------------------------------
// Parameter wiring helpers.
// ---------------------------------------------------------------------------

struct GruParamIds {
  std::size_t Wz, Wr, Wh, Uz, Ur, Uh, bz, br, bh;
  std::size_t input = 0, hidden = 0;
};
GruParamIds add_gru_params(ParamStore& ps, const std::string& prefix, std::size_t input,
                           std::size_t hidden, RngStream& rng);

struct LstmParamIds {
  std::size_t Wi, Wf, Wo, Wg, Ui, Uf, Uo, Ug, bi, bf, bo, bg;
  std::size_t input = 0, hidden = 0;
};
LstmParamIds add_lstm_params(ParamStore& ps, const std::string& prefix, std::size_t input,
                             std::size_t hidden, RngStream& rng);

// ---------------------------------------------------------------------------
// Layers. Each instance keeps the trace of its last train-mode forward, so one
// instance must not serve two concurrent training passes; training workers use
// their own layer copies over a shared ParamStore.
// ---------------------------------------------------------------------------

class EmbeddingLayer {
 public:
  EmbeddingLayer() = default;
  EmbeddingLayer(ParamStore* ps, std::size_t table, std::size_t vocab, std::size_t dim);

  Tensor forward(const std::vector<int>& ids);               // [L x dim]
  void backward(const Tensor& grad_seq, GradBuffer& grads);  // scatter-add by id

  std::size_t dim() const { return dim_; }

 private:
  ParamStore* ps_ = nullptr;
  std::size_t table_ = 0, vocab_ = 0, dim_ = 0;
  std::vector<int> ids_;
  bool has_trace_ = false;
};

// One direction of a GRU over a sequence. Output rows are always in the
// original time order; reverse=true runs over the reversed sequence.
class GruSequence {
 public:
  GruSequence() = default;
  GruSequence(ParamStore* ps, GruParamIds ids, bool reverse);

  Tensor forward(const Tensor& seq);                           // [L x hidden]
  Tensor backward(const Tensor& grad_seq, GradBuffer& grads);  // [L x input]

  std::size_t hidden() const { return ids_.hidden; }

 private:
  GruWeights weights() const;
  ParamStore* ps_ = nullptr;
  GruParamIds ids_;
  bool reverse_ = false;
  std::vector<GruStepTrace> steps_;
};

class LstmSequence {
 public:
  LstmSequence() = default;
  LstmSequence(ParamStore* ps, LstmParamIds ids, bool reverse);

  Tensor forward(const Tensor& seq);
  Tensor backward(const Tensor& grad_seq, GradBuffer& grads);

  std::size_t hidden() const { return ids_.hidden; }

 private:
  LstmWeights weights() const;
  ParamStore* ps_ = nullptr;
  LstmParamIds ids_;
  bool reverse_ = false;
  std::vector<LstmStepTrace> steps_;
};

class BiGru {
 public:
  BiGru() = default;
  BiGru(ParamStore* ps, GruParamIds fwd, GruParamIds bwd);

  Tensor forward(const Tensor& seq);                           // [L x 2*hidden]
  Tensor backward(const Tensor& grad_seq, GradBuffer& grads);

  std::size_t out_width() const { return fwd_.hidden() + bwd_.hidden(); }

 private:
  GruSequence fwd_, bwd_;
};

class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(ParamStore* ps, LstmParamIds fwd, LstmParamIds bwd);

  Tensor forward(const Tensor& seq);
  Tensor backward(const Tensor& grad_seq, GradBuffer& grads);

  std::size_t out_width() const { return fwd_.hidden() + bwd_.hidden(); }

 private:
  LstmSequence fwd_, bwd_;
};

// Valid convolution over [L x width] with nf filters of one height, followed
// by a max over all time positions: output is [nf]. Backward routes each
// filter's gradient to its argmax position (first position on ties).
class ConvBranchLayer {
 public:
  ConvBranchLayer() = default;
  ConvBranchLayer(ParamStore* ps, std::size_t filters, std::size_t biases,
                  std::size_t height, std::size_t width, std::size_t nfilters);

  Tensor forward(const Tensor& seq);
  Tensor backward(const Tensor& grad_out, GradBuffer& grads);  // [L x width]

  std::size_t height() const { return height_; }
  std::size_t nfilters() const { return nfilters_; }

 private:
  ParamStore* ps_ = nullptr;
  std::size_t filters_ = 0, biases_ = 0;
  std::size_t height_ = 0, width_ = 0, nfilters_ = 0;
  Tensor input_;
  std::vector<std::size_t> argmax_;
  bool has_trace_ = false;
};

// The four-branch stack with heights {1,3,5,7}; outputs concat to 4*nf.
class ConvStack {
 public:
  ConvStack() = default;
  ConvStack(ParamStore* ps, const std::string& prefix, std::size_t width,
            std::size_t nfilters, RngStream& rng);

  Tensor forward(const Tensor& seq);                           // [4*nf]
  Tensor backward(const Tensor& grad_out, GradBuffer& grads);  // [L x width]

  std::size_t out_width() const;
  std::size_t min_length() const { return 7; }

 private:
  std::vector<ConvBranchLayer> branches_;
};

// Elementwise mean over the rows whose mask entry is 1. Rejects an all-zero
// mask and mask/sequence length disagreement.
Tensor global_average_pool(const Tensor& seq, const std::vector<std::uint8_t>& mask);

class GlobalAveragePool {
 public:
  Tensor forward(const Tensor& seq, const std::vector<std::uint8_t>& mask);
  Tensor backward(const Tensor& grad_out);  // [L x d]; masked rows get zero

 private:
  std::vector<std::uint8_t> mask_;
  std::size_t len_ = 0, dim_ = 0;
  bool has_trace_ = false;
};

// Additive zero-mean noise, train phase only. Backward is the identity; the
// realized noise is kept so gradient checks can replay the same draw.
class GaussianNoise {
 public:
  GaussianNoise() = default;
  explicit GaussianNoise(double stddev);

  Tensor forward(const Tensor& x, Phase phase, RngStream* rng);
  Tensor forward_replay(const Tensor& x) const;  // same realization as last train forward
  Tensor backward(const Tensor& grad_out) const;

  double stddev() const { return stddev_; }

 private:
  double stddev_ = 0.0;
  Tensor noise_;
  bool has_trace_ = false;
};

// Inverted dropout: train phase zeroes each element with probability `rate`
// and scales survivors by 1/(1-rate); eval is the identity.
class Dropout {
 public:
  Dropout() = default;
  explicit Dropout(double rate);

  Tensor forward(const Tensor& x, Phase phase, RngStream* rng);
  Tensor forward_replay(const Tensor& x) const;
  Tensor backward(const Tensor& grad_out) const;

  double rate() const { return rate_; }

 private:
  double rate_ = 0.0;
  std::vector<std::uint8_t> keep_;
  bool identity_ = true;
  bool has_trace_ = false;
};

class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(ParamStore* ps, std::size_t w, std::size_t b, Activation act);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out, GradBuffer& grads);

  Activation act() const { return act_; }

 private:
  ParamStore* ps_ = nullptr;
  std::size_t w_ = 0, b_ = 0;
  Activation act_ = Activation::none;
  Tensor x_, out_;
  bool has_trace_ = false;
};

std::size_t add_dense_params(ParamStore& ps, const std::string& prefix, std::size_t in,
                             std::size_t out, const InitScheme& kernel_init, RngStream& rng,
                             std::size_t* bias_id);

}  // namespace textclf
