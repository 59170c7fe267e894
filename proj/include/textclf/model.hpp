#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "textclf/layers.hpp"
#include "textclf/params.hpp"
#include "textclf/rng.hpp"
#include "textclf/tensor.hpp"

namespace textclf {

enum class Arch { keis_bigru, keis_cnn, bert_bi_head };
enum class HeadKind { binary, three_class };

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& s);

// Architecture description. The recurrent/conv sizes are fixed constants of
// each architecture; only the input geometry, head, and the documented
// switches vary.
struct ModelSpec {
  Arch arch = Arch::keis_bigru;
  HeadKind head = HeadKind::binary;
  std::size_t seq_len = 60;
  std::size_t input_dim = 0;   // embedding width (keis) / contextual width (bert)
  std::size_t vocab_size = 0;  // keis archs only, includes pad+oov rows
  double noise_stddev = 0.1;
  bool bidirectional_second = true;  // bert head: second recurrent stage direction

  static constexpr std::size_t kBigruHidden = 128;
  static constexpr std::size_t kDenseHidden = 35;
  static constexpr std::size_t kConvFilters = 36;
  static constexpr std::size_t kConvHeights[4] = {1, 3, 5, 7};
  static constexpr std::size_t kBertRnnHidden = 300;

  double dropout_rate() const;  // 0.2 (bigru, bert) / 0.25 (cnn)
  std::size_t head_units() const { return head == HeadKind::binary ? 1 : 3; }

  void validate() const;  // throws ConfigError on inconsistent geometry
  std::string to_json() const;
  static ModelSpec from_json(const std::string& text);
  std::uint64_t digest() const;
  std::string digest_hex() const;
};

// One encoded example. keis architectures read `ids`; bert_bi_head reads
// `ctx` ([seq_len x input_dim]). `mask` marks real (non-pad) positions.
struct ModelInput {
  std::vector<int> ids;
  Tensor ctx;
  std::vector<std::uint8_t> mask;
};

class Model {
 public:
  Model() = default;
  static Model build(const ModelSpec& spec, RngStream& rng);

  const ModelSpec& spec() const { return spec_; }
  ParamStore& params() { return *store_; }
  const ParamStore& params() const { return *store_; }

  // Train-mode forward keeps traces for backward; rng drives noise/dropout.
  Tensor forward(const ModelInput& in, Phase phase, RngStream* rng);
  // Gradient of the loss wrt the predicted probabilities, propagated through
  // the traces of the last train forward.
  void backward(const Tensor& grad_probs, GradBuffer& grads);

  // Eval-phase forward: deterministic, noise and dropout inert. Binary heads
  // return [1] = P(positive class); three-class heads a simplex [3].
  Tensor predict(const ModelInput& in);

  // Copy sharing the parameter store but with private traces; the cheap way
  // to run several forward/backward passes concurrently.
  Model worker_clone() const { return *this; }

  EmbeddingLayer& embedding();  // keis archs only

 private:
  ModelSpec spec_;
  std::shared_ptr<ParamStore> store_;

  std::optional<EmbeddingLayer> embed_;
  std::optional<GaussianNoise> noise_;
  std::optional<BiGru> bigru_;
  std::optional<ConvStack> conv_;
  std::optional<BiLstm> bilstm_;
  std::optional<BiGru> bigru2_;
  std::optional<GruSequence> gru2_;
  std::optional<GlobalAveragePool> gap_;
  std::optional<DenseLayer> dense_hidden_;
  std::optional<Dropout> dropout_;
  std::optional<DenseLayer> head_;
};

// Convex soft-voting weights; must be nonnegative and sum to 1.
struct EnsembleWeights {
  double w_bigru = 0.6;
  double w_cnn = 0.4;
  void validate() const;
};

double ensemble_predict(double p_bigru, double p_cnn, const EnsembleWeights& w);
Tensor ensemble_predict(const Tensor& p_bigru, const Tensor& p_cnn, const EnsembleWeights& w);

// Decision rule shared by the CLI and tests: binary probability -> class index
// (0 = positive), ties at 0.5 go to the negative class; three-class argmax,
// first index on ties.
int decide_binary(double p_positive);
int decide_multiclass(const Tensor& probs);

}  // namespace textclf
