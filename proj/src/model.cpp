#include "textclf/model.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "textclf/errors.hpp"

namespace textclf {

const char* arch_name(Arch a) {
  switch (a) {
    case Arch::keis_bigru: return "keis_bigru";
    case Arch::keis_cnn: return "keis_cnn";
    case Arch::bert_bi_head: return "bert_bi_head";
  }
  return "?";
}

Arch arch_from_name(const std::string& s) {
  if (s == "keis_bigru") return Arch::keis_bigru;
  if (s == "keis_cnn") return Arch::keis_cnn;
  if (s == "bert_bi_head") return Arch::bert_bi_head;
  throw ConfigError("unknown architecture '" + s + "'");
}

double ModelSpec::dropout_rate() const { return arch == Arch::keis_cnn ? 0.25 : 0.2; }

void ModelSpec::validate() const {
  if (input_dim == 0) throw ConfigError("model spec: input_dim must be positive");
  if (seq_len == 0) throw ConfigError("model spec: seq_len must be positive");
  if (noise_stddev < 0.0) throw ConfigError("model spec: negative noise_stddev");
  if (arch == Arch::keis_bigru || arch == Arch::keis_cnn) {
    if (vocab_size < 2)
      throw ConfigError("model spec: vocab_size must cover the pad and oov rows");
  }
  if (arch == Arch::keis_cnn && seq_len < 7)
    throw ConfigError("model spec: keis_cnn needs seq_len >= 7 (largest filter height)");
}

std::string ModelSpec::to_json() const {
  nlohmann::ordered_json j;
  j["arch"] = arch_name(arch);
  j["head"] = head == HeadKind::binary ? "binary" : "three_class";
  j["seq_len"] = seq_len;
  j["input_dim"] = input_dim;
  j["vocab_size"] = vocab_size;
  j["noise_stddev"] = noise_stddev;
  j["bidirectional_second"] = bidirectional_second;
  return j.dump();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model spec json: ") + e.what());
  }
  try {
    ModelSpec s;
    s.arch = arch_from_name(j.at("arch").get<std::string>());
    std::string head = j.at("head").get<std::string>();
    if (head == "binary")
      s.head = HeadKind::binary;
    else if (head == "three_class")
      s.head = HeadKind::three_class;
    else
      throw DataError("model spec json: unknown head '" + head + "'");
    s.seq_len = j.at("seq_len").get<std::size_t>();
    s.input_dim = j.at("input_dim").get<std::size_t>();
    s.vocab_size = j.at("vocab_size").get<std::size_t>();
    s.noise_stddev = j.at("noise_stddev").get<double>();
    s.bidirectional_second = j.at("bidirectional_second").get<bool>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model spec json: ") + e.what());
  }
}

std::uint64_t ModelSpec::digest() const {
  // FNV-1a over the canonical JSON serialization.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string ModelSpec::digest_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest()));
  return buf;
}

// ---------------------------------------------------------------------------

Model Model::build(const ModelSpec& spec, RngStream& rng) {
  spec.validate();
  Model m;
  m.spec_ = spec;
  m.store_ = std::make_shared<ParamStore>();
  ParamStore& ps = *m.store_;

  switch (spec.arch) {
    case Arch::keis_bigru: {
      std::size_t table = ps.add(
          "embed.table", init_params(InitScheme::uniform(0.05), {spec.vocab_size, spec.input_dim}, rng),
          false);
      m.embed_ = EmbeddingLayer(&ps, table, spec.vocab_size, spec.input_dim);
      GruParamIds fwd = add_gru_params(ps, "bigru.fwd", spec.input_dim, ModelSpec::kBigruHidden, rng);
      GruParamIds bwd = add_gru_params(ps, "bigru.bwd", spec.input_dim, ModelSpec::kBigruHidden, rng);
      m.bigru_ = BiGru(&ps, fwd, bwd);
      m.noise_ = GaussianNoise(spec.noise_stddev);
      m.gap_ = GlobalAveragePool();
      std::size_t hb = 0;
      std::size_t hw = add_dense_params(ps, "dense", 2 * ModelSpec::kBigruHidden, ModelSpec::kDenseHidden,
                                        InitScheme::glorot_uniform(), rng, &hb);
      m.dense_hidden_ = DenseLayer(&ps, hw, hb, Activation::tanh);
      m.dropout_ = Dropout(spec.dropout_rate());
      std::size_t ob = 0;
      std::size_t ow = add_dense_params(ps, "head", ModelSpec::kDenseHidden, spec.head_units(),
                                        InitScheme::glorot_uniform(), rng, &ob);
      m.head_ = DenseLayer(&ps, ow, ob,
                           spec.head == HeadKind::binary ? Activation::sigmoid
                                                         : Activation::softmax);
      break;
    }
    case Arch::keis_cnn: {
      std::size_t table = ps.add(
          "embed.table", init_params(InitScheme::uniform(0.05), {spec.vocab_size, spec.input_dim}, rng),
          false);
      m.embed_ = EmbeddingLayer(&ps, table, spec.vocab_size, spec.input_dim);
      m.noise_ = GaussianNoise(spec.noise_stddev);
      m.conv_ = ConvStack(&ps, "conv", spec.input_dim, ModelSpec::kConvFilters, rng);
      m.dropout_ = Dropout(spec.dropout_rate());
      std::size_t hb = 0;
      std::size_t hw = add_dense_params(ps, "dense", 4 * ModelSpec::kConvFilters, ModelSpec::kDenseHidden,
                                        InitScheme::glorot_uniform(), rng, &hb);
      m.dense_hidden_ = DenseLayer(&ps, hw, hb, Activation::tanh);
      std::size_t ob = 0;
      std::size_t ow = add_dense_params(ps, "head", ModelSpec::kDenseHidden, spec.head_units(),
                                        InitScheme::glorot_uniform(), rng, &ob);
      m.head_ = DenseLayer(&ps, ow, ob,
                           spec.head == HeadKind::binary ? Activation::sigmoid
                                                         : Activation::softmax);
      break;
    }
    case Arch::bert_bi_head: {
      m.noise_ = GaussianNoise(spec.noise_stddev);
      LstmParamIds lf = add_lstm_params(ps, "bilstm.fwd", spec.input_dim, ModelSpec::kBertRnnHidden, rng);
      LstmParamIds lb = add_lstm_params(ps, "bilstm.bwd", spec.input_dim, ModelSpec::kBertRnnHidden, rng);
      m.bilstm_ = BiLstm(&ps, lf, lb);
      std::size_t stage2_in = 2 * ModelSpec::kBertRnnHidden;
      std::size_t stage2_out;
      if (spec.bidirectional_second) {
        GruParamIds gf = add_gru_params(ps, "bigru2.fwd", stage2_in, ModelSpec::kBertRnnHidden, rng);
        GruParamIds gb = add_gru_params(ps, "bigru2.bwd", stage2_in, ModelSpec::kBertRnnHidden, rng);
        m.bigru2_ = BiGru(&ps, gf, gb);
        stage2_out = 2 * ModelSpec::kBertRnnHidden;
      } else {
        GruParamIds g = add_gru_params(ps, "gru2", stage2_in, ModelSpec::kBertRnnHidden, rng);
        m.gru2_ = GruSequence(&ps, g, false);
        stage2_out = ModelSpec::kBertRnnHidden;
      }
      m.gap_ = GlobalAveragePool();
      m.dropout_ = Dropout(spec.dropout_rate());
      std::size_t ob = 0;
      std::size_t ow = add_dense_params(ps, "head", stage2_out, spec.head_units(),
                                        InitScheme::truncated_normal(0.0, 0.05), rng, &ob);
      m.head_ = DenseLayer(&ps, ow, ob,
                           spec.head == HeadKind::binary ? Activation::sigmoid
                                                         : Activation::softmax);
      break;
    }
  }
  return m;
}

namespace {
void check_mask(const std::vector<std::uint8_t>& mask, std::size_t len, const char* arch) {
  if (mask.size() != len)
    throw ShapeError(std::string(arch) + ": mask length " + std::to_string(mask.size()) +
                     " vs input length " + std::to_string(len));
}
}  // namespace

Tensor Model::forward(const ModelInput& in, Phase phase, RngStream* rng) {
  switch (spec_.arch) {
    case Arch::keis_bigru: {
      if (in.ids.size() != spec_.seq_len)
        throw ShapeError("keis_bigru: expected " + std::to_string(spec_.seq_len) +
                         " token ids, got " + std::to_string(in.ids.size()));
      check_mask(in.mask, in.ids.size(), "keis_bigru");
      Tensor seq = embed_->forward(in.ids);
      Tensor rnn = bigru_->forward(seq);
      Tensor noised = noise_->forward(rnn, phase, rng);
      Tensor pooled = gap_->forward(noised, in.mask);
      Tensor hidden = dense_hidden_->forward(pooled);
      Tensor dropped = dropout_->forward(hidden, phase, rng);
      return head_->forward(dropped);
    }
    case Arch::keis_cnn: {
      if (in.ids.size() != spec_.seq_len)
        throw ShapeError("keis_cnn: expected " + std::to_string(spec_.seq_len) +
                         " token ids, got " + std::to_string(in.ids.size()));
      check_mask(in.mask, in.ids.size(), "keis_cnn");
      Tensor seq = embed_->forward(in.ids);
      Tensor noised = noise_->forward(seq, phase, rng);
      Tensor feats = conv_->forward(noised);
      Tensor dropped = dropout_->forward(feats, phase, rng);
      Tensor hidden = dense_hidden_->forward(dropped);
      return head_->forward(hidden);
    }
    case Arch::bert_bi_head: {
      if (in.ctx.rank() != 2 || in.ctx.shape[0] != spec_.seq_len ||
          in.ctx.shape[1] != spec_.input_dim)
        throw ShapeError("bert_bi_head: expected [" + std::to_string(spec_.seq_len) + " x " +
                         std::to_string(spec_.input_dim) + "] contextual input, got " +
                         shape_str(in.ctx));
      check_mask(in.mask, in.ctx.shape[0], "bert_bi_head");
      Tensor noised = noise_->forward(in.ctx, phase, rng);
      Tensor rnn1 = bilstm_->forward(noised);
      Tensor rnn2 = bigru2_ ? bigru2_->forward(rnn1) : gru2_->forward(rnn1);
      Tensor pooled = gap_->forward(rnn2, in.mask);
      Tensor dropped = dropout_->forward(pooled, phase, rng);
      return head_->forward(dropped);
    }
  }
  throw ShapeError("Model::forward: unknown architecture");
}

void Model::backward(const Tensor& grad_probs, GradBuffer& grads) {
  switch (spec_.arch) {
    case Arch::keis_bigru: {
      Tensor g = head_->backward(grad_probs, grads);
      g = dropout_->backward(g);
      g = dense_hidden_->backward(g, grads);
      g = gap_->backward(g);
      g = noise_->backward(g);
      g = bigru_->backward(g, grads);
      embed_->backward(g, grads);
      return;
    }
    case Arch::keis_cnn: {
      Tensor g = head_->backward(grad_probs, grads);
      g = dense_hidden_->backward(g, grads);
      g = dropout_->backward(g);
      g = conv_->backward(g, grads);
      g = noise_->backward(g);
      embed_->backward(g, grads);
      return;
    }
    case Arch::bert_bi_head: {
      Tensor g = head_->backward(grad_probs, grads);
      g = dropout_->backward(g);
      g = gap_->backward(g);
      g = bigru2_ ? bigru2_->backward(g, grads) : gru2_->backward(g, grads);
      g = bilstm_->backward(g, grads);
      // The contextual input is data, not a parameter; its gradient stops here.
      return;
    }
  }
  throw ShapeError("Model::backward: unknown architecture");
}

Tensor Model::predict(const ModelInput& in) { return forward(in, Phase::eval, nullptr); }

EmbeddingLayer& Model::embedding() {
  if (!embed_) throw ConfigError("model has no embedding layer");
  return *embed_;
}

// ---------------------------------------------------------------------------

void EnsembleWeights::validate() const {
  if (w_bigru < 0.0 || w_cnn < 0.0 || std::abs(w_bigru + w_cnn - 1.0) > 1e-12)
    throw ConfigError("ensemble weights must be nonnegative and sum to 1");
}

double ensemble_predict(double p_bigru, double p_cnn, const EnsembleWeights& w) {
  w.validate();
  return w.w_bigru * p_bigru + w.w_cnn * p_cnn;
}

Tensor ensemble_predict(const Tensor& p_bigru, const Tensor& p_cnn, const EnsembleWeights& w) {
  w.validate();
  if (!p_bigru.same_shape(p_cnn))
    throw ShapeError("ensemble_predict: shape mismatch " + shape_str(p_bigru) + " vs " +
                     shape_str(p_cnn));
  Tensor out = p_bigru;
  for (std::size_t i = 0; i < out.numel(); ++i)
    out.values[i] = w.w_bigru * p_bigru.values[i] + w.w_cnn * p_cnn.values[i];
  return out;
}

int decide_binary(double p_positive) { return p_positive > 0.5 ? 0 : 1; }

int decide_multiclass(const Tensor& probs) {
  int best = 0;
  for (std::size_t i = 1; i < probs.numel(); ++i)
    if (probs.values[i] > probs.values[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace textclf
