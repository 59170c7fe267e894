// textclf: preprocess / augment / train / predict / evaluate pipeline driver.
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 numeric
// error, 4 internal error. Output files are written atomically (temp file +
// rename), so a failed run never leaves partial artifacts behind.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>

#include "textclf/checkpoint.hpp"
#include "textclf/contextual.hpp"
#include "textclf/data.hpp"
#include "textclf/embedding.hpp"
#include "textclf/errors.hpp"
#include "textclf/model.hpp"
#include "textclf/optim.hpp"
#include "textclf/runconfig.hpp"
#include "textclf/textprep.hpp"

namespace fs = std::filesystem;
using namespace textclf;

namespace {

// ---------------------------------------------------------------------------
// Small utilities.
// ---------------------------------------------------------------------------

void write_text_atomic(const std::string& path, const std::string& content) {
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw DataError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot move '" + tmp.string() + "' into place: " + ec.message());
  }
}

void require_input(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " path is required");
  if (!fs::exists(path)) throw ConfigError(what + " path '" + path + "' does not exist");
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Config file + command line, command line winning. Every known key is
// registered so typos are rejected instead of silently ignored.
struct Binder {
  CLI::App* cmd;
  std::optional<RunConfig> cfg;
  std::vector<std::string> known;

  explicit Binder(CLI::App* c) : cmd(c) {}

  void load(const std::string& path) {
    if (path.empty()) return;
    cfg = RunConfig::parse_file(path);
  }

  bool from_cli(const std::string& flag) const { return cmd->count(flag) > 0; }

  void str(const std::string& flag, const std::string& key, std::string& var) {
    known.push_back(key);
    if (cfg && !from_cli(flag) && cfg->has(key)) var = cfg->get_string(key);
  }
  template <typename T>
  void num(const std::string& flag, const std::string& key, T& var) {
    known.push_back(key);
    if (!cfg || from_cli(flag) || !cfg->has(key)) return;
    if constexpr (std::is_floating_point_v<T>)
      var = cfg->get_double(key, var);
    else
      var = static_cast<T>(cfg->get_int(key, static_cast<long>(var)));
  }
  void boolean(const std::string& flag, const std::string& key, bool& var) {
    known.push_back(key);
    if (cfg && !from_cli(flag) && cfg->has(key)) var = cfg->get_bool(key, var);
  }
  void finish() const {
    if (cfg) cfg->reject_unknown(known);
  }
};

// ---------------------------------------------------------------------------
// Encoding helpers shared by train and predict.
// ---------------------------------------------------------------------------

ModelInput encode_record(const DataRecord& r, const Vocab& vocab, std::size_t max_len) {
  EncodedInput e = encode(tokenize(r.text), vocab, max_len);
  ModelInput in;
  in.ids = std::move(e.ids);
  in.mask = std::move(e.mask);
  // An empty tweet still needs one pooled position; treat the first pad as
  // real so the masked average stays defined.
  bool any = false;
  for (auto m : in.mask) any |= m != 0;
  if (!any) in.mask[0] = 1;
  return in;
}

ModelInput contextual_record(const DataRecord& r, const ContextualFile& ctx) {
  const ContextualRecord* rec = ctx.find(r.id);
  if (!rec)
    throw DataError("contextual file has no record for id '" + r.id + "'");
  ModelInput in;
  in.ctx = rec->values;
  in.mask.assign(ctx.max_len(), 0);
  std::size_t n = std::min<std::size_t>(rec->true_len, ctx.max_len());
  for (std::size_t i = 0; i < n; ++i) in.mask[i] = 1;
  if (n == 0) in.mask[0] = 1;
  return in;
}

std::vector<TrainExample> build_examples(const Dataset& data, const Vocab* vocab,
                                         const ContextualFile* ctx, std::size_t max_len) {
  std::vector<TrainExample> out;
  out.reserve(data.size());
  for (const DataRecord& r : data.records()) {
    TrainExample ex;
    ex.input = ctx ? contextual_record(r, *ctx) : encode_record(r, *vocab, max_len);
    ex.label = data.schema().index_of(r.label);
    out.push_back(std::move(ex));
  }
  return out;
}

std::string history_csv(const TrainHistory& h) {
  std::string out = "epoch,train_loss,val_loss,val_macro_f1,lr\n";
  for (const EpochStats& e : h.epochs) {
    out += std::to_string(e.epoch) + "," + fmt6(e.train_loss) + "," + fmt6(e.val_loss) + "," +
           fmt6(e.val_macro_f1) + "," + fmt6(e.lr) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared option bundles.
// ---------------------------------------------------------------------------

struct TrainFlags {
  std::string task = "A";
  std::string arch = "keis_bigru";
  std::string train_path, val_path, embeddings, contextual, checkpoint, history;
  double val_fraction = 0.2;
  std::size_t embed_dim = 300;
  std::size_t max_len = 60;
  std::size_t vocab_limit = 0;  // 0 = unbounded
  double noise = 0.1;           // Gaussian noise stddev
  bool unidirectional_second = false;
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  double lr = 0.01;
  double l2 = 0.01;
  std::size_t patience = 5;
  double lr_factor = 0.5;
  double min_lr = 1e-5;
  std::uint64_t seed = 42;
  std::size_t chunks = 8;
};

struct TrainedMember {
  Model model;
  Vocab vocab;
  TrainHistory history;
};

TrainedMember train_member(Arch arch, const TrainFlags& f, const LabelSchema& schema,
                           const Dataset& train_set, const Dataset& val_set,
                           const EmbeddingTable* table, const ContextualFile* ctx,
                           std::uint64_t build_stream) {
  ModelSpec spec;
  spec.arch = arch;
  spec.head = schema.binary() ? HeadKind::binary : HeadKind::three_class;
  spec.seq_len = ctx ? ctx->max_len() : f.max_len;
  spec.noise_stddev = f.noise;
  spec.bidirectional_second = !f.unidirectional_second;

  Vocab vocab;
  if (arch == Arch::bert_bi_head) {
    spec.input_dim = ctx->dim();
    spec.vocab_size = 0;
  } else {
    std::vector<std::string> texts;
    texts.reserve(train_set.size());
    for (const DataRecord& r : train_set.records()) texts.push_back(r.text);
    vocab = Vocab::build(texts, f.vocab_limit);
    spec.vocab_size = vocab.size();
    spec.input_dim = table ? table->dim() : f.embed_dim;
  }
  spec.validate();

  RngStream build_rng(f.seed, build_stream);
  Model model = Model::build(spec, build_rng);

  // Seed embedding rows from the pretrained table where the word is known.
  if (table && arch != Arch::bert_bi_head) {
    ParamStore& ps = model.params();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (ps.at(i).name != "embed.table") continue;
      Tensor& t = ps.value(i);
      for (std::size_t w = 2; w < vocab.words.size(); ++w) {
        auto idx = table->find(vocab.words[w]);
        if (!idx) continue;
        const double* vec = table->vector_of(*idx);
        for (std::size_t d = 0; d < table->dim(); ++d) t.values[w * t.shape[1] + d] = vec[d];
      }
    }
  }

  const Vocab* vp = arch == Arch::bert_bi_head ? nullptr : &vocab;
  std::vector<TrainExample> train_ex = build_examples(train_set, vp, ctx, spec.seq_len);
  std::vector<TrainExample> val_ex = build_examples(val_set, vp, ctx, spec.seq_len);

  TrainConfig cfg;
  cfg.epochs = f.epochs;
  cfg.batch_size = f.batch_size;
  cfg.lr = f.lr;
  cfg.l2_lambda = f.l2;
  cfg.patience = f.patience;
  cfg.lr_reduction_factor = f.lr_factor;
  cfg.min_lr = f.min_lr;
  cfg.seed = f.seed;
  cfg.grad_chunks = f.chunks;

  TrainedMember out;
  out.history = train_model(model, train_ex, val_ex, cfg);
  out.model = std::move(model);
  out.vocab = std::move(vocab);
  return out;
}

std::string member_path(const std::string& base, Arch arch) {
  return base + (arch == Arch::keis_bigru ? ".bigru" : ".cnn");
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

int cmd_preprocess(const std::string& config_path, Binder& bind, std::string task,
                   std::string language, std::string input, std::string output, bool unlabeled,
                   CleanConfig clean, bool strip_urls, bool strip_mentions, bool strip_punct,
                   bool elongation, bool strip_emoji, bool strip_digits, bool strip_foreign) {
  bind.load(config_path);
  bind.str("--task", "data.task", task);
  bind.str("--language", "data.language", language);
  bind.str("--input", "data.input", input);
  bind.str("--output", "data.output", output);
  bind.boolean("--unlabeled", "data.unlabeled", unlabeled);
  bind.boolean("--strip-urls", "clean.strip_urls", strip_urls);
  bind.boolean("--strip-mentions", "clean.strip_mentions", strip_mentions);
  bind.boolean("--strip-punctuation", "clean.strip_punctuation", strip_punct);
  bind.boolean("--collapse-elongation", "clean.collapse_elongation", elongation);
  bind.boolean("--strip-emoji", "clean.strip_emoji", strip_emoji);
  bind.boolean("--strip-digits", "clean.strip_digits", strip_digits);
  bind.boolean("--strip-foreign", "clean.strip_foreign", strip_foreign);
  bind.finish();

  if (task.size() != 1) throw ConfigError("task must be A, B, or C");
  LabelSchema schema = LabelSchema::for_task(task[0]);
  Language lang = language_from_name(language);
  clean = CleanConfig::for_language(lang);
  if (bind.from_cli("--strip-urls") || (bind.cfg && bind.cfg->has("clean.strip_urls")))
    clean.strip_urls = strip_urls;
  if (bind.from_cli("--strip-mentions") || (bind.cfg && bind.cfg->has("clean.strip_mentions")))
    clean.strip_mentions = strip_mentions;
  if (bind.from_cli("--strip-punctuation") ||
      (bind.cfg && bind.cfg->has("clean.strip_punctuation")))
    clean.strip_punctuation = strip_punct;
  if (bind.from_cli("--collapse-elongation") ||
      (bind.cfg && bind.cfg->has("clean.collapse_elongation")))
    clean.collapse_elongation = elongation;
  if (bind.from_cli("--strip-emoji") || (bind.cfg && bind.cfg->has("clean.strip_emoji")))
    clean.strip_emoji = strip_emoji;
  if (bind.from_cli("--strip-digits") || (bind.cfg && bind.cfg->has("clean.strip_digits")))
    clean.strip_digits = strip_digits;
  if (bind.from_cli("--strip-foreign") || (bind.cfg && bind.cfg->has("clean.strip_foreign")))
    clean.strip_foreign = strip_foreign;
  clean.validate();

  require_input(input, "--input");
  if (output.empty()) throw ConfigError("--output path is required");

  Dataset data = load_tsv(input, schema, !unlabeled);
  std::string out;
  for (const DataRecord& r : data.records()) {
    out += r.id;
    out += '\t';
    out += clean_text(r.text, clean);
    if (!unlabeled) {
      out += '\t';
      out += r.label;
    }
    out += '\n';
  }
  write_text_atomic(output, out);
  std::cout << "preprocessed " << data.size() << " records -> " << output << "\n";
  return 0;
}

int cmd_augment(const std::string& config_path, Binder& bind, std::string task,
                std::string input, std::string embeddings, std::string output,
                std::string synonyms_out, std::size_t top_n, double min_cos, std::string policy,
                std::size_t max_per_tweet, std::uint64_t seed) {
  bind.load(config_path);
  bind.str("--task", "data.task", task);
  bind.str("--input", "data.input", input);
  bind.str("--embeddings", "data.embeddings", embeddings);
  bind.str("--output", "data.output", output);
  bind.str("--synonyms-out", "augment.synonyms_out", synonyms_out);
  bind.num("--top-n", "augment.top_n", top_n);
  bind.num("--min-cos", "augment.min_cos", min_cos);
  bind.str("--policy", "augment.policy", policy);
  bind.num("--max-per-tweet", "augment.max_per_tweet", max_per_tweet);
  bind.num("--seed", "augment.seed", seed);
  bind.finish();

  if (task.size() != 1) throw ConfigError("task must be A, B, or C");
  LabelSchema schema = LabelSchema::for_task(task[0]);
  require_input(input, "--input");
  require_input(embeddings, "--embeddings");
  if (output.empty()) throw ConfigError("--output path is required");

  AugmentPolicy pol;
  if (policy == "replace_all")
    pol = AugmentPolicy::replace_all();
  else if (policy == "per_tweet_max")
    pol = AugmentPolicy::per_tweet_max(max_per_tweet);
  else
    throw ConfigError("--policy must be replace_all or per_tweet_max");

  Dataset data = load_tsv(input, schema, true);
  EmbeddingTable table = load_embeddings(embeddings);
  for (const std::string& w : table.warnings()) std::cerr << "warning: " << w << "\n";

  SynonymTable syn = build_synonym_table(data, table, top_n, min_cos);
  RngStream rng(seed, 7);
  Dataset augmented = augment_corpus(data, syn, pol, rng);

  // The output corpus is the original records followed by the synthetic ones.
  Dataset expanded(schema, true);
  for (const DataRecord& r : data.records()) expanded.append(r);
  for (const DataRecord& r : augmented.records()) expanded.append(r);
  write_tsv(expanded, output);
  if (!synonyms_out.empty()) write_synonym_table(syn, synonyms_out);

  std::cout << "synonym table: " << syn.size() << " entries; augmented " << augmented.size()
            << " of " << data.size() << " records -> " << output << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, Binder& bind, TrainFlags f) {
  bind.load(config_path);
  bind.str("--task", "data.task", f.task);
  bind.str("--arch", "model.arch", f.arch);
  bind.str("--train", "data.train", f.train_path);
  bind.str("--val", "data.val", f.val_path);
  bind.num("--val-fraction", "data.val_fraction", f.val_fraction);
  bind.str("--embeddings", "data.embeddings", f.embeddings);
  bind.num("--embed-dim", "model.embed_dim", f.embed_dim);
  bind.str("--contextual", "data.contextual", f.contextual);
  bind.str("--checkpoint", "data.checkpoint", f.checkpoint);
  bind.str("--history", "data.history", f.history);
  bind.num("--max-len", "model.max_len", f.max_len);
  bind.num("--vocab-limit", "model.vocab_limit", f.vocab_limit);
  bind.num("--noise", "model.noise", f.noise);
  bind.boolean("--unidirectional-second", "model.unidirectional_second",
               f.unidirectional_second);
  bind.num("--epochs", "train.epochs", f.epochs);
  bind.num("--batch-size", "train.batch_size", f.batch_size);
  bind.num("--lr", "train.lr", f.lr);
  bind.num("--l2", "train.l2_lambda", f.l2);
  bind.num("--patience", "train.patience", f.patience);
  bind.num("--lr-factor", "train.lr_reduction_factor", f.lr_factor);
  bind.num("--min-lr", "train.min_lr", f.min_lr);
  bind.num("--seed", "train.seed", f.seed);
  bind.num("--chunks", "train.chunks", f.chunks);
  bind.finish();

  if (f.task.size() != 1) throw ConfigError("task must be A, B, or C");
  LabelSchema schema = LabelSchema::for_task(f.task[0]);
  require_input(f.train_path, "--train");
  if (!f.val_path.empty()) require_input(f.val_path, "--val");
  if (!f.embeddings.empty()) require_input(f.embeddings, "--embeddings");
  if (f.checkpoint.empty()) throw ConfigError("--checkpoint output path is required");

  bool ensemble = f.arch == "ensemble";
  Arch single = Arch::keis_bigru;
  if (!ensemble) single = arch_from_name(f.arch);
  bool bert = !ensemble && single == Arch::bert_bi_head;
  if (bert && f.contextual.empty())
    throw ConfigError("--contextual is required for bert_bi_head");
  if (!f.contextual.empty()) require_input(f.contextual, "--contextual");

  Dataset full = load_tsv(f.train_path, schema, true);
  Dataset train_set, val_set;
  if (f.val_path.empty()) {
    RngStream split_rng(f.seed, 1000);
    std::tie(train_set, val_set) = stratified_split(full, f.val_fraction, split_rng);
  } else {
    train_set = std::move(full);
    val_set = load_tsv(f.val_path, schema, true);
  }
  if (train_set.size() == 0 || val_set.size() == 0)
    throw DataError("train/validation split left an empty set");

  std::optional<EmbeddingTable> table;
  if (!f.embeddings.empty()) {
    table = load_embeddings(f.embeddings);
    for (const std::string& w : table->warnings()) std::cerr << "warning: " << w << "\n";
  }
  std::optional<ContextualFile> ctx;
  if (bert) ctx = ContextualFile::load(f.contextual);

  auto report = [&](const TrainedMember& m, const std::string& path) {
    const EpochStats& last = m.history.epochs.back();
    std::cout << arch_name(m.model.spec().arch) << ": " << m.history.epochs.size()
              << " epoch(s), best epoch " << m.history.best_epoch << ", best val loss "
              << fmt6(m.history.best_val_loss) << ", last val macro-F1 "
              << fmt6(last.val_macro_f1) << "\n"
              << "checkpoint " << path << " (spec " << m.model.spec().digest_hex() << ")\n";
  };

  if (ensemble) {
    TrainedMember bigru = train_member(Arch::keis_bigru, f, schema, train_set, val_set,
                                       table ? &*table : nullptr, nullptr, 1);
    TrainedMember cnn = train_member(Arch::keis_cnn, f, schema, train_set, val_set,
                                     table ? &*table : nullptr, nullptr, 2);
    std::string p1 = member_path(f.checkpoint, Arch::keis_bigru);
    std::string p2 = member_path(f.checkpoint, Arch::keis_cnn);
    save_checkpoint(bigru.model, &bigru.vocab, p1);
    save_checkpoint(cnn.model, &cnn.vocab, p2);
    if (!f.history.empty()) {
      write_text_atomic(member_path(f.history, Arch::keis_bigru), history_csv(bigru.history));
      write_text_atomic(member_path(f.history, Arch::keis_cnn), history_csv(cnn.history));
    }
    report(bigru, p1);
    report(cnn, p2);
  } else {
    TrainedMember m = train_member(single, f, schema, train_set, val_set,
                                   table ? &*table : nullptr, ctx ? &*ctx : nullptr, 1);
    save_checkpoint(m.model, bert ? nullptr : &m.vocab, f.checkpoint);
    if (!f.history.empty()) write_text_atomic(f.history, history_csv(m.history));
    report(m, f.checkpoint);
  }
  return 0;
}

int cmd_predict(const std::string& config_path, Binder& bind, std::string task, std::string arch,
                std::string input, bool unlabeled, std::string checkpoint, std::string contextual,
                std::string output, double w_bigru, double w_cnn, std::size_t chunks) {
  bind.load(config_path);
  bind.str("--task", "data.task", task);
  bind.str("--arch", "model.arch", arch);
  bind.str("--input", "data.input", input);
  bind.boolean("--unlabeled", "data.unlabeled", unlabeled);
  bind.str("--checkpoint", "data.checkpoint", checkpoint);
  bind.str("--contextual", "data.contextual", contextual);
  bind.str("--output", "data.output", output);
  bind.num("--w-bigru", "ensemble.w_bigru", w_bigru);
  bind.num("--w-cnn", "ensemble.w_cnn", w_cnn);
  bind.num("--chunks", "train.chunks", chunks);
  bind.finish();

  if (task.size() != 1) throw ConfigError("task must be A, B, or C");
  LabelSchema schema = LabelSchema::for_task(task[0]);
  require_input(input, "--input");
  if (output.empty()) throw ConfigError("--output path is required");
  if (checkpoint.empty()) throw ConfigError("--checkpoint path is required");

  Dataset data = load_tsv(input, schema, !unlabeled);

  bool ensemble = arch == "ensemble";
  std::vector<Tensor> probs;

  if (ensemble) {
    std::string p1 = member_path(checkpoint, Arch::keis_bigru);
    std::string p2 = member_path(checkpoint, Arch::keis_cnn);
    require_input(p1, "ensemble checkpoint");
    require_input(p2, "ensemble checkpoint");
    LoadedCheckpoint bigru = load_checkpoint(p1);
    LoadedCheckpoint cnn = load_checkpoint(p2);
    if (!bigru.vocab || !cnn.vocab)
      throw DataError("ensemble checkpoints must carry their vocabularies");
    EnsembleWeights w{w_bigru, w_cnn};
    w.validate();

    std::vector<ModelInput> in1, in2;
    for (const DataRecord& r : data.records()) {
      in1.push_back(encode_record(r, *bigru.vocab, bigru.model.spec().seq_len));
      in2.push_back(encode_record(r, *cnn.vocab, cnn.model.spec().seq_len));
    }
    std::vector<Tensor> p_bigru = predict_batch(bigru.model, in1, chunks);
    std::vector<Tensor> p_cnn = predict_batch(cnn.model, in2, chunks);
    probs.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      probs.push_back(ensemble_predict(p_bigru[i], p_cnn[i], w));
  } else {
    require_input(checkpoint, "--checkpoint");
    LoadedCheckpoint loaded = load_checkpoint(checkpoint);
    Arch a = loaded.model.spec().arch;
    if (arch != "auto" && a != arch_from_name(arch))
      throw ConfigError("checkpoint holds " + std::string(arch_name(a)) + ", --arch says " +
                        arch);
    std::vector<ModelInput> inputs;
    if (a == Arch::bert_bi_head) {
      if (contextual.empty()) throw ConfigError("--contextual is required for bert_bi_head");
      require_input(contextual, "--contextual");
      ContextualFile ctx = ContextualFile::load(contextual);
      for (const DataRecord& r : data.records()) inputs.push_back(contextual_record(r, ctx));
    } else {
      if (!loaded.vocab) throw DataError("checkpoint carries no vocabulary");
      for (const DataRecord& r : data.records())
        inputs.push_back(encode_record(r, *loaded.vocab, loaded.model.spec().seq_len));
    }
    probs = predict_batch(loaded.model, inputs, chunks);
  }

  std::string out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Tensor& p = probs[i];
    out += data.records()[i].id;
    out += '\t';
    if (schema.binary()) {
      int cls = decide_binary(p.values[0]);
      out += schema.labels[static_cast<std::size_t>(cls)];
      out += '\t';
      out += fmt6(p.values[0]);
    } else {
      int cls = decide_multiclass(p);
      out += schema.labels[static_cast<std::size_t>(cls)];
      for (std::size_t c = 0; c < p.numel(); ++c) {
        out += '\t';
        out += fmt6(p.values[c]);
      }
    }
    out += '\n';
  }
  write_text_atomic(output, out);
  std::cout << "predicted " << data.size() << " records -> " << output << "\n";
  return 0;
}

int cmd_evaluate(const std::string& config_path, Binder& bind, std::string task,
                 std::string gold_path, std::string pred_path, std::string json_out,
                 std::string text_out) {
  bind.load(config_path);
  bind.str("--task", "data.task", task);
  bind.str("--gold", "data.gold", gold_path);
  bind.str("--pred", "data.pred", pred_path);
  bind.str("--json", "data.json", json_out);
  bind.str("--text-out", "data.text_out", text_out);
  bind.finish();

  if (task.size() != 1) throw ConfigError("task must be A, B, or C");
  LabelSchema schema = LabelSchema::for_task(task[0]);
  require_input(gold_path, "--gold");
  require_input(pred_path, "--pred");

  Dataset gold = load_tsv(gold_path, schema, true);

  // Prediction file: id <TAB> label [<TAB> probabilities...].
  std::ifstream in(pred_path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + pred_path + "'");
  std::map<std::string, std::string> pred_by_id;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t t1 = line.find('\t');
    if (t1 == std::string::npos)
      throw DataError(pred_path + ":" + std::to_string(lineno) +
                      ": expected id<TAB>label columns");
    std::size_t t2 = line.find('\t', t1 + 1);
    std::string id = line.substr(0, t1);
    std::string label =
        t2 == std::string::npos ? line.substr(t1 + 1) : line.substr(t1 + 1, t2 - t1 - 1);
    if (schema.index_of(label) < 0)
      throw DataError(pred_path + ":" + std::to_string(lineno) + ": label '" + label +
                      "' is not in the sub-task " + std::string(1, schema.task) + " schema");
    if (!pred_by_id.emplace(id, label).second)
      throw DataError(pred_path + ":" + std::to_string(lineno) + ": duplicate id '" + id + "'");
  }

  std::vector<std::string> preds, golds;
  preds.reserve(gold.size());
  golds.reserve(gold.size());
  for (const DataRecord& r : gold.records()) {
    auto it = pred_by_id.find(r.id);
    if (it == pred_by_id.end())
      throw DataError("prediction file has no row for id '" + r.id + "'");
    preds.push_back(it->second);
    golds.push_back(r.label);
  }

  MetricsReport rep = score(preds, golds, schema);
  std::cout << rep.to_text();
  if (!json_out.empty()) write_text_atomic(json_out, rep.to_json() + "\n");
  if (!text_out.empty()) write_text_atomic(text_out, rep.to_text());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "textclf: gated-recurrent / convolutional tweet classification toolkit\n"
      "Defaults follow the reference setup: epochs 20, batch 128, lr 0.01 with amsgrad,\n"
      "L2 0.01, Gaussian noise 0.1, sequence length 60, ensemble weights 0.6/0.4."};
  app.require_subcommand(1);

  // -- preprocess ------------------------------------------------------------
  auto* pre = app.add_subcommand("preprocess", "Clean tweets in an OLID-style TSV");
  std::string pre_cfg, pre_task = "A", pre_lang = "english", pre_in, pre_out;
  bool pre_unlabeled = false;
  bool pre_urls = true, pre_mentions = true, pre_punct = true, pre_elong = true,
       pre_emoji = true, pre_digits = false, pre_foreign = false;
  pre->add_option("--config", pre_cfg, "INI-style config file (flags override it)");
  pre->add_option("--task", pre_task, "Sub-task: A, B, or C (default A)");
  pre->add_option("--language", pre_lang,
                  "arabic | english | danish | greek | turkish (default english)");
  pre->add_option("--input", pre_in, "Input TSV (id<TAB>text[<TAB>label])");
  pre->add_option("--output", pre_out, "Cleaned TSV output path");
  pre->add_flag("--unlabeled", pre_unlabeled, "Input has no label column");
  pre->add_flag("--strip-urls,!--no-strip-urls", pre_urls, "Drop URL tokens (default on)");
  pre->add_flag("--strip-mentions,!--no-strip-mentions", pre_mentions,
                "Drop @-mention tokens (default on)");
  pre->add_flag("--strip-punctuation,!--no-strip-punctuation", pre_punct,
                "Remove punctuation/symbols (default on)");
  pre->add_flag("--collapse-elongation,!--no-collapse-elongation", pre_elong,
                "Collapse runs of 3+ repeated characters (default on)");
  pre->add_flag("--strip-emoji,!--no-strip-emoji", pre_emoji, "Remove emoji (default on)");
  pre->add_flag("--strip-digits,!--no-strip-digits", pre_digits,
                "Remove digits (Arabic default on)");
  pre->add_flag("--strip-foreign,!--no-strip-foreign", pre_foreign,
                "Remove Latin letters (Arabic default on)");

  // -- augment ---------------------------------------------------------------
  auto* aug = app.add_subcommand("augment", "Expand a labeled corpus via embedding synonyms");
  std::string aug_cfg, aug_task = "A", aug_in, aug_emb, aug_out, aug_syn,
              aug_policy = "replace_all";
  std::size_t aug_topn = 1000, aug_max = 1;
  double aug_mincos = 0.7;
  std::uint64_t aug_seed = 42;
  aug->add_option("--config", aug_cfg, "INI-style config file (flags override it)");
  aug->add_option("--task", aug_task, "Sub-task: A, B, or C (default A)");
  aug->add_option("--input", aug_in, "Labeled training TSV (preprocessed)");
  aug->add_option("--embeddings", aug_emb, "word2vec text-format embedding file");
  aug->add_option("--output", aug_out, "Expanded TSV (originals + synthetic copies)");
  aug->add_option("--synonyms-out", aug_syn, "Optional synonym-table TSV export");
  aug->add_option("--top-n", aug_topn, "Frequent-word budget (default 1000)");
  aug->add_option("--min-cos", aug_mincos, "Minimum neighbor cosine (default 0.7)");
  aug->add_option("--policy", aug_policy, "replace_all | per_tweet_max (default replace_all)");
  aug->add_option("--max-per-tweet", aug_max, "Replacements per tweet for per_tweet_max");
  aug->add_option("--seed", aug_seed, "Random seed (default 42)");

  // -- train -----------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "Train a model (or the 0.6/0.4 ensemble)");
  std::string tr_cfg;
  TrainFlags tf;
  tr->add_option("--config", tr_cfg, "INI-style config file (flags override it)");
  tr->add_option("--task", tf.task, "Sub-task: A, B, or C (default A)");
  tr->add_option("--arch", tf.arch,
                 "keis_bigru | keis_cnn | bert_bi_head | ensemble (default keis_bigru)");
  tr->add_option("--train", tf.train_path, "Labeled training TSV (preprocessed)");
  tr->add_option("--val", tf.val_path, "Optional labeled validation TSV");
  tr->add_option("--val-fraction", tf.val_fraction,
                 "Stratified split fraction when --val is absent (default 0.2)");
  tr->add_option("--embeddings", tf.embeddings, "Optional pretrained embedding file");
  tr->add_option("--embed-dim", tf.embed_dim,
                 "Embedding width when no pretrained table is given (default 300)");
  tr->add_option("--contextual", tf.contextual,
                 "Precomputed contextual-embedding file (bert_bi_head)");
  tr->add_option("--checkpoint", tf.checkpoint,
                 "Checkpoint output path (ensemble appends .bigru/.cnn)");
  tr->add_option("--history", tf.history, "Per-epoch CSV output path");
  tr->add_option("--max-len", tf.max_len, "Token sequence length (default 60)");
  tr->add_option("--vocab-limit", tf.vocab_limit, "Vocabulary cap, 0 = unbounded");
  tr->add_option("--noise", tf.noise, "Gaussian noise stddev (default 0.1)");
  tr->add_flag("--unidirectional-second", tf.unidirectional_second,
               "bert_bi_head: plain GRU instead of Bi-GRU for the second stage");
  tr->add_option("--epochs", tf.epochs, "Training epochs (default 20)");
  tr->add_option("--batch-size", tf.batch_size, "Mini-batch size (default 128)");
  tr->add_option("--lr", tf.lr, "amsgrad learning rate (default 0.01)");
  tr->add_option("--l2", tf.l2, "L2 kernel penalty (default 0.01)");
  tr->add_option("--patience", tf.patience, "Early-stopping patience (default 5)");
  tr->add_option("--lr-factor", tf.lr_factor, "Plateau LR reduction factor (default 0.5)");
  tr->add_option("--min-lr", tf.min_lr, "Learning-rate floor (default 1e-5)");
  tr->add_option("--seed", tf.seed, "Random seed (default 42)");
  tr->add_option("--chunks", tf.chunks, "Parallel gradient chunks (default 8)");

  // -- predict ---------------------------------------------------------------
  auto* pr = app.add_subcommand("predict", "Write per-record labels and probabilities");
  std::string pr_cfg, pr_task = "A", pr_arch = "auto", pr_in, pr_ckpt, pr_ctx, pr_out;
  bool pr_unlabeled = false;
  double pr_wb = 0.6, pr_wc = 0.4;
  std::size_t pr_chunks = 8;
  pr->add_option("--config", pr_cfg, "INI-style config file (flags override it)");
  pr->add_option("--task", pr_task, "Sub-task: A, B, or C (default A)");
  pr->add_option("--arch", pr_arch,
                 "auto | keis_bigru | keis_cnn | bert_bi_head | ensemble (default auto)");
  pr->add_option("--input", pr_in, "Input TSV (preprocessed)");
  pr->add_flag("--unlabeled", pr_unlabeled, "Input has no label column");
  pr->add_option("--checkpoint", pr_ckpt, "Checkpoint path (ensemble base path)");
  pr->add_option("--contextual", pr_ctx, "Contextual-embedding file (bert_bi_head)");
  pr->add_option("--output", pr_out, "Prediction TSV output path");
  pr->add_option("--w-bigru", pr_wb, "Ensemble weight for keis_bigru (default 0.6)");
  pr->add_option("--w-cnn", pr_wc, "Ensemble weight for keis_cnn (default 0.4)");
  pr->add_option("--chunks", pr_chunks, "Parallel prediction chunks (default 8)");

  // -- evaluate ----------------------------------------------------------------
  auto* ev = app.add_subcommand("evaluate", "Macro-F1 report for a prediction file");
  std::string ev_cfg, ev_task = "A", ev_gold, ev_pred, ev_json, ev_text;
  ev->add_option("--config", ev_cfg, "INI-style config file (flags override it)");
  ev->add_option("--task", ev_task, "Sub-task: A, B, or C (default A)");
  ev->add_option("--gold", ev_gold, "Labeled gold TSV");
  ev->add_option("--pred", ev_pred, "Prediction TSV from the predict command");
  ev->add_option("--json", ev_json, "Optional JSON report output path");
  ev->add_option("--text-out", ev_text, "Optional text report output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // bad flags are configuration errors
  }

  try {
    if (pre->parsed()) {
      Binder b(pre);
      return cmd_preprocess(pre_cfg, b, pre_task, pre_lang, pre_in, pre_out, pre_unlabeled, {},
                            pre_urls, pre_mentions, pre_punct, pre_elong, pre_emoji, pre_digits,
                            pre_foreign);
    }
    if (aug->parsed()) {
      Binder b(aug);
      return cmd_augment(aug_cfg, b, aug_task, aug_in, aug_emb, aug_out, aug_syn, aug_topn,
                         aug_mincos, aug_policy, aug_max, aug_seed);
    }
    if (tr->parsed()) {
      Binder b(tr);
      return cmd_train(tr_cfg, b, tf);
    }
    if (pr->parsed()) {
      Binder b(pr);
      return cmd_predict(pr_cfg, b, pr_task, pr_arch, pr_in, pr_unlabeled, pr_ckpt, pr_ctx,
                         pr_out, pr_wb, pr_wc, pr_chunks);
    }
    if (ev->parsed()) {
      Binder b(ev);
      return cmd_evaluate(ev_cfg, b, ev_task, ev_gold, ev_pred, ev_json, ev_text);
    }
    std::cerr << "error: no command\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
