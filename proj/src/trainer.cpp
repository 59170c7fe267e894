#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "textclf/data.hpp"
#include "textclf/errors.hpp"
#include "textclf/kernels.hpp"
#include "textclf/optim.hpp"

// Mini-batch training loop: shuffling, chunk-parallel gradients, validation
// checkpointing, plateau LR reduction, early stopping.

namespace textclf {

namespace {

// Stream ids for per-example noise/dropout draws. Keyed by (epoch, dataset
// index) so the realized noise is independent of batch membership, chunk
// layout, and thread count.
std::uint64_t example_stream(std::size_t epoch, std::size_t dataset_index) {
  return (1ULL << 40) + static_cast<std::uint64_t>(epoch) * (1ULL << 28) +
         static_cast<std::uint64_t>(dataset_index);
}

LossKind loss_kind_for(const Model& model) {
  return model.spec().head == HeadKind::binary ? LossKind::binary_cross_entropy
                                               : LossKind::categorical_cross_entropy;
}

int decide(const Model& model, const Tensor& probs) {
  return model.spec().head == HeadKind::binary ? decide_binary(probs.values[0])
                                               : decide_multiclass(probs);
}

}  // namespace

double batch_gradient(Model& model, const std::vector<TrainExample>& dataset,
                      const std::vector<std::size_t>& batch_indices, std::size_t epoch,
                      std::uint64_t seed, std::size_t chunks, GradBuffer& grads) {
  if (batch_indices.empty()) throw ShapeError("batch_gradient: empty batch");
  zero_grads(grads);
  LossKind kind = loss_kind_for(model);

  auto ranges = kernels::chunk_ranges(batch_indices.size(), chunks);
  std::vector<GradBuffer> chunk_grads(ranges.size());
  std::vector<double> chunk_loss(ranges.size(), 0.0);

  kernels::parallel_chunks(ranges.size(), [&](std::size_t c) {
    auto [lo, hi] = ranges[c];
    if (lo == hi) return;
    Model worker = model.worker_clone();
    GradBuffer local = make_grad_buffer(worker.params());
    double acc = 0.0;
    for (std::size_t p = lo; p < hi; ++p) {
      std::size_t di = batch_indices[p];
      const TrainExample& ex = dataset[di];
      RngStream rng(seed, example_stream(epoch, di));
      Tensor probs = worker.forward(ex.input, Phase::train, &rng);
      LossResult lr = loss(kind, probs, ex.label);
      acc += lr.value;
      worker.backward(lr.grad, local);
    }
    chunk_grads[c] = std::move(local);
    chunk_loss[c] = acc;
  });

  double total = 0.0;
  for (std::size_t c = 0; c < ranges.size(); ++c) {
    if (ranges[c].first == ranges[c].second) continue;
    accumulate_grads(grads, chunk_grads[c]);
    total += chunk_loss[c];
  }
  double inv = 1.0 / static_cast<double>(batch_indices.size());
  scale_grads(grads, inv);
  return total * inv;
}

std::vector<Tensor> predict_batch(const Model& model, const std::vector<ModelInput>& inputs,
                                  std::size_t chunks) {
  std::vector<Tensor> out(inputs.size());
  auto ranges = kernels::chunk_ranges(inputs.size(), chunks);
  kernels::parallel_chunks(ranges.size(), [&](std::size_t c) {
    auto [lo, hi] = ranges[c];
    if (lo == hi) return;
    Model worker = model.worker_clone();
    for (std::size_t i = lo; i < hi; ++i) out[i] = worker.predict(inputs[i]);
  });
  return out;
}

double mean_validation_loss(const Model& model, const std::vector<TrainExample>& valid,
                            std::size_t chunks) {
  if (valid.empty()) throw ShapeError("mean_validation_loss: empty set");
  LossKind kind = loss_kind_for(model);
  auto ranges = kernels::chunk_ranges(valid.size(), chunks);
  std::vector<double> chunk_loss(ranges.size(), 0.0);
  kernels::parallel_chunks(ranges.size(), [&](std::size_t c) {
    auto [lo, hi] = ranges[c];
    if (lo == hi) return;
    Model worker = model.worker_clone();
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
      acc += loss(kind, worker.predict(valid[i].input), valid[i].label).value;
    chunk_loss[c] = acc;
  });
  double total = 0.0;
  for (double v : chunk_loss) total += v;
  return total / static_cast<double>(valid.size());
}

TrainHistory train_model(Model& model, const std::vector<TrainExample>& train,
                         const std::vector<TrainExample>& valid, const TrainConfig& cfg) {
  if (train.empty() || valid.empty())
    throw ConfigError("train_model: train and validation sets must be non-empty");
  if (cfg.epochs == 0 || cfg.batch_size == 0)
    throw ConfigError("train_model: epochs and batch_size must be positive");
  if (cfg.lr <= 0.0 || cfg.l2_lambda < 0.0)
    throw ConfigError("train_model: lr must be positive and l2_lambda nonnegative");
  int classes = static_cast<int>(model.spec().head_units() == 1 ? 2 : model.spec().head_units());
  for (const auto* set : {&train, &valid})
    for (const TrainExample& ex : *set)
      if (ex.label < 0 || ex.label >= classes)
        throw ConfigError("train_model: label index " + std::to_string(ex.label) +
                          " does not fit a " + std::to_string(classes) + "-class head");

  AmsgradConfig ocfg;
  ocfg.lr = cfg.lr;
  Amsgrad opt(model.params(), ocfg);
  GradBuffer grads = make_grad_buffer(model.params());

  std::vector<int> val_golds;
  std::vector<ModelInput> val_inputs;
  val_golds.reserve(valid.size());
  val_inputs.reserve(valid.size());
  for (const TrainExample& ex : valid) {
    val_golds.push_back(ex.label);
    val_inputs.push_back(ex.input);
  }

  TrainHistory history;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_snapshot;
  std::size_t non_improving = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    RngStream shuffle_rng(cfg.seed, epoch);
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    double lr_in_effect = opt.learning_rate();
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
      double data_loss =
          batch_gradient(model, train, batch, epoch, cfg.seed, cfg.grad_chunks, grads);
      double penalty = l2_penalty(model.params(), cfg.l2_lambda, &grads);
      double batch_loss = data_loss + penalty;
      if (!std::isfinite(batch_loss))
        throw NumericError("train_model: non-finite loss at epoch " + std::to_string(epoch));
      epoch_loss += batch_loss * static_cast<double>(batch.size());
      opt.step(model.params(), grads);
    }
    epoch_loss /= static_cast<double>(train.size());

    double val_loss = mean_validation_loss(model, valid, cfg.grad_chunks);
    if (!std::isfinite(val_loss))
      throw NumericError("train_model: non-finite validation loss at epoch " +
                         std::to_string(epoch));
    std::vector<Tensor> val_probs = predict_batch(model, val_inputs, cfg.grad_chunks);
    std::vector<int> val_preds(val_probs.size());
    for (std::size_t i = 0; i < val_probs.size(); ++i) val_preds[i] = decide(model, val_probs[i]);
    double val_f1 = macro_f1_indices(val_preds, val_golds, static_cast<std::size_t>(classes));

    EpochStats stats{epoch, epoch_loss, val_loss, val_f1, lr_in_effect};
    history.epochs.push_back(stats);

    if (val_loss < best) {
      best = val_loss;
      history.best_epoch = epoch;
      best_snapshot = model.params().snapshot_values();
      non_improving = 0;
    } else {
      ++non_improving;
      // Plateau: shrink the learning rate one epoch before stopping would
      // trigger, stop when the patience budget is exhausted.
      if (cfg.patience >= 2 && non_improving == cfg.patience - 1) {
        double lr = std::max(opt.learning_rate() * cfg.lr_reduction_factor, cfg.min_lr);
        opt.set_learning_rate(lr);
      }
      if (cfg.patience > 0 && non_improving >= cfg.patience) break;
    }

    if (cfg.stop_callback && cfg.stop_callback(model, stats)) break;
  }

  if (!best_snapshot.empty()) model.params().restore_values(best_snapshot);
  history.best_val_loss = best;
  return history;
}

}  // namespace textclf
