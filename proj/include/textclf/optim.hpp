#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "textclf/model.hpp"
#include "textclf/params.hpp"
#include "textclf/tensor.hpp"

namespace textclf {

enum class LossKind { binary_cross_entropy, categorical_cross_entropy };

struct LossResult {
  double value;
  Tensor grad;  // wrt the predicted probabilities
};

// BCE takes pred [1] and gold in {0,1}; CCE takes a probability vector and a
// gold class index. Probabilities are floored at 1e-12 before the log.
LossResult loss(LossKind kind, const Tensor& pred, int gold);

// penalty = lambda * sum of squared kernel entries; 2*lambda*W is added to the
// kernel gradients when `grads` is given. Biases and embedding tables marked
// non-kernel are untouched.
double l2_penalty(const ParamStore& ps, double lambda, GradBuffer* grads);

struct AmsgradConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// AMSGrad: the Adam variant that steps with the running max of the second
// moment and, per the original rule, no bias correction.
class Amsgrad {
 public:
  Amsgrad() = default;
  Amsgrad(const ParamStore& ps, AmsgradConfig cfg);

  void step(ParamStore& ps, const GradBuffer& grads);

  double learning_rate() const { return cfg_.lr; }
  void set_learning_rate(double lr) { cfg_.lr = lr; }
  const Tensor& vhat(std::size_t i) const { return vhat_[i]; }
  std::size_t steps_taken() const { return steps_; }

 private:
  AmsgradConfig cfg_;
  std::vector<Tensor> m_, v_, vhat_;
  std::size_t steps_ = 0;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_macro_f1 = 0.0;
  double lr = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // 1-based
  double best_val_loss = 0.0;
};

struct TrainExample {
  ModelInput input;
  int label = 0;  // schema class index; 0 is the positive class for binary heads
};

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  double lr = 0.01;
  double l2_lambda = 0.01;
  std::size_t patience = 5;
  double lr_reduction_factor = 0.5;
  double min_lr = 1e-5;
  std::uint64_t seed = 42;
  // Fixed chunk count for batch-gradient parallelism. Results are identical
  // for any thread count because reduction runs in chunk order.
  std::size_t grad_chunks = 8;
  // Optional per-epoch hook; returning true stops training after the epoch.
  std::function<bool(const Model& model, const EpochStats& stats)> stop_callback;
};

// Mini-batch training with per-epoch shuffling, validation-loss checkpointing,
// plateau learning-rate reduction, and early stopping. Returns the history;
// the model is left holding the best-validation-loss parameters.
TrainHistory train_model(Model& model, const std::vector<TrainExample>& train,
                         const std::vector<TrainExample>& valid, const TrainConfig& cfg);

// Mean data loss over `examples` with gradients accumulated into `grads`
// (already scaled by 1/batch). Parallel across fixed chunks, reduced in chunk
// order; `epoch` and the examples' dataset indices seed the per-example noise
// streams so results do not depend on chunking.
double batch_gradient(Model& model, const std::vector<TrainExample>& dataset,
                      const std::vector<std::size_t>& batch_indices, std::size_t epoch,
                      std::uint64_t seed, std::size_t chunks, GradBuffer& grads);

// Eval-phase predictions for a whole dataset, chunk-parallel, output in input
// order.
std::vector<Tensor> predict_batch(const Model& model, const std::vector<ModelInput>& inputs,
                                  std::size_t chunks);

double mean_validation_loss(const Model& model, const std::vector<TrainExample>& valid,
                            std::size_t chunks);

}  // namespace textclf
