#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "textclf/errors.hpp"
#include "textclf/model.hpp"
#include "textclf/optim.hpp"

#include "support.hpp"

using namespace textclf;

TEST_CASE("binary cross-entropy values, gradients, and clamping") {
  // class 0 is the positive class: gold 0 -> y = 1
  LossResult pos = loss(LossKind::binary_cross_entropy, Tensor::row({0.6}), 0);
  CHECK(pos.value == doctest::Approx(-std::log(0.6)).epsilon(1e-12));
  CHECK(pos.grad.values[0] == doctest::Approx(-1.0 / 0.6).epsilon(1e-12));

  LossResult neg = loss(LossKind::binary_cross_entropy, Tensor::row({0.6}), 1);
  CHECK(neg.value == doctest::Approx(-std::log(0.4)).epsilon(1e-12));
  CHECK(neg.grad.values[0] == doctest::Approx(1.0 / 0.4).epsilon(1e-12));

  // the probability floor keeps a confident miss finite
  LossResult clamped = loss(LossKind::binary_cross_entropy, Tensor::row({0.0}), 0);
  CHECK(clamped.value == doctest::Approx(-std::log(1e-12)).epsilon(1e-6));
  CHECK(std::isfinite(clamped.grad.values[0]));

  CHECK_THROWS_AS(loss(LossKind::binary_cross_entropy, Tensor::row({0.2, 0.8}), 0), ShapeError);
  CHECK_THROWS_AS(loss(LossKind::binary_cross_entropy, Tensor::row({0.2}), 2), ShapeError);
}

TEST_CASE("categorical cross-entropy values and gradients") {
  Tensor p = Tensor::row({0.2, 0.5, 0.3});
  LossResult r = loss(LossKind::categorical_cross_entropy, p, 1);
  CHECK(r.value == doctest::Approx(-std::log(0.5)).epsilon(1e-12));
  CHECK(r.grad.values[0] == 0.0);
  CHECK(r.grad.values[1] == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(r.grad.values[2] == 0.0);

  LossResult floor = loss(LossKind::categorical_cross_entropy, Tensor::row({1.0, 0.0}), 1);
  CHECK(floor.value == doctest::Approx(-std::log(1e-12)).epsilon(1e-6));

  CHECK_THROWS_AS(loss(LossKind::categorical_cross_entropy, p, 3), ShapeError);
  CHECK_THROWS_AS(loss(LossKind::categorical_cross_entropy, p, -1), ShapeError);
}

TEST_CASE("l2 penalty touches kernels only") {
  ParamStore ps;
  std::size_t w = ps.add("w", Tensor::row({2.0, -1.0}), true);
  std::size_t b = ps.add("b", Tensor::row({5.0}), false);

  GradBuffer grads = make_grad_buffer(ps);
  double penalty = l2_penalty(ps, 0.01, &grads);
  CHECK(penalty == doctest::Approx(0.01 * 5.0).epsilon(1e-15));
  CHECK(grads[w].values[0] == doctest::Approx(2 * 0.01 * 2.0).epsilon(1e-15));
  CHECK(grads[w].values[1] == doctest::Approx(2 * 0.01 * -1.0).epsilon(1e-15));
  CHECK(grads[b].values[0] == 0.0);

  CHECK(l2_penalty(ps, 0.0, nullptr) == 0.0);
  CHECK_THROWS_AS(l2_penalty(ps, -0.5, nullptr), ConfigError);
}

TEST_CASE("amsgrad single step on f(x) = x^2 from x = 1") {
  ParamStore ps;
  std::size_t x = ps.add("x", Tensor::row({1.0}), false);
  AmsgradConfig cfg;  // lr 0.01, beta1 0.9, beta2 0.999, eps 1e-8
  Amsgrad opt(ps, cfg);

  GradBuffer grads = make_grad_buffer(ps);
  grads[x].values[0] = 2.0;  // f'(1)
  opt.step(ps, grads);

  // m = 0.1 * 2 = 0.2; v = vhat = 0.001 * 4 = 0.004 (no bias correction);
  // x <- 1 - 0.01 * 0.2 / (sqrt(0.004) + 1e-8)
  double want = 1.0 - 0.01 * 0.2 / (std::sqrt(0.004) + 1e-8);
  CHECK(ps.value(x).values[0] == doctest::Approx(want).epsilon(1e-15));
  CHECK(ps.value(x).values[0] == doctest::Approx(0.968377).epsilon(1e-6));
  CHECK(opt.steps_taken() == 1);
}

TEST_CASE("amsgrad drives the quadratic to zero and vhat never decreases") {
  ParamStore ps;
  std::size_t x = ps.add("x", Tensor::row({1.0}), false);
  Amsgrad opt(ps, {});
  GradBuffer grads = make_grad_buffer(ps);
  double prev_vhat = 0.0;
  for (int step = 0; step < 2000; ++step) {
    grads[x].values[0] = 2.0 * ps.value(x).values[0];
    opt.step(ps, grads);
    double vh = opt.vhat(x).values[0];
    CHECK(vh >= prev_vhat);
    prev_vhat = vh;
  }
  CHECK(std::abs(ps.value(x).values[0]) < 1e-2);
}

TEST_CASE("vhat stays monotone under adversarial gradient swings") {
  ParamStore ps;
  std::size_t w = ps.add("w", Tensor::row({0.0, 0.0, 0.0}), true);
  Amsgrad opt(ps, {});
  GradBuffer grads = make_grad_buffer(ps);
  RngStream rng(17, 0);
  std::vector<double> prev(3, 0.0);
  for (int step = 0; step < 500; ++step) {
    // alternate huge and tiny gradients to force v to shrink sometimes
    double mag = (step % 7 == 0) ? 10.0 : 0.01;
    for (double& g : grads[w].values) g = rng.uniform(-mag, mag);
    opt.step(ps, grads);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(opt.vhat(w).values[i] >= prev[i]);
      prev[i] = opt.vhat(w).values[i];
    }
  }
}

namespace {

// Tiny corpus whose validation labels are flipped: training fits the train
// labels ever better, so validation loss rises from the first epoch on. That
// fixes the plateau schedule exactly.
struct FlippedSetup {
  Model model;
  std::vector<TrainExample> train, val;

  FlippedSetup() {
    ModelSpec spec;
    spec.arch = Arch::keis_cnn;
    spec.head = HeadKind::binary;
    spec.seq_len = 8;
    spec.input_dim = 4;
    spec.vocab_size = 8;
    spec.noise_stddev = 0.0;
    RngStream build_rng(2024, 1);
    model = Model::build(spec, build_rng);
    RngStream rng(2024, 2);
    for (int e = 0; e < 4; ++e) {
      TrainExample ex;
      ex.input.ids.resize(spec.seq_len);
      for (int& id : ex.input.ids) id = 2 + static_cast<int>(rng.index(6));
      ex.input.mask.assign(spec.seq_len, 1);
      ex.label = 0;
      train.push_back(ex);
      ex.label = 1;  // flipped
      val.push_back(ex);
    }
  }
};

}  // namespace

TEST_CASE("plateau schedule: patience-2 run reduces lr once, stops, restores best") {
  FlippedSetup s;
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 4;
  cfg.lr = 0.05;
  cfg.l2_lambda = 0.0;
  cfg.patience = 2;
  cfg.seed = 5;
  cfg.grad_chunks = 2;

  TrainHistory h = train_model(s.model, s.train, s.val, cfg);

  // epoch 1 is best; epochs 2 and 3 fail to improve -> lr halves after epoch
  // 2 (patience - 1 misses) and training stops after epoch 3 (patience misses)
  REQUIRE(h.epochs.size() == 3);
  CHECK(h.best_epoch == 1);
  CHECK(h.epochs[0].val_loss < h.epochs[1].val_loss);
  CHECK(h.epochs[1].val_loss < h.epochs[2].val_loss);
  CHECK(h.epochs[0].lr == doctest::Approx(0.05));
  CHECK(h.epochs[1].lr == doctest::Approx(0.05));
  CHECK(h.epochs[2].lr == doctest::Approx(0.025));
  CHECK(h.best_val_loss == doctest::Approx(h.epochs[0].val_loss).epsilon(1e-15));

  // the model holds the epoch-1 (best) parameters again
  double restored = mean_validation_loss(s.model, s.val, 2);
  CHECK(restored == doctest::Approx(h.best_val_loss).epsilon(1e-12));
}

TEST_CASE("plateau schedule respects the learning-rate floor") {
  FlippedSetup s;
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 4;
  cfg.lr = 0.05;
  cfg.l2_lambda = 0.0;
  cfg.patience = 3;
  cfg.min_lr = 0.04;  // halving would undershoot: clamp to 0.04
  cfg.seed = 5;
  cfg.grad_chunks = 1;

  TrainHistory h = train_model(s.model, s.train, s.val, cfg);
  REQUIRE(h.epochs.size() == 4);  // best at 1, misses at 2, 3 (reduce), 4 (stop)
  CHECK(h.epochs[3].lr == doctest::Approx(0.04));
}

TEST_CASE("stop callback ends training early") {
  FlippedSetup s;
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 4;
  cfg.lr = 0.01;
  cfg.patience = 50;
  cfg.seed = 5;
  cfg.grad_chunks = 1;
  int calls = 0;
  cfg.stop_callback = [&](const Model&, const EpochStats& stats) {
    ++calls;
    return stats.epoch == 2;
  };
  TrainHistory h = train_model(s.model, s.train, s.val, cfg);
  CHECK(h.epochs.size() == 2);
  CHECK(calls == 2);
}

TEST_CASE("train_model validates its configuration") {
  FlippedSetup s;
  TrainConfig cfg;
  cfg.batch_size = 4;

  std::vector<TrainExample> empty;
  CHECK_THROWS_AS(train_model(s.model, empty, s.val, cfg), ConfigError);
  CHECK_THROWS_AS(train_model(s.model, s.train, empty, cfg), ConfigError);

  TrainConfig bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(train_model(s.model, s.train, s.val, bad), ConfigError);
  bad = cfg;
  bad.lr = 0.0;
  CHECK_THROWS_AS(train_model(s.model, s.train, s.val, bad), ConfigError);

  auto labeled = s.train;
  labeled[0].label = 2;  // outside the binary head's range
  CHECK_THROWS_AS(train_model(s.model, labeled, s.val, cfg), ConfigError);
}

TEST_CASE("batch gradients are deterministic per chunk count and agree across counts") {
  FlippedSetup s;
  std::vector<std::size_t> batch{0, 1, 2, 3};

  // repeating the same chunked call must reproduce every gradient bit
  GradBuffer ga = make_grad_buffer(s.model.params());
  GradBuffer gb = make_grad_buffer(s.model.params());
  Model ma = s.model.worker_clone();
  Model mb = s.model.worker_clone();
  double la = batch_gradient(ma, s.train, batch, 3, 42, 8, ga);
  double lb = batch_gradient(mb, s.train, batch, 3, 42, 8, gb);
  CHECK(la == lb);
  for (std::size_t p = 0; p < ga.size(); ++p) CHECK(ga[p].values == gb[p].values);

  // a different chunk count regroups the floating-point accumulation of
  // shared embedding rows, so agreement is to rounding, not bitwise
  GradBuffer g1 = make_grad_buffer(s.model.params());
  Model m1 = s.model.worker_clone();
  double l1 = batch_gradient(m1, s.train, batch, 3, 42, 1, g1);
  CHECK(l1 == doctest::Approx(la).epsilon(1e-14));
  for (std::size_t p = 0; p < g1.size(); ++p) {
    REQUIRE(g1[p].values.size() == ga[p].values.size());
    for (std::size_t i = 0; i < g1[p].values.size(); ++i) {
      double d = std::abs(g1[p].values[i] - ga[p].values[i]);
      double scale = std::max({1.0, std::abs(g1[p].values[i]), std::abs(ga[p].values[i])});
      CHECK(d <= 1e-12 * scale);
    }
  }
}
