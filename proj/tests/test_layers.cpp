#include <doctest.h>

#include <cmath>
#include <vector>

#include "textclf/errors.hpp"
#include "textclf/layers.hpp"
#include "textclf/params.hpp"
#include "textclf/rng.hpp"

#include "support.hpp"

using namespace textclf;
using testsup::random_tensor;

namespace {

// Scalar GRU/LSTM helpers: every weight the same value, biases adjustable.
struct ScalarGru {
  Tensor Wz, Wr, Wh, Uz, Ur, Uh, bz, br, bh;
  ScalarGru(double w, double bz_v = 0, double br_v = 0, double bh_v = 0)
      : Wz(Tensor::matrix(1, 1, {w})),
        Wr(Tensor::matrix(1, 1, {w})),
        Wh(Tensor::matrix(1, 1, {w})),
        Uz(Tensor::matrix(1, 1, {w})),
        Ur(Tensor::matrix(1, 1, {w})),
        Uh(Tensor::matrix(1, 1, {w})),
        bz(Tensor::row({bz_v})),
        br(Tensor::row({br_v})),
        bh(Tensor::row({bh_v})) {}
  GruWeights view() const { return {&Wz, &Wr, &Wh, &Uz, &Ur, &Uh, &bz, &br, &bh}; }
};

GruParamIds random_gru(ParamStore& ps, const std::string& prefix, std::size_t in,
                       std::size_t hidden, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return add_gru_params(ps, prefix, in, hidden, rng);
}

}  // namespace

TEST_CASE("gru_step: zero weights force the half-way gates") {
  ScalarGru cell(0.0);
  GruStepTrace t = gru_step(cell.view(), Tensor::row({0.5}), Tensor::row({1.0}));
  CHECK(t.z.values[0] == 0.5);
  CHECK(t.r.values[0] == 0.5);
  CHECK(t.hcand.values[0] == 0.0);
  // h = (1-z) * h_prev + z * hcand = 0.5
  CHECK(t.h.values[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("gru_step: a closed update gate carries the state through") {
  ScalarGru cell(1.0, /*bz=*/-1e6);
  Tensor h_prev = Tensor::row({0.37});
  GruStepTrace t = gru_step(cell.view(), Tensor::row({2.0}), h_prev);
  CHECK(std::abs(t.h.values[0] - 0.37) < 1e-9);
}

TEST_CASE("gru_step: scalar all-ones cell") {
  ScalarGru cell(1.0);
  GruStepTrace t = gru_step(cell.view(), Tensor::row({1.0}), Tensor::row({0.0}));
  double sig1 = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(t.h.values[0] == doctest::Approx(0.5568).epsilon(1e-3));
  CHECK(t.h.values[0] == doctest::Approx(sig1 * std::tanh(1.0)).epsilon(1e-12));
}

TEST_CASE("gru_step: gates bounded, output convex between h_prev and candidate") {
  RngStream rng(61, 0);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t in = 1 + rng.index(3), hidden = 1 + rng.index(3);
    ParamStore ps;
    GruParamIds ids = add_gru_params(ps, "g", in, hidden, rng);
    for (std::size_t p = 0; p < ps.size(); ++p)
      for (double& v : ps.value(p).values) v = rng.uniform(-2.0, 2.0);
    GruWeights w{&ps.value(ids.Wz), &ps.value(ids.Wr), &ps.value(ids.Wh),
                 &ps.value(ids.Uz), &ps.value(ids.Ur), &ps.value(ids.Uh),
                 &ps.value(ids.bz), &ps.value(ids.br), &ps.value(ids.bh)};
    Tensor x = random_tensor({in}, rng, -3.0, 3.0);
    Tensor h_prev = random_tensor({hidden}, rng, -1.0, 1.0);
    GruStepTrace t = gru_step(w, x, h_prev);
    for (std::size_t i = 0; i < hidden; ++i) {
      CHECK(t.z.values[i] > 0.0);
      CHECK(t.z.values[i] < 1.0);
      CHECK(t.r.values[i] > 0.0);
      CHECK(t.r.values[i] < 1.0);
      CHECK(t.hcand.values[i] > -1.0);
      CHECK(t.hcand.values[i] < 1.0);
      double lo = std::min(h_prev.values[i], t.hcand.values[i]);
      double hi = std::max(h_prev.values[i], t.hcand.values[i]);
      CHECK(t.h.values[i] >= lo - 1e-12);
      CHECK(t.h.values[i] <= hi + 1e-12);
    }
  }
}

TEST_CASE("lstm_step: zero weights, carried memory, scalar all-ones cell") {
  auto scalar_lstm = [](double w, double bi, double bf) {
    struct Cell {
      Tensor Wi, Wf, Wo, Wg, Ui, Uf, Uo, Ug, bi, bf, bo, bg;
    };
    Cell c;
    c.Wi = c.Wf = c.Wo = c.Wg = Tensor::matrix(1, 1, {w});
    c.Ui = c.Uf = c.Uo = c.Ug = Tensor::matrix(1, 1, {w});
    c.bi = Tensor::row({bi});
    c.bf = Tensor::row({bf});
    c.bo = Tensor::row({0.0});
    c.bg = Tensor::row({0.0});
    return c;
  };

  {  // all zero -> h' = c' = 0
    auto c = scalar_lstm(0.0, 0.0, 0.0);
    LstmWeights w{&c.Wi, &c.Wf, &c.Wo, &c.Wg, &c.Ui, &c.Uf, &c.Uo, &c.Ug,
                  &c.bi, &c.bf, &c.bo, &c.bg};
    LstmStepTrace t = lstm_step(w, Tensor::row({3.0}), Tensor::row({0.0}), Tensor::row({0.0}));
    CHECK(t.h.values[0] == 0.0);
    CHECK(t.c.values[0] == 0.0);
  }
  {  // forget gate pinned open, input gate pinned shut -> c' == c_prev
    auto c = scalar_lstm(1.0, -1e6, 1e6);
    LstmWeights w{&c.Wi, &c.Wf, &c.Wo, &c.Wg, &c.Ui, &c.Uf, &c.Uo, &c.Ug,
                  &c.bi, &c.bf, &c.bo, &c.bg};
    LstmStepTrace t = lstm_step(w, Tensor::row({2.0}), Tensor::row({0.1}), Tensor::row({0.42}));
    CHECK(std::abs(t.c.values[0] - 0.42) < 1e-9);
  }
  {  // scalar all-ones: i=f=o=sigmoid(1), g=tanh(1), c'=i*g, h'=o*tanh(c')
    auto c = scalar_lstm(1.0, 0.0, 0.0);
    LstmWeights w{&c.Wi, &c.Wf, &c.Wo, &c.Wg, &c.Ui, &c.Uf, &c.Uo, &c.Ug,
                  &c.bi, &c.bf, &c.bo, &c.bg};
    LstmStepTrace t = lstm_step(w, Tensor::row({1.0}), Tensor::row({0.0}), Tensor::row({0.0}));
    double sig1 = 1.0 / (1.0 + std::exp(-1.0));
    double c_want = sig1 * std::tanh(1.0);
    CHECK(t.c.values[0] == doctest::Approx(c_want).epsilon(1e-12));
    CHECK(t.h.values[0] == doctest::Approx(sig1 * std::tanh(c_want)).epsilon(1e-12));
    CHECK(t.h.values[0] == doctest::Approx(0.3696063529).epsilon(1e-9));
    CHECK(t.h.values[0] > -1.0);
    CHECK(t.h.values[0] < 1.0);
  }
}

TEST_CASE("bidirectional_run: widths, single step, swap-and-reverse symmetry") {
  ParamStore ps;
  GruParamIds f = random_gru(ps, "f", 3, 4, 71);
  GruParamIds b = random_gru(ps, "b", 3, 4, 72);
  auto view = [&](const GruParamIds& ids) {
    return GruWeights{&ps.value(ids.Wz), &ps.value(ids.Wr), &ps.value(ids.Wh),
                      &ps.value(ids.Uz), &ps.value(ids.Ur), &ps.value(ids.Uh),
                      &ps.value(ids.bz), &ps.value(ids.br), &ps.value(ids.bh)};
  };

  RngStream rng(73, 0);
  Tensor seq = random_tensor({5, 3}, rng);
  Tensor out = bidirectional_run(view(f), view(b), seq);
  CHECK(out.rows() == 5);
  CHECK(out.cols() == 8);

  // length 1: both halves are single-step cell outputs from h = 0
  Tensor one = random_tensor({1, 3}, rng);
  Tensor out1 = bidirectional_run(view(f), view(b), one);
  Tensor x0 = Tensor::row({one.values[0], one.values[1], one.values[2]});
  GruStepTrace tf = gru_step(view(f), x0, Tensor::zeros({4}));
  GruStepTrace tb = gru_step(view(b), x0, Tensor::zeros({4}));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(out1.at2(0, i) == doctest::Approx(tf.h.values[i]).epsilon(1e-15));
    CHECK(out1.at2(0, 4 + i) == doctest::Approx(tb.h.values[i]).epsilon(1e-15));
  }

  // swapping the cells and reversing the input time-reverses the output and
  // swaps its halves
  Tensor rev = Tensor::zeros({5, 3});
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t j = 0; j < 3; ++j) rev.at2(t, j) = seq.at2(4 - t, j);
  Tensor swapped = bidirectional_run(view(b), view(f), rev);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(swapped.at2(t, j) == doctest::Approx(out.at2(4 - t, 4 + j)).epsilon(1e-15));
      CHECK(swapped.at2(t, 4 + j) == doctest::Approx(out.at2(4 - t, j)).epsilon(1e-15));
    }

  CHECK_THROWS_AS(bidirectional_run(view(f), view(b), Tensor::zeros({0, 3})), ShapeError);
}

TEST_CASE("conv branch: map length, zero case, stack width, short input error") {
  RngStream rng(81, 0);
  ParamStore ps;
  std::size_t filters =
      ps.add("c.filters", init_params(InitScheme::glorot_uniform(), {3, 4, 5}, rng), true);
  std::size_t biases = ps.add("c.bias", Tensor::zeros({5}), false);
  ConvBranchLayer branch(&ps, filters, biases, 3, 4, 5);
  Tensor out = branch.forward(random_tensor({60, 4}, rng));
  CHECK(out.shape == std::vector<std::size_t>{5});  // pooled to one value per filter

  // all-zero input with zero biases pools to zero
  Tensor zero_out = branch.forward(Tensor::zeros({10, 4}));
  for (double v : zero_out.values) CHECK(v == 0.0);

  ParamStore ps2;
  RngStream rng2(82, 0);
  ConvStack stack(&ps2, "conv", 6, 36, rng2);
  CHECK(stack.out_width() == 144);
  CHECK(stack.min_length() == 7);
  Tensor feats = stack.forward(random_tensor({12, 6}, rng2));
  CHECK(feats.shape == std::vector<std::size_t>{144});

  try {
    stack.forward(random_tensor({6, 6}, rng2));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }
}

TEST_CASE("max-over-time picks the first position on exact ties") {
  // One filter of height 1 and width 1 with weight 1, bias 0: pooling over the
  // raw inputs. Two equal maxima: the gradient must land on the first.
  ParamStore ps;
  std::size_t filters = ps.add("c.f", Tensor::full({1, 1, 1}, 1.0), true);
  std::size_t biases = ps.add("c.b", Tensor::zeros({1}), false);
  ConvBranchLayer branch(&ps, filters, biases, 1, 1, 1);
  Tensor x = Tensor::zeros({4, 1});
  x.values = {1.0, 5.0, 5.0, 2.0};
  Tensor out = branch.forward(x);
  CHECK(out.values[0] == 5.0);
  GradBuffer grads = make_grad_buffer(ps);
  Tensor dx = branch.backward(Tensor::row({1.0}), grads);
  CHECK(dx.values[0] == 0.0);
  CHECK(dx.values[1] == 1.0);  // first of the tied positions
  CHECK(dx.values[2] == 0.0);
  CHECK(dx.values[3] == 0.0);
}

TEST_CASE("global average pool: masked mean, errors") {
  Tensor seq = Tensor::matrix(3, 2, {1, 2, 3, 4, 100, 200});
  std::vector<std::uint8_t> mask{1, 1, 0};
  Tensor avg = global_average_pool(seq, mask);
  CHECK(avg.values[0] == doctest::Approx(2.0));
  CHECK(avg.values[1] == doctest::Approx(3.0));

  CHECK_THROWS_AS(global_average_pool(seq, {0, 0, 0}), ShapeError);
  CHECK_THROWS_AS(global_average_pool(seq, {1, 1}), ShapeError);

  GlobalAveragePool layer;
  layer.forward(seq, mask);
  Tensor back = layer.backward(Tensor::row({2.0, 4.0}));
  CHECK(back.at2(0, 0) == doctest::Approx(1.0));  // grad / live count
  CHECK(back.at2(1, 1) == doctest::Approx(2.0));
  CHECK(back.at2(2, 0) == 0.0);
}

TEST_CASE("gaussian noise: eval identity, train replay, backward passthrough") {
  GaussianNoise layer(0.1);
  RngStream rng(91, 0);
  Tensor x = random_tensor({20}, rng);

  Tensor eval_out = layer.forward(x, Phase::eval, nullptr);
  CHECK(eval_out.values == x.values);

  Tensor train_out = layer.forward(x, Phase::train, &rng);
  bool changed = train_out.values != x.values;
  CHECK(changed);
  Tensor replay = layer.forward_replay(x);
  CHECK(replay.values == train_out.values);

  Tensor g = random_tensor({20}, rng);
  CHECK(layer.backward(g).values == g.values);

  GaussianNoise zero(0.0);
  Tensor same = zero.forward(x, Phase::train, &rng);
  CHECK(same.values == x.values);
}

TEST_CASE("dropout: eval identity, inverted scaling, frozen replay") {
  RngStream rng(92, 0);
  Tensor x = random_tensor({400}, rng, 0.5, 1.5);

  Dropout layer(0.25);
  CHECK(layer.forward(x, Phase::eval, nullptr).values == x.values);

  Tensor out = layer.forward(x, Phase::train, &rng);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (out.values[i] == 0.0) {
      ++zeros;
    } else {
      CHECK(out.values[i] == doctest::Approx(x.values[i] / 0.75).epsilon(1e-12));
    }
  }
  CHECK(zeros > 40);   // ~100 expected
  CHECK(zeros < 180);

  CHECK(layer.forward_replay(x).values == out.values);
  Tensor g = Tensor::full({400}, 1.0);
  Tensor back = layer.backward(g);
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK(back.values[i] == (out.values[i] == 0.0 ? 0.0 : doctest::Approx(1.0 / 0.75)));

  Dropout off(0.0);
  CHECK(off.forward(x, Phase::train, &rng).values == x.values);
  CHECK_THROWS_AS(Dropout(1.0), ShapeError);
  CHECK_THROWS_AS(Dropout(-0.1), ShapeError);
}

TEST_CASE("embedding layer: row lookup and range check") {
  ParamStore ps;
  Tensor table = Tensor::matrix(3, 2, {0, 0, 10, 11, 20, 21});
  std::size_t id = ps.add("embed.table", table, false);
  EmbeddingLayer layer(&ps, id, 3, 2);
  Tensor seq = layer.forward({2, 0, 1});
  CHECK(seq.at2(0, 0) == 20.0);
  CHECK(seq.at2(1, 1) == 0.0);
  CHECK(seq.at2(2, 0) == 10.0);

  CHECK_THROWS_AS(layer.forward({3}), ShapeError);
  CHECK_THROWS_AS(layer.forward({-1}), ShapeError);

  GradBuffer grads = make_grad_buffer(ps);
  layer.forward({1, 1});
  Tensor g = Tensor::matrix(2, 2, {1, 2, 3, 4});
  layer.backward(g, grads);
  CHECK(grads[id].at2(1, 0) == 4.0);  // scatter-add over repeated id
  CHECK(grads[id].at2(1, 1) == 6.0);
  CHECK(grads[id].at2(0, 0) == 0.0);
}

TEST_CASE("dense layer applies activation and shares parameters") {
  RngStream rng(93, 0);
  ParamStore ps;
  std::size_t b = 0;
  std::size_t w = add_dense_params(ps, "d", 3, 2, InitScheme::glorot_uniform(), rng, &b);
  DenseLayer layer(&ps, w, b, Activation::sigmoid);
  Tensor x = random_tensor({3}, rng);
  Tensor y = layer.forward(x);
  CHECK(y.shape == std::vector<std::size_t>{2});
  Tensor lin = add(matvec(ps.value(w), x), ps.value(b));
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(y.values[i] == doctest::Approx(sigmoid(lin.values[i])).epsilon(1e-15));

  CHECK(ps.at(w).kernel);
  CHECK_FALSE(ps.at(b).kernel);
}
