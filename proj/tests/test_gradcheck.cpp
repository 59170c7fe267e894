#include <doctest.h>

#include <cstdint>
#include <vector>

#include "textclf/model.hpp"
#include "textclf/optim.hpp"

#include "gradcheck.hpp"
#include "support.hpp"

using namespace textclf;
using testsup::GradReport;

namespace {

constexpr std::size_t kConfigs = 20;
constexpr std::uint64_t kSeed = 0xC0FFEE;

void expect_tight(const GradReport& rep) {
  INFO(rep.name, ": max rel err ", rep.max_rel, " over ", rep.checks, " checks");
  CHECK(rep.checks > 0);
  CHECK(rep.max_rel < 1e-4);
}

}  // namespace

TEST_CASE("finite differences confirm every layer backward") {
  for (const GradReport& rep : testsup::run_all_sweeps(kConfigs, kSeed)) expect_tight(rep);
}

TEST_CASE("whole-model gradients match finite differences (eval phase)") {
  // Noise and dropout are inert in eval phase, so the eval forward is a pure
  // function of parameters and the FD comparison is exact. A deterministic
  // subsample of parameter slots keeps this fast; layer sweeps above cover
  // every slot type exhaustively.
  struct Case {
    Arch arch;
    HeadKind head;
  };
  const Case cases[] = {
      {Arch::keis_bigru, HeadKind::binary},
      {Arch::keis_cnn, HeadKind::binary},
      {Arch::bert_bi_head, HeadKind::three_class},
  };

  for (const Case& c : cases) {
    ModelSpec spec;
    spec.arch = c.arch;
    spec.head = c.head;
    spec.seq_len = c.arch == Arch::keis_cnn ? 8 : 5;
    spec.input_dim = c.arch == Arch::bert_bi_head ? 6 : 5;
    spec.vocab_size = c.arch == Arch::bert_bi_head ? 0 : 12;
    RngStream build_rng(kSeed, 1);
    Model model = Model::build(spec, build_rng);

    RngStream rng(kSeed, 2);
    ModelInput in;
    in.mask.assign(spec.seq_len, 1);
    if (c.arch == Arch::bert_bi_head) {
      in.ctx = testsup::random_tensor({spec.seq_len, spec.input_dim}, rng);
    } else {
      in.ids.resize(spec.seq_len);
      for (int& id : in.ids) id = static_cast<int>(rng.index(spec.vocab_size));
    }
    in.mask[spec.seq_len - 1] = 0;
    if (c.arch == Arch::keis_cnn) in.mask[spec.seq_len - 1] = 1;

    int gold = c.head == HeadKind::binary ? 1 : 2;
    LossKind kind = c.head == HeadKind::binary ? LossKind::binary_cross_entropy
                                               : LossKind::categorical_cross_entropy;

    auto eval = [&] {
      Model clone = model.worker_clone();
      return loss(kind, clone.forward(in, Phase::eval, nullptr), gold).value;
    };

    Tensor pred = model.forward(in, Phase::eval, nullptr);
    LossResult lr = loss(kind, pred, gold);
    GradBuffer grads = make_grad_buffer(model.params());
    model.backward(lr.grad, grads);

    GradReport rep{std::string("model_") + arch_name(c.arch), 0.0, 0};
    ParamStore& ps = model.params();
    RngStream pick(kSeed, 3);
    // every slot for small tensors, a fixed-size sample for large ones; the
    // wide bert stages get a smaller sample to keep the test quick
    std::size_t cap = c.arch == Arch::bert_bi_head ? 5 : 12;
    for (std::size_t p = 0; p < ps.size(); ++p) {
      Tensor& t = ps.value(p);
      std::size_t samples = t.numel() <= cap ? t.numel() : cap;
      for (std::size_t s = 0; s < samples; ++s) {
        std::size_t k = t.numel() <= cap ? s : pick.index(t.numel());
        rep.fold(grads[p].values[k], testsup::fd_slot(&t.values[k], eval));
      }
    }
    expect_tight(rep);
  }
}
