// Timing comparison between the serial reference kernels and their OpenMP
// twins, plus the chunk-parallel batch gradient. The parallel paths are
// bitwise identical to the serial ones; this tool only reports wall time.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "textclf/embedding.hpp"
#include "textclf/kernels.hpp"
#include "textclf/model.hpp"
#include "textclf/optim.hpp"
#include "textclf/rng.hpp"

using namespace textclf;
namespace k = textclf::kernels;

namespace {

using clock_type = std::chrono::steady_clock;

template <typename Fn>
double time_ms(std::size_t reps, Fn&& fn) {
  fn();  // warm up
  auto t0 = clock_type::now();
  for (std::size_t i = 0; i < reps; ++i) fn();
  auto t1 = clock_type::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / static_cast<double>(reps);
}

void row(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s %10.3f ms %10.3f ms %8.2fx\n", name, serial_ms, parallel_ms,
              parallel_ms > 0 ? serial_ms / parallel_ms : 0.0);
}

std::vector<double> random_vec(std::size_t n, RngStream& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void bench_matmul(RngStream& rng) {
  const std::size_t m = 192, kk = 192, n = 192;
  std::vector<double> a = random_vec(m * kk, rng), b = random_vec(kk * n, rng), c(m * n);
  double s = time_ms(5, [&] { k::matmul_serial(a.data(), b.data(), c.data(), m, kk, n); });
  double p = time_ms(5, [&] { k::matmul_parallel(a.data(), b.data(), c.data(), m, kk, n); });
  row("matmul 192x192x192", s, p);
}

void bench_conv(RngStream& rng) {
  const std::size_t len = 60, width = 300, h = 7, nf = 36;
  std::vector<double> in = random_vec(len * width, rng), filt = random_vec(h * width * nf, rng),
                      bias = random_vec(nf, rng), out((len - h + 1) * nf);
  double s = time_ms(50, [&] {
    k::conv_valid_serial(in.data(), len, width, filt.data(), h, bias.data(), nf, out.data());
  });
  double p = time_ms(50, [&] {
    k::conv_valid_parallel(in.data(), len, width, filt.data(), h, bias.data(), nf, out.data());
  });
  row("conv h=7 60x300 -> 36", s, p);
}

void bench_cosine(RngStream& rng) {
  const std::size_t words = 20000, dim = 100;
  EmbeddingTable table(dim);
  for (std::size_t i = 0; i < words; ++i)
    table.add("w" + std::to_string(i), random_vec(dim, rng));
  std::vector<double> q = random_vec(dim, rng);
  double s = time_ms(10, [&] { (void)cosine_scores_serial(table, q.data()); });
  double p = time_ms(10, [&] { (void)cosine_scores_parallel(table, q.data()); });
  row("cosine scan 20k x 100", s, p);
}

void bench_batch_gradient(RngStream& rng) {
  ModelSpec spec;
  spec.arch = Arch::keis_bigru;
  spec.head = HeadKind::binary;
  spec.seq_len = 24;
  spec.input_dim = 32;
  spec.vocab_size = 200;
  RngStream build_rng(7, 1);
  Model model = Model::build(spec, build_rng);

  std::vector<TrainExample> data;
  for (std::size_t i = 0; i < 32; ++i) {
    TrainExample ex;
    ex.input.ids.resize(spec.seq_len);
    ex.input.mask.assign(spec.seq_len, 1);
    for (auto& id : ex.input.ids)
      id = static_cast<int>(rng.index(spec.vocab_size - 2)) + 2;
    ex.label = static_cast<int>(i % 2);
    data.push_back(std::move(ex));
  }
  std::vector<std::size_t> batch(data.size());
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;

  GradBuffer grads = make_grad_buffer(model.params());
  double s = time_ms(3, [&] { (void)batch_gradient(model, data, batch, 1, 7, 1, grads); });
  double p = time_ms(3, [&] { (void)batch_gradient(model, data, batch, 1, 7, 8, grads); });
  row("batch gradient (32 ex)", s, p);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled; parallel paths run serially\n");
#endif
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");
  RngStream rng(2024, 0);
  bench_matmul(rng);
  bench_conv(rng);
  bench_cosine(rng);
  bench_batch_gradient(rng);
  return 0;
}
