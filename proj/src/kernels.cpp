#include "textclf/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace textclf::kernels {

namespace {
// Work below this many multiply-adds is not worth a parallel region.
constexpr std::size_t kParallelFlops = 64 * 1024;

inline double dot_row_col(const double* a_row, const double* b, std::size_t k, std::size_t n,
                          std::size_t j) {
  double acc = 0.0;
  for (std::size_t p = 0; p < k; ++p) acc += a_row[p] * b[p * n + j];
  return acc;
}

inline double conv_cell(const double* in, std::size_t width, const double* filt, std::size_t h,
                        std::size_t nf, std::size_t p, std::size_t f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < h; ++i) {
    const double* in_row = in + (p + i) * width;
    const double* f_row = filt + i * width * nf;
    for (std::size_t j = 0; j < width; ++j) acc += in_row[j] * f_row[j * nf + f];
  }
  return acc;
}
}  // namespace

void matmul_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = dot_row_col(a + i * k, b, k, n, j);
}

void matmul_parallel(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                     std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long i = 0; i < static_cast<long long>(m); ++i)
    for (std::size_t j = 0; j < n; ++j)
      c[static_cast<std::size_t>(i) * n + j] =
          dot_row_col(a + static_cast<std::size_t>(i) * k, b, k, n, j);
}

void matmul_auto(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
  if (m * k * n >= kParallelFlops)
    matmul_parallel(a, b, c, m, k, n);
  else
    matmul_serial(a, b, c, m, k, n);
}

void conv_valid_serial(const double* in, std::size_t len, std::size_t width, const double* filt,
                       std::size_t h, const double* bias, std::size_t nf, double* out) {
  std::size_t positions = len - h + 1;
  for (std::size_t p = 0; p < positions; ++p)
    for (std::size_t f = 0; f < nf; ++f)
      out[p * nf + f] = bias[f] + conv_cell(in, width, filt, h, nf, p, f);
}

void conv_valid_parallel(const double* in, std::size_t len, std::size_t width, const double* filt,
                         std::size_t h, const double* bias, std::size_t nf, double* out) {
  std::size_t positions = len - h + 1;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long p = 0; p < static_cast<long long>(positions); ++p)
    for (std::size_t f = 0; f < nf; ++f)
      out[static_cast<std::size_t>(p) * nf + f] =
          bias[f] + conv_cell(in, width, filt, h, nf, static_cast<std::size_t>(p), f);
}

void conv_valid_auto(const double* in, std::size_t len, std::size_t width, const double* filt,
                     std::size_t h, const double* bias, std::size_t nf, double* out) {
  std::size_t positions = len - h + 1;
  if (positions * nf * h * width >= kParallelFlops)
    conv_valid_parallel(in, len, width, filt, h, bias, nf, out);
  else
    conv_valid_serial(in, len, width, filt, h, bias, nf, out);
}

std::vector<std::pair<std::size_t, std::size_t>> chunk_ranges(std::size_t count,
                                                              std::size_t chunks) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (chunks == 0) chunks = 1;
  out.reserve(chunks);
  std::size_t base = count / chunks, extra = count % chunks, start = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    std::size_t len = base + (c < extra ? 1 : 0);
    out.emplace_back(start, start + len);
    start += len;
  }
  return out;
}

void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (long long c = 0; c < static_cast<long long>(chunks); ++c)
    fn(static_cast<std::size_t>(c));
}

}  // namespace textclf::kernels
