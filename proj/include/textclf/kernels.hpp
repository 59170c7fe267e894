#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

// Low-level inner loops. Every parallel kernel computes each output element in
// the same order as its serial twin, so the two are bitwise identical; tests
// and the bench tool compare them directly.
namespace textclf::kernels {

// c[m*n] = a[m*k] * b[k*n], all row-major.
void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);
void matmul_parallel(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t k, std::size_t n);
// Picks the parallel kernel above a flop threshold.
void matmul_auto(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n);

// Valid 1-d convolution over a [len x width] input with nf filters of height h:
//   out[p*nf + f] = bias[f] + sum_{i<h, j<width} in[(p+i)*width + j] * filt[(i*width+j)*nf + f]
// for p in [0, len-h]. out has (len-h+1)*nf entries.
void conv_valid_serial(const double* in, std::size_t len, std::size_t width,
                       const double* filt, std::size_t h, const double* bias,
                       std::size_t nf, double* out);
void conv_valid_parallel(const double* in, std::size_t len, std::size_t width,
                         const double* filt, std::size_t h, const double* bias,
                         std::size_t nf, double* out);
void conv_valid_auto(const double* in, std::size_t len, std::size_t width,
                     const double* filt, std::size_t h, const double* bias,
                     std::size_t nf, double* out);

// Splits [0, count) into `chunks` nearly equal ranges (empty ranges allowed).
// The split depends only on (count, chunks), never on the thread count.
std::vector<std::pair<std::size_t, std::size_t>> chunk_ranges(std::size_t count,
                                                              std::size_t chunks);

// Runs fn(chunk_index) for every chunk, in parallel when OpenMP is enabled.
// Callers keep determinism by writing to per-chunk buffers and reducing them
// in chunk order afterwards.
void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& fn);

}  // namespace textclf::kernels
