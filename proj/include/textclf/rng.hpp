#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "textclf/tensor.hpp"

namespace textclf {

// Deterministic random stream: equal (seed, stream) reproduces the same draw
// sequence on every run. Distinct consumers take distinct stream ids.
// Uniform doubles come from the top 53 bits of mt19937_64 output and normals
// from Box-Muller, so nothing depends on library distribution internals.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  // Normal draw resampled until within 2*stddev of the mean.
  double truncated_normal(double mean, double stddev);
  std::size_t index(std::size_t bound);   // [0, bound), bound > 0

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

struct InitScheme {
  enum class Kind { zeros, glorot_uniform, truncated_normal, uniform };
  Kind kind = Kind::zeros;
  double mean = 0.0;
  double stddev = 0.05;
  double limit = 0.05;  // uniform: [-limit, limit]

  static InitScheme zeros();
  static InitScheme glorot_uniform();
  static InitScheme truncated_normal(double mean, double stddev);
  static InitScheme uniform(double limit);
};

// Deterministic for a fixed RngStream. Glorot fans: rank-1 uses the length for
// both, rank-2 [out x in] uses (in, out), rank-3 conv stacks [h x d x nf] use
// (h*d, nf). Nonpositive stddev is rejected.
Tensor init_params(const InitScheme& scheme, std::vector<std::size_t> shape, RngStream& rng);

}  // namespace textclf
