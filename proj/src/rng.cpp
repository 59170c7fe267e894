#include "textclf/rng.hpp"

#include <cmath>

#include "textclf/errors.hpp"

namespace textclf {

namespace {
// splitmix64: scrambles (seed, stream) into a well-mixed engine seed so that
// nearby stream ids do not produce correlated sequences.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  std::uint64_t a = splitmix64(state);
  state ^= stream * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL;
  std::uint64_t b = splitmix64(state);
  engine_.seed(a ^ (b + 0x9e3779b97f4a7c15ULL));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() {
  // Top 53 bits -> [0, 1) with full double resolution.
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal(double mean, double stddev) {
  // Box-Muller; u1 nudged away from 0 so the log stays finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  double mag = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * mag * std::cos(2.0 * M_PI * u2);
}

double RngStream::truncated_normal(double mean, double stddev) {
  for (;;) {
    double x = normal(mean, stddev);
    if (std::abs(x - mean) <= 2.0 * stddev) return x;
  }
}

std::size_t RngStream::index(std::size_t bound) {
  if (bound == 0) throw ShapeError("RngStream::index: bound must be positive");
  // Rejection sampling over the largest multiple of bound, no modulo bias.
  std::uint64_t limit = ~0ULL - (~0ULL % bound + 1) % bound;
  for (;;) {
    std::uint64_t x = next_u64();
    if (x <= limit) return static_cast<std::size_t>(x % bound);
  }
}

InitScheme InitScheme::zeros() { return {}; }

InitScheme InitScheme::glorot_uniform() {
  InitScheme s;
  s.kind = Kind::glorot_uniform;
  return s;
}

InitScheme InitScheme::truncated_normal(double mean, double stddev) {
  InitScheme s;
  s.kind = Kind::truncated_normal;
  s.mean = mean;
  s.stddev = stddev;
  return s;
}

InitScheme InitScheme::uniform(double limit) {
  InitScheme s;
  s.kind = Kind::uniform;
  s.limit = limit;
  return s;
}

Tensor init_params(const InitScheme& scheme, std::vector<std::size_t> shape, RngStream& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  switch (scheme.kind) {
    case InitScheme::Kind::zeros:
      return t;
    case InitScheme::Kind::glorot_uniform: {
      std::size_t fan_in = 0, fan_out = 0;
      if (t.rank() == 1) {
        fan_in = fan_out = t.shape[0];
      } else if (t.rank() == 2) {  // [out x in]
        fan_in = t.shape[1];
        fan_out = t.shape[0];
      } else if (t.rank() == 3) {  // conv stack [h x d x nf]
        fan_in = t.shape[0] * t.shape[1];
        fan_out = t.shape[2];
      } else {
        throw ShapeError("glorot_uniform: unsupported rank " + std::to_string(t.rank()));
      }
      double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (double& v : t.values) v = rng.uniform(-limit, limit);
      return t;
    }
    case InitScheme::Kind::truncated_normal:
      if (scheme.stddev <= 0.0)
        throw ShapeError("truncated_normal: stddev must be positive");
      for (double& v : t.values) v = rng.truncated_normal(scheme.mean, scheme.stddev);
      return t;
    case InitScheme::Kind::uniform:
      for (double& v : t.values) v = rng.uniform(-scheme.limit, scheme.limit);
      return t;
  }
  throw ShapeError("init_params: unknown scheme");
}

}  // namespace textclf
