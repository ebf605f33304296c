#pragma once

#include <cstdint>
#include <vector>

namespace latstruct {

// Seedable, splittable PRNG (xoshiro256++ seeded through splitmix64).
// All sampling primitives are implemented from raw bits so that equal seeds
// give bitwise-equal streams. Streams are split per thread, never shared.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();
  // Uniform on (0, 1), safe to pass to log().
  double uniform_pos();
  // Standard normal via Box-Muller (no cached spare).
  double gaussian();
  // Standard Gumbel: -log(-log(U)).
  double gumbel();
  // Index draw from an unnormalized nonnegative weight vector.
  int categorical(const std::vector<double>& weights);

  // Derives an independent child stream; advances this stream by one draw.
  Rng split();

 private:
  std::uint64_t s_[4];
};

}  // namespace latstruct
