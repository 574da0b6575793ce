#pragma once

#include <cstdint>
#include <random>

#include "nmspmm/common.hpp"

namespace nmspmm {

/// Seeded generator with a platform-independent output stream.
///
/// The engine is std::mt19937_64, whose sequence the standard fixes. The
/// standard distributions are implementation-defined, so conversions are done
/// here: `uniform()` takes the top 24 bits of one draw and maps them to
/// [-1, 1) as (2 * bits / 2^24) - 1, exactly representable in float;
/// `below(n)` is rejection sampling on the full 64-bit draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  float uniform() {
    const auto bits = static_cast<std::uint32_t>(engine_() >> 40);
    return static_cast<float>(bits) * (2.0f / 16777216.0f) - 1.0f;
  }

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

template <typename Scalar>
DenseMatrix<Scalar> random_matrix(Index rows, Index cols, Rng& rng) {
  DenseMatrix<Scalar> out(rows, cols);
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = static_cast<Scalar>(rng.uniform());
  return out;
}

}  // namespace nmspmm
