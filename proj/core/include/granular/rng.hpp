#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (seed, purpose, tag, step, particle, block),
// so two chains that share a seed see the same Gaussian increments regardless
// of the order particles are processed in, the number of threads, or which
// proximal solver runs in between. This is what makes synchronous coupling of
// two schemes possible.

#include <array>
#include <cstdint>
#include <span>

namespace granular::rng {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Disjoint stream families. The numeric values are part of the reproducibility
/// contract; never renumber.
enum class Purpose : std::uint8_t {
  noise = 0,
  initial = 1,
  perturbation = 2,
  subsample = 3,
  reference = 4,
};

struct StreamId {
  std::uint64_t seed = 0;
  Purpose purpose = Purpose::noise;
  std::uint32_t tag = 0;  // only the low 24 bits are used
};

/// Sequential draws from one (stream, step, index) cell.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  CounterStream(StreamId id, std::uint32_t step, std::uint32_t index) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  /// Standard normal via Box-Muller; draws come in pairs from one block.
  double normal() noexcept;
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Fills `out` with independent standard normals for (stream, step, index).
void standard_normals(StreamId id, std::uint32_t step, std::uint32_t index,
                      std::span<double> out) noexcept;

}  // namespace granular::rng
