#include "granular/rng.hpp"

#include <cmath>
#include <numbers>

namespace granular::rng {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

CounterStream::CounterStream(StreamId id, std::uint32_t step, std::uint32_t index) noexcept
    : key_{static_cast<std::uint32_t>(id.seed), static_cast<std::uint32_t>(id.seed >> 32)},
      counter_{index, step, 0u,
               (static_cast<std::uint32_t>(id.purpose) << 24) | (id.tag & 0x00FFFFFFu)} {}

void CounterStream::refill() noexcept {
  const auto words = philox4x32(counter_, key_);
  ++counter_[2];
  buffer_[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  buffer_[1] = (static_cast<std::uint64_t>(words[2]) << 32) | words[3];
  buffered_ = 2;
}

std::uint64_t CounterStream::next_u64() noexcept {
  if (buffered_ == 0) refill();
  return buffer_[2 - buffered_--];
}

double CounterStream::uniform() noexcept {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t CounterStream::below(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

void standard_normals(StreamId id, std::uint32_t step, std::uint32_t index,
                      std::span<double> out) noexcept {
  CounterStream stream(id, step, index);
  for (double& z : out) z = stream.normal();
}

}  // namespace granular::rng
