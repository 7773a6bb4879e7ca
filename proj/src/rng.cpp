#include "duallink/rng.hpp"

#include <cmath>
#include <numbers>

namespace duallink {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(product);
  hi = static_cast<std::uint32_t>(product >> 32);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMul0, ctr[0], lo0, hi0);
    mulhilo(kMul1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

CounterStream::CounterStream(StreamId id)
    : id_(id),
      key_{static_cast<std::uint32_t>(id.seed), static_cast<std::uint32_t>(id.seed >> 32)} {}

void CounterStream::refill() {
  // Counter layout: [block low 32 | major | minor | domain:4 + block high 28].
  const auto domain = static_cast<std::uint32_t>(id_.domain);
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(block_), id_.major, id_.minor,
      (domain << 28) | (static_cast<std::uint32_t>(block_ >> 32) & 0x0FFFFFFFu)};
  buffer_ = philox4x32(ctr, key_);
  ++block_;
  used_ = 0;
}

std::uint32_t CounterStream::next_u32() {
  if (used_ == 4) refill();
  return buffer_[used_++];
}

double CounterStream::next_uniform() {
  const std::uint64_t hi = next_u32() >> 5;  // 27 bits
  const std::uint64_t lo = next_u32() >> 6;  // 26 bits
  const std::uint64_t bits = (hi << 26) | lo;
  // Offset by half an ulp so the result is never exactly 0 or 1.
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double CounterStream::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace duallink
