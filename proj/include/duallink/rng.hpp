#pragma once

#include <array>
#include <cstdint>

namespace duallink {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Pure: the same (counter, key) always yields the same block.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Stream-domain tags keep substreams of different consumers disjoint.
enum class StreamDomain : std::uint32_t {
  PhaseScreen = 1,
  Subharmonic = 2,
  QuadratureShots = 3,
};

/// Identifies one substream: master seed plus a (domain, major, minor) address,
/// e.g. (PhaseScreen, realization, slab).
struct StreamId {
  std::uint64_t seed = 0;
  StreamDomain domain = StreamDomain::PhaseScreen;
  std::uint32_t major = 0;
  std::uint32_t minor = 0;

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

/// Sequential reader over one counter-based substream. Copying a stream copies
/// its position; two streams with the same id produce identical sequences.
class CounterStream {
 public:
  explicit CounterStream(StreamId id);

  [[nodiscard]] const StreamId& id() const { return id_; }

  std::uint32_t next_u32();
  /// Uniform double in (0, 1) with 53 random bits.
  double next_uniform();
  /// Standard normal via Box-Muller; pairs are cached.
  double next_normal();

 private:
  void refill();

  StreamId id_;
  std::array<std::uint32_t, 2> key_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace duallink
