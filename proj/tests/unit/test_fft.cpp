#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <complex>
#include <cstdint>

#include "duallink/fft.hpp"
#include "duallink/rng.hpp"

using namespace duallink;

namespace {

AlignedGrid random_grid(std::size_t n, std::uint32_t tag) {
  AlignedGrid g(n);
  CounterStream s(StreamId{99, StreamDomain::PhaseScreen, tag, 0});
  for (auto& v : g.span()) v = {s.next_normal(), s.next_normal()};
  return g;
}

// Naive DFT over the coordinates (j - offset).
AlignedGrid naive_dft(const AlignedGrid& in, double sign, std::size_t offset) {
  const std::size_t n = in.n();
  AlignedGrid out(n);
  const double off = static_cast<double>(offset);
  for (std::size_t kr = 0; kr < n; ++kr)
    for (std::size_t kc = 0; kc < n; ++kc) {
      cdouble acc{0.0, 0.0};
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
          const double phase = sign * 2.0 * M_PI / static_cast<double>(n) *
                               ((static_cast<double>(r) - off) * (static_cast<double>(kr) - off) +
                                (static_cast<double>(c) - off) * (static_cast<double>(kc) - off));
          acc += in(r, c) * cdouble(std::cos(phase), std::sin(phase));
        }
      out(kr, kc) = acc;
    }
  return out;
}

double max_diff(const AlignedGrid& a, const AlignedGrid& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace

TEST_SUITE("fft") {
  TEST_CASE("grid storage is aligned and zeroed") {
    AlignedGrid g(16);
    CHECK(reinterpret_cast<std::uintptr_t>(g.data()) % 16 == 0);
    for (const auto& v : g.span()) CHECK(v == cdouble{0.0, 0.0});
  }

  TEST_CASE("forward then backward recovers the input times N^2") {
    const auto orig = random_grid(64, 1);
    AlignedGrid g = orig;
    fft2d_inplace(g, FftDirection::Forward);
    fft2d_inplace(g, FftDirection::Backward);
    for (auto& v : g.span()) v /= 64.0 * 64.0;
    CHECK(max_diff(g, orig) < 1e-12);
  }

  TEST_CASE("plain and centered transforms match a naive DFT") {
    const auto orig = random_grid(16, 2);
    for (auto dir : {FftDirection::Forward, FftDirection::Backward}) {
      const double sign = dir == FftDirection::Forward ? -1.0 : 1.0;
      AlignedGrid plain = orig;
      fft2d_inplace(plain, dir);
      CHECK(max_diff(plain, naive_dft(orig, sign, 0)) < 1e-10);
      AlignedGrid centered = orig;
      centered_fft2d_inplace(centered, dir);
      CHECK(max_diff(centered, naive_dft(orig, sign, 8)) < 1e-10);
    }
  }

  TEST_CASE("repeated transforms are bit-identical") {
    AlignedGrid a = random_grid(128, 3);
    AlignedGrid b = a;
    fft2d_inplace(a, FftDirection::Forward);
    fft2d_inplace(b, FftDirection::Forward);
    CHECK(max_diff(a, b) == 0.0);
  }
}
