#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <utility>

namespace duallink {

using cdouble = std::complex<double>;

/// Owning, SIMD-aligned buffer of N*N complex samples (row-major, y then x).
class AlignedGrid {
 public:
  AlignedGrid() = default;
  explicit AlignedGrid(std::size_t n);
  AlignedGrid(const AlignedGrid& other);
  AlignedGrid& operator=(const AlignedGrid& other);
  AlignedGrid(AlignedGrid&& other) noexcept
      : n_(std::exchange(other.n_, 0)), data_(std::move(other.data_)) {}
  AlignedGrid& operator=(AlignedGrid&& other) noexcept {
    n_ = std::exchange(other.n_, 0);
    data_ = std::move(other.data_);
    return *this;
  }

  [[nodiscard]] std::size_t n() const { return n_; }
  [[nodiscard]] std::size_t size() const { return n_ * n_; }
  [[nodiscard]] cdouble* data() { return data_.get(); }
  [[nodiscard]] const cdouble* data() const { return data_.get(); }
  [[nodiscard]] std::span<cdouble> span() { return {data(), size()}; }
  [[nodiscard]] std::span<const cdouble> span() const { return {data(), size()}; }

  cdouble& operator()(std::size_t row, std::size_t col) { return data_[row * n_ + col]; }
  const cdouble& operator()(std::size_t row, std::size_t col) const {
    return data_[row * n_ + col];
  }

 private:
  struct Free {
    void operator()(cdouble* p) const;
  };
  std::size_t n_ = 0;
  std::unique_ptr<cdouble[], Free> data_;
};

enum class FftDirection { Forward, Backward };

/// In-place unnormalized 2-D DFT. Forward uses exp(-i...), Backward exp(+i...).
/// Plans are created once per (size, direction) with FFTW_ESTIMATE so that the
/// same input always yields bit-identical output; execution is thread-safe.
void fft2d_inplace(AlignedGrid& grid, FftDirection direction);

/// Centered DFT: treats sample j as coordinate (j - N/2) and returns the
/// spectrum with frequency index (k - N/2). Requires N divisible by 4.
void centered_fft2d_inplace(AlignedGrid& grid, FftDirection direction);

}  // namespace duallink
