#include "duallink/fft.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <utility>

#include <fftw3.h>

#include "duallink/errors.hpp"

namespace duallink {

void AlignedGrid::Free::operator()(cdouble* p) const { fftw_free(p); }

AlignedGrid::AlignedGrid(std::size_t n) : n_(n) {
  if (n == 0) return;
  auto* raw = static_cast<cdouble*>(fftw_malloc(sizeof(cdouble) * n * n));
  if (raw == nullptr) throw std::bad_alloc();
  data_.reset(raw);
  std::fill(raw, raw + n * n, cdouble{});
}

AlignedGrid::AlignedGrid(const AlignedGrid& other) : AlignedGrid(other.n_) {
  std::copy(other.data(), other.data() + size(), data());
}

AlignedGrid& AlignedGrid::operator=(const AlignedGrid& other) {
  if (this != &other) {
    AlignedGrid copy(other);
    *this = std::move(copy);
  }
  return *this;
}

namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, FftDirection dir) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(n, dir);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    AlignedGrid scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const int sign = dir == FftDirection::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buf, buf, sign,
                                      FFTW_ESTIMATE);
    if (plan == nullptr) throw NumericalError("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, FftDirection>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void checkerboard(AlignedGrid& grid) {
  const std::size_t n = grid.n();
  for (std::size_t r = 0; r < n; ++r) {
    cdouble* row = grid.data() + r * n;
    for (std::size_t c = (r & 1u) ? 0 : 1; c < n; c += 2) row[c] = -row[c];
  }
}

}  // namespace

void fft2d_inplace(AlignedGrid& grid, FftDirection direction) {
  fftw_plan plan = plan_cache().get(grid.n(), direction);
  auto* buf = reinterpret_cast<fftw_complex*>(grid.data());
  fftw_execute_dft(plan, buf, buf);
}

void centered_fft2d_inplace(AlignedGrid& grid, FftDirection direction) {
  if (grid.n() % 4 != 0) throw DomainError("centered FFT needs N divisible by 4");
  // exp(-2 pi i (k - N/2)(j - N/2) / N) = (-1)^k (-1)^j exp(-2 pi i k j / N) when 4 | N.
  checkerboard(grid);
  fft2d_inplace(grid, direction);
  checkerboard(grid);
}

}  // namespace duallink
