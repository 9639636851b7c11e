#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace fracanalog {

namespace detail {

// FFTW's planner is not re-entrant.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

}  // namespace detail

/// Real-to-complex transform pair of fixed length n backed by FFTW.
///
/// Plans are created with FFTW_ESTIMATE so the chosen algorithm, and hence
/// the rounding, does not depend on timing measurements. The inverse is
/// unnormalized (forward followed by inverse multiplies by n).
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("RealFft: length must be positive");
    real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    spec_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins())));
    if (!real_ || !spec_) throw std::bad_alloc();
    std::lock_guard lock(detail::fftw_planner_mutex());
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_r2c_1d(len, real_.get(), spec_.get(), FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(len, spec_.get(), real_.get(), FFTW_ESTIMATE);
    if (!forward_ || !inverse_) throw std::runtime_error("RealFft: FFTW planning failed");
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  ~RealFft() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (inverse_) fftw_destroy_plan(inverse_);
  }

  std::size_t size() const noexcept { return n_; }
  /// Number of non-redundant complex bins, n/2 + 1.
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  std::vector<std::complex<double>> forward(std::span<const double> in) {
    if (in.size() != n_) throw std::invalid_argument("RealFft::forward: length mismatch");
    std::copy(in.begin(), in.end(), real_.get());
    fftw_execute(forward_);
    std::vector<std::complex<double>> out(bins());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {spec_.get()[i][0], spec_.get()[i][1]};
    return out;
  }

  std::vector<double> inverse(std::span<const std::complex<double>> in) {
    if (in.size() != bins()) throw std::invalid_argument("RealFft::inverse: length mismatch");
    for (std::size_t i = 0; i < in.size(); ++i) {
      spec_.get()[i][0] = in[i].real();
      spec_.get()[i][1] = in[i].imag();
    }
    fftw_execute(inverse_);
    return std::vector<double>(real_.get(), real_.get() + n_);
  }

 private:
  std::size_t n_;
  std::unique_ptr<double, detail::FftwFree> real_;
  std::unique_ptr<fftw_complex, detail::FftwFree> spec_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

/// Circular convolution of two equal-length real sequences.
inline std::vector<double> circular_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("circular_convolve: length mismatch");
  RealFft fft(a.size());
  auto fa = fft.forward(a);
  const auto fb = fft.forward(b);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  auto out = fft.inverse(fa);
  const double scale = 1.0 / static_cast<double>(a.size());
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace fracanalog
