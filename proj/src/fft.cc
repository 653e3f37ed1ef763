// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "bss/common.h"

namespace bss {

namespace {
// FFTW plan creation is not thread safe; execution is.
std::mutex plan_mutex;
}  // namespace

RealFft::RealFft(int n) : n_(n), real_buf_(n), complex_buf_(n / 2 + 1) {
  Require(n > 0 && n % 2 == 0, "RealFft: size must be positive and even");
  std::lock_guard<std::mutex> lock(plan_mutex);
  forward_plan_ = fftw_plan_dft_r2c_1d(
      n, real_buf_.data(), reinterpret_cast<fftw_complex*>(complex_buf_.data()),
      FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(
      n, reinterpret_cast<fftw_complex*>(complex_buf_.data()), real_buf_.data(),
      FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(plan_mutex);
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void RealFft::Forward(const double* frame, std::complex<double>* bins) {
  std::copy(frame, frame + n_, real_buf_.begin());
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  std::copy(complex_buf_.begin(), complex_buf_.end(), bins);
}

void RealFft::Inverse(const std::complex<double>* bins, double* frame) {
  std::copy(bins, bins + n_ / 2 + 1, complex_buf_.begin());
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  for (int i = 0; i < n_; ++i) frame[i] = real_buf_[i] / n_;
}

std::vector<double> FftConvolve(const std::vector<double>& a,
                                const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  size_t out_len = a.size() + b.size() - 1;
  int n = 2;
  while (static_cast<size_t>(n) < out_len) n *= 2;

  RealFft fft(n);
  std::vector<double> buf(n, 0.0);
  std::vector<std::complex<double>> fa(n / 2 + 1), fb(n / 2 + 1);

  std::copy(a.begin(), a.end(), buf.begin());
  fft.Forward(buf.data(), fa.data());
  std::fill(buf.begin(), buf.end(), 0.0);
  std::copy(b.begin(), b.end(), buf.begin());
  fft.Forward(buf.data(), fb.data());

  for (int i = 0; i <= n / 2; ++i) fa[i] *= fb[i];
  fft.Inverse(fa.data(), buf.data());
  buf.resize(out_len);
  return buf;
}

}  // namespace bss
