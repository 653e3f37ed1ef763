// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_FFT_H_
#define BSS_FFT_H_

#include <complex>
#include <vector>

namespace bss {

// One-sided real FFT of a fixed size, backed by FFTW.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }

  // frame: n real samples -> n/2+1 one-sided bins.
  void Forward(const double* frame, std::complex<double>* bins);
  // bins: n/2+1 one-sided bins -> n real samples (normalized by 1/n).
  void Inverse(const std::complex<double>* bins, double* frame);

 private:
  int n_;
  std::vector<double> real_buf_;
  std::vector<std::complex<double>> complex_buf_;
  void* forward_plan_;
  void* inverse_plan_;
};

// Full linear convolution, length a.size() + b.size() - 1.
std::vector<double> FftConvolve(const std::vector<double>& a,
                                const std::vector<double>& b);

}  // namespace bss

#endif  // BSS_FFT_H_
