#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace apf {

// Real-input FFT of a fixed size backed by FFTW. Plans are created once per
// size and shared; transforms are safe to run concurrently.
class RealFft {
 public:
  explicit RealFft(std::size_t size);

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  // X[k] = sum_n x[n] exp(-2 pi i k n / N), k = 0..N/2.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;

  // x[n] = Re sum_{k=0}^{N/2} G[k] exp(+2 pi i k n / N): the adjoint of
  // forward() for a real loss with dL/dRe X[k] + i dL/dIm X[k] = G[k].
  void adjoint(std::span<const std::complex<double>> grad, std::span<double> out) const;

 private:
  std::size_t size_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace apf
