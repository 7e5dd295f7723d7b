#include "apf/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "apf/error.hpp"

namespace apf {
namespace {

struct Plans {
  fftw_plan forward;
  fftw_plan inverse;
};

// FFTW's planner is not thread-safe; execution of an existing plan on new
// arrays is.
std::mutex g_planner;

Plans plans_for(std::size_t n) {
  static std::map<std::size_t, Plans> cache;
  std::lock_guard lock(g_planner);
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  const int size = static_cast<int>(n);
  auto* real = fftw_alloc_real(n);
  auto* spec = fftw_alloc_complex(n / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  Plans p{fftw_plan_dft_r2c_1d(size, real, spec, flags),
          fftw_plan_dft_c2r_1d(size, spec, real, flags | FFTW_DESTROY_INPUT)};
  fftw_free(real);
  fftw_free(spec);
  if (p.forward == nullptr || p.inverse == nullptr) throw NumericError("FFTW planning failed");
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
  if (size < 2 || size % 2 != 0) throw ParameterError("FFT size must be even and >= 2");
  const Plans p = plans_for(size);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  if (in.size() != size_ || out.size() != bins()) throw ParameterError("RealFft: buffer size mismatch");
  // r2c leaves its input untouched, the cast only satisfies the C signature.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::adjoint(std::span<const std::complex<double>> grad, std::span<double> out) const {
  if (grad.size() != bins() || out.size() != size_) throw ParameterError("RealFft: buffer size mismatch");
  // c2r treats its input as the half of a Hermitian spectrum, i.e. computes
  // X0 + X_{N/2}(-1)^n + 2 Re sum_{0<k<N/2} X_k e^{+i...}; halve the
  // interior bins so the result is Re sum_k G_k e^{+i...}.
  std::vector<std::complex<double>> half(grad.begin(), grad.end());
  for (std::size_t k = 1; k + 1 < half.size(); ++k) half[k] *= 0.5;
  half.front() = half.front().real();
  half.back() = half.back().real();
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(half.data()), out.data());
}

}  // namespace apf
