#include "apf/loss.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "apf/error.hpp"
#include "apf/fft.hpp"

namespace apf::loss {
namespace {

using cplx = std::complex<double>;

std::vector<double> make_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.win_length, 1.0);
  if (cfg.window == Window::Hann) {
    // Periodic Hann.
    for (std::size_t n = 0; n < w.size(); ++n) {
      w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                  static_cast<double>(cfg.win_length));
    }
  }
  return w;
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ParameterError("loss: length mismatch (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

double cell_value(const cplx& z, int power) {
  const double m = std::abs(z);
  return power == 1 ? m : m * m;
}

// d|z|^p / d(Re z, Im z) packed as a complex number.
cplx cell_gradient(const cplx& z, int power) {
  if (power == 2) return 2.0 * z;
  const double m = std::abs(z);
  return m > 0.0 ? z / m : cplx{};
}

}  // namespace

std::string to_string(Window w) { return w == Window::Hann ? "hann" : "rect"; }

Window parse_window(const std::string& name) {
  if (name == "hann") return Window::Hann;
  if (name == "rect" || name == "rectangular") return Window::Rectangular;
  throw ConfigError("unknown window '" + name + "' (expected hann or rect)");
}

void StftConfig::validate() const {
  if (hop == 0) throw ConfigError("STFT hop must be positive");
  if (win_length == 0 || win_length > fft_size) throw ConfigError("STFT window must satisfy 0 < win_length <= fft_size");
  if (fft_size < 2 || fft_size % 2 != 0) throw ConfigError("STFT fft_size must be even");
  if (power != 1 && power != 2) throw ConfigError("STFT power must be 1 or 2");
}

std::vector<StftConfig> default_resolutions(int power) {
  return {{512, 50, 240, Window::Hann, power},
          {1024, 120, 600, Window::Hann, power},
          {2048, 240, 1200, Window::Hann, power}};
}

std::size_t frame_count(std::size_t length, const StftConfig& cfg) {
  cfg.validate();
  if (length < cfg.win_length) {
    throw ParameterError("spectrogram: signal of " + std::to_string(length) +
                         " samples is shorter than one window (" + std::to_string(cfg.win_length) + ")");
  }
  return 1 + (length - cfg.win_length) / cfg.hop;
}

Spectrogram spectrogram(std::span<const double> x, const StftConfig& cfg) {
  const std::size_t frames = frame_count(x.size(), cfg);
  const RealFft fft(cfg.fft_size);
  const auto window = make_window(cfg);
  const std::size_t pad = (cfg.fft_size - cfg.win_length) / 2;

  Spectrogram s;
  s.frames = frames;
  s.bins = fft.bins();
  s.values.resize(frames * s.bins);
  std::vector<double> buf(cfg.fft_size);
  std::vector<cplx> spec(fft.bins());
  for (std::size_t f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t n = 0; n < cfg.win_length; ++n) buf[pad + n] = x[f * cfg.hop + n] * window[n];
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < s.bins; ++k) s.values[f * s.bins + k] = cell_value(spec[k], cfg.power);
  }
  return s;
}

double interference_stft_loss(std::span<const double> y, std::span<const double> y_hat,
                              const StftConfig& cfg, std::span<double> grad_y_hat) {
  check_lengths(y.size(), y_hat.size());
  const std::size_t frames = frame_count(y.size(), cfg);
  const bool want_grad = !grad_y_hat.empty();
  if (want_grad) {
    check_lengths(grad_y_hat.size(), y_hat.size());
    std::fill(grad_y_hat.begin(), grad_y_hat.end(), 0.0);
  }

  const RealFft fft(cfg.fft_size);
  const std::size_t bins = fft.bins();
  const auto window = make_window(cfg);
  const std::size_t pad = (cfg.fft_size - cfg.win_length) / 2;
  const double cells = static_cast<double>(frames * bins);

  std::vector<double> a(cfg.fft_size, 0.0), b(cfg.fft_size, 0.0), s(cfg.fft_size, 0.0);
  std::vector<cplx> ya(bins), yb(bins), ys(bins), g(bins);
  std::vector<double> back(cfg.fft_size);

  double total = 0.0;
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * cfg.hop;
    for (std::size_t n = 0; n < cfg.win_length; ++n) {
      a[pad + n] = y[start + n] * window[n];
      b[pad + n] = y_hat[start + n] * window[n];
      s[pad + n] = (y[start + n] + y_hat[start + n]) * window[n];
    }
    fft.forward(a, ya);
    fft.forward(b, yb);
    fft.forward(s, ys);

    for (std::size_t k = 0; k < bins; ++k) {
      const double diff =
          (cell_value(ya[k], cfg.power) + cell_value(yb[k], cfg.power)) - cell_value(ys[k], cfg.power);
      total += diff * diff;
      if (want_grad) {
        g[k] = (2.0 * diff / cells) * (cell_gradient(yb[k], cfg.power) - cell_gradient(ys[k], cfg.power));
      }
    }
    if (want_grad) {
      fft.adjoint(g, back);
      for (std::size_t n = 0; n < cfg.win_length; ++n) grad_y_hat[start + n] += back[pad + n] * window[n];
    }
  }
  return total / cells;
}

double interference_stft_loss(const std::vector<std::vector<double>>& y,
                              const std::vector<std::vector<double>>& y_hat, const StftConfig& cfg) {
  check_lengths(y.size(), y_hat.size());
  if (y.empty()) throw ParameterError("loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += interference_stft_loss(y[i], y_hat[i], cfg);
  return total / static_cast<double>(y.size());
}

double mstft_loss(std::span<const double> y, std::span<const double> y_hat,
                  std::span<const StftConfig> resolutions, std::span<double> grad_y_hat) {
  if (resolutions.empty()) throw ParameterError("mstft: empty resolution list");
  check_lengths(y.size(), y_hat.size());
  const double m = static_cast<double>(resolutions.size());
  std::vector<double> part;
  if (!grad_y_hat.empty()) {
    check_lengths(grad_y_hat.size(), y_hat.size());
    std::fill(grad_y_hat.begin(), grad_y_hat.end(), 0.0);
    part.resize(y_hat.size());
  }
  double total = 0.0;
  for (const auto& cfg : resolutions) {
    total += interference_stft_loss(y, y_hat, cfg, part);
    for (std::size_t i = 0; i < part.size(); ++i) grad_y_hat[i] += part[i] / m;
  }
  return total / m;
}

LossReport mstft_report(const std::vector<std::vector<double>>& y,
                        const std::vector<std::vector<double>>& y_hat,
                        std::span<const StftConfig> resolutions) {
  if (resolutions.empty()) throw ParameterError("mstft: empty resolution list");
  LossReport report;
  report.batch_size = y.size();
  double total = 0.0;
  for (const auto& cfg : resolutions) {
    report.per_resolution.push_back(interference_stft_loss(y, y_hat, cfg));
    total += report.per_resolution.back();
  }
  report.value = total / static_cast<double>(resolutions.size());
  return report;
}

double mse_time_loss(std::span<const double> y, std::span<const double> y_hat,
                     std::span<double> grad_y_hat) {
  check_lengths(y.size(), y_hat.size());
  if (y.empty()) throw ParameterError("mse: empty signals");
  const double n = static_cast<double>(y.size());
  if (!grad_y_hat.empty()) check_lengths(grad_y_hat.size(), y_hat.size());
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y_hat[i] - y[i];
    total += e * e;
    if (!grad_y_hat.empty()) grad_y_hat[i] = 2.0 * e / n;
  }
  return total / n;
}

namespace {

template <class LossFn>
ad::Var fused_loss(ad::Tape& tape, std::span<const double> y, std::span<const ad::Var> y_hat, LossFn fn) {
  std::vector<double> values(y_hat.size());
  for (std::size_t i = 0; i < y_hat.size(); ++i) values[i] = tape.value(y_hat[i]);
  std::vector<double> grad(values.size());
  const double loss = fn(y, values, grad);
  std::vector<ad::Var> inputs(y_hat.begin(), y_hat.end());
  return tape.custom_scalar(loss, [inputs = std::move(inputs), grad = std::move(grad)](
                                      std::span<const double> g, ad::Tape& t) {
    for (std::size_t i = 0; i < inputs.size(); ++i) t.accumulate(inputs[i], g[0] * grad[i]);
  });
}

}  // namespace

ad::Var mstft_loss(ad::Tape& tape, std::span<const double> y, std::span<const ad::Var> y_hat,
                   std::span<const StftConfig> resolutions) {
  return fused_loss(tape, y, y_hat, [resolutions](auto target, const auto& pred, auto& grad) {
    return mstft_loss(target, pred, resolutions, grad);
  });
}

ad::Var mse_time_loss(ad::Tape& tape, std::span<const double> y, std::span<const ad::Var> y_hat) {
  return fused_loss(tape, y, y_hat, [](auto target, const auto& pred, auto& grad) {
    return mse_time_loss(target, pred, grad);
  });
}

}  // namespace apf::loss
