#include "apf/filters.hpp"

#include <sstream>

#include "apf/error.hpp"

namespace apf::filters {

void validate(const ApfParams& p, double fc_min, double fc_max) {
  if (!(p.radius >= 0.0 && p.radius < 1.0)) {
    throw ParameterError("all-pass radius must lie in [0, 1), got " + std::to_string(p.radius));
  }
  if (!(std::abs(p.warp) < 1.0)) {
    throw ParameterError("warping factor must satisfy |a| < 1, got " + std::to_string(p.warp));
  }
  if (!(p.cutoff_hz >= fc_min && p.cutoff_hz <= fc_max)) {
    throw ParameterError("break frequency " + std::to_string(p.cutoff_hz) + " Hz outside [" +
                         std::to_string(fc_min) + ", " + std::to_string(fc_max) + "]");
  }
}

BiquadCoeffs compute_biquad_coeffs(const ApfParams& params, double sample_rate) {
  if (!(sample_rate > 0.0)) throw ParameterError("sample rate must be positive");
  BiquadCoeffs k;
  biquad_coefficients(params.radius, params.cutoff_hz, sample_rate, k.c, k.d);
  return k;
}

void check_warp_denominator(double den, double c, double d, double a) {
  if (!(std::abs(den) >= 1e-12)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "warped all-pass denominator degenerate (" << den << ") for c=" << c << ", d=" << d
        << ", a=" << a;
    throw NumericError(msg.str());
  }
}

double warped_biquad_apf_step(BiquadState<double>& s, const BiquadCoeffs& k, double a, double x) {
  return warped_biquad_apf_step(s, warped_biquad_terms(k.c, k.d, a), x);
}

Section Section::biquad(const ApfParams& params, double sample_rate, bool warped) {
  Section s;
  s.spec = {2, warped};
  s.coeffs = compute_biquad_coeffs(params, sample_rate);
  s.warp = warped ? params.warp : 0.0;
  return s;
}

Section Section::first_order(double pole, double warp, bool warped) {
  Section s;
  s.spec = {1, warped};
  s.pole = pole;
  s.warp = warped ? warp : 0.0;
  return s;
}

void Section::validate() const {
  if (spec.order != 1 && spec.order != 2) {
    throw ParameterError("section order must be 1 or 2, got " + std::to_string(spec.order));
  }
  if (spec.warped && !(std::abs(warp) < 1.0)) {
    throw ParameterError("warping factor must satisfy |a| < 1");
  }
  if (spec.order == 1) {
    if (!(std::abs(pole) < 1.0)) throw ParameterError("first-order pole must satisfy |p| < 1");
  } else {
    if (!(coeffs.c >= -1.0 && coeffs.c < 1.0) || !(std::abs(coeffs.d) < 2.0)) {
      throw ParameterError("biquad coefficients outside -1 < c < 1, -2 < d < 2");
    }
  }
}

std::complex<double> Section::response(double omega) const {
  const std::complex<double> zinv = std::polar(1.0, -omega);
  const std::complex<double> delay = spec.warped ? (warp + zinv) / (1.0 + warp * zinv) : zinv;
  if (spec.order == 1) return (pole + delay) / (1.0 + pole * delay);
  const double c = coeffs.c;
  const double d = coeffs.d;
  return (c + d * delay + delay * delay) / (1.0 + d * delay + c * delay * delay);
}

std::vector<double> process_section(const Section& s, std::span<const double> x) {
  s.validate();
  if (s.spec.order == 1) {
    if (s.spec.warped) return process_warped_first_order(x, warped_first_order_terms(s.pole, s.warp), 0.0);
    return process_first_order(x, s.pole, 0.0);
  }
  if (s.spec.warped) {
    return process_warped_biquad(x, warped_biquad_terms(s.coeffs.c, s.coeffs.d, s.warp), 0.0);
  }
  return process_biquad(x, s.coeffs.c, s.coeffs.d, 0.0);
}

Cascade::Cascade(std::vector<Section> sections) : sections_(std::move(sections)) {}

void Cascade::add(Section section) { sections_.push_back(section); }

int Cascade::order() const {
  int n = 0;
  for (const auto& s : sections_) n += s.spec.order;
  return n;
}

std::vector<double> Cascade::process(std::span<const double> x) const {
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    try {
      y = process_section(sections_[i], y);
    } catch (const NumericError& e) {
      throw NumericError("section " + std::to_string(i) + ": " + e.what());
    } catch (const ParameterError& e) {
      throw ParameterError("section " + std::to_string(i) + ": " + e.what());
    }
  }
  return y;
}

Signal Cascade::process(const Signal& x) const {
  return Signal{process(x.view()), x.sample_rate};
}

std::complex<double> Cascade::response(double frequency_hz, double sample_rate) const {
  const double omega = 2.0 * std::numbers::pi * frequency_hz / sample_rate;
  std::complex<double> h = 1.0;
  for (const auto& s : sections_) h *= s.response(omega);
  return h;
}

std::vector<double> Cascade::impulse_response(std::size_t length) const {
  std::vector<double> delta(length, 0.0);
  if (length > 0) delta[0] = 1.0;
  return process(delta);
}

double RcFilter::rho(double sample_rate) const {
  if (!(resistance > 0.0) || !(capacitance > 0.0) || !(sample_rate > 0.0)) {
    throw ParameterError("RC filter: resistance, capacitance and sample rate must be positive");
  }
  const double rc = resistance * capacitance;
  return literal_rho ? sample_rate / (2.0 * rc) : 1.0 / (2.0 * sample_rate * rc);
}

std::vector<double> RcFilter::process(std::span<const double> x, double sample_rate) const {
  const double r = rho(sample_rate);
  std::vector<double> y(x.size());
  double prev_in = 0.0;
  double prev_out = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double out = (r * (x[n] + prev_in) + (1.0 - r) * prev_out) / (1.0 + r);
    prev_in = x[n];
    prev_out = out;
    y[n] = out;
  }
  return y;
}

Signal RcFilter::process(const Signal& x) const {
  return Signal{process(x.view(), x.sample_rate), x.sample_rate};
}

}  // namespace apf::filters
