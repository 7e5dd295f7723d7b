#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "apf/autodiff.hpp"
#include "apf/signal.hpp"

namespace apf::filters {

inline double value_of(double x) { return x; }
inline double value_of(const ad::Var& x) { return x.value(); }

// Physical parameters of a 2nd-order all-pass section.
struct ApfParams {
  double radius = 0.0;       // pole radius R, [0, 1)
  double cutoff_hz = 1000.0; // break frequency fc
  double warp = 0.0;         // warping factor a, (-1, 1); 0 = unwarped
};

// Throws ParameterError unless 0 <= R < 1, |a| < 1 and fc in [fc_min, fc_max].
void validate(const ApfParams& params, double fc_min = 20.0, double fc_max = 20000.0);

// A2(z) = (c + d z^-1 + z^-2) / (1 + d z^-1 + c z^-2)
struct BiquadCoeffs {
  double c = 0.0;
  double d = 0.0;
};

// c = R^2, d = -2 R cos(2 pi fc / fs)
template <class T>
void biquad_coefficients(const T& radius, const T& cutoff_hz, double sample_rate, T& c, T& d) {
  using std::cos;
  c = radius * radius;
  d = (-2.0 * radius) * cos(cutoff_hz * (2.0 * std::numbers::pi / sample_rate));
}

BiquadCoeffs compute_biquad_coeffs(const ApfParams& params, double sample_rate);

// Transposed direct form II states.
template <class T>
struct BiquadState {
  T v1;
  T v2;
  explicit BiquadState(T zero = T{}) : v1(zero), v2(zero) {}
};

template <class T>
struct FirstOrderState {
  T s;
  explicit FirstOrderState(T zero = T{}) : s(zero) {}
};

//   y  = c x + v1
//   v1 = d x + v2 - d y
//   v2 = x - c y
// with the v1 update reading the previous v2.
template <class T, class X>
T biquad_apf_step(BiquadState<T>& s, const T& c, const T& d, const X& x) {
  T y = c * x + s.v1;
  T v1 = d * x + s.v2 - d * y;
  s.v2 = x - c * y;
  s.v1 = v1;
  return y;
}

// Per-section constants of the warped biquad, i.e. A2(D(z)) with every unit
// delay replaced by D(z) = (a + z^-1) / (1 + a z^-1). The delay-free loop
// through the two D elements is solved in closed form, giving a single
// division per sample.
template <class T>
struct WarpedBiquad {
  T c, a;
  T num;           // c + a^2 + a d
  T den;           // 1 + a^2 c + a d
  T kx;            // d + a (2 + c)
  T ky;            // d + a (1 + 2 c)
  T one_minus_a2;  // 1 - a^2
  T a3;            // a^3
};

// Throws NumericError when |1 + a^2 c + a d| < 1e-12.
void check_warp_denominator(double den, double c, double d, double a);

template <class T>
WarpedBiquad<T> warped_biquad_terms(const T& c, const T& d, const T& a) {
  const T a2 = a * a;
  WarpedBiquad<T> w{c, a, c + a2 + a * d, 1.0 + a2 * c + a * d, d + a * (2.0 + c),
                    d + a * (1.0 + 2.0 * c), 1.0 - a2, a2 * a};
  check_warp_denominator(value_of(w.den), value_of(c), value_of(d), value_of(a));
  return w;
}

//   y  = (x (c + a^2 + a d) + v1) / (1 + a^2 c + a d)
//   v1 = x (2a + d + a c) + y (-2ac - d - a) - a^3 (x - c y) + v2 (1 - a^2)
//   v2 = (x - c y) - a (a (x - c y) + v2)
// With a = 0 every term collapses to biquad_apf_step bit-for-bit.
template <class T, class X>
T warped_biquad_apf_step(BiquadState<T>& s, const WarpedBiquad<T>& w, const X& x) {
  T y = (x * w.num + s.v1) / w.den;
  T u = x - w.c * y;
  T v1 = (w.kx * x + w.one_minus_a2 * s.v2) - (w.ky * y + w.a3 * u);
  s.v2 = u - w.a * (w.a * u + s.v2);
  s.v1 = v1;
  return y;
}

double warped_biquad_apf_step(BiquadState<double>& s, const BiquadCoeffs& coeffs, double a, double x);

// A1(z) = (p + z^-1) / (1 + p z^-1):  y = p x + s;  s = x - p y
template <class T, class X>
T first_order_apf_step(FirstOrderState<T>& st, const T& p, const X& x) {
  T y = p * x + st.s;
  st.s = x - p * y;
  return y;
}

// A1(D(z)); equivalent to an unwarped section with pole (p + a) / (1 + p a).
template <class T>
struct WarpedFirstOrder {
  T p, a;
  T num;  // p + a
  T den;  // 1 + p a
};

template <class T>
WarpedFirstOrder<T> warped_first_order_terms(const T& p, const T& a) {
  WarpedFirstOrder<T> w{p, a, p + a, 1.0 + p * a};
  check_warp_denominator(value_of(w.den), value_of(p), 0.0, value_of(a));
  return w;
}

template <class T, class X>
T warped_first_order_step(FirstOrderState<T>& st, const WarpedFirstOrder<T>& w, const X& x) {
  T y = (x * w.num + st.s) / w.den;
  st.s = (x - w.p * y) - w.a * (y - w.p * x);
  return y;
}

// Whole-buffer helpers; states start from `zero`.
template <class T, class X>
std::vector<T> process_biquad(std::span<const X> x, const T& c, const T& d, const T& zero) {
  std::vector<T> y;
  y.reserve(x.size());
  BiquadState<T> s(zero);
  for (const X& xn : x) y.push_back(biquad_apf_step(s, c, d, xn));
  return y;
}

template <class T, class X>
std::vector<T> process_warped_biquad(std::span<const X> x, const WarpedBiquad<T>& w, const T& zero) {
  std::vector<T> y;
  y.reserve(x.size());
  BiquadState<T> s(zero);
  for (const X& xn : x) y.push_back(warped_biquad_apf_step(s, w, xn));
  return y;
}

template <class T, class X>
std::vector<T> process_first_order(std::span<const X> x, const T& p, const T& zero) {
  std::vector<T> y;
  y.reserve(x.size());
  FirstOrderState<T> s(zero);
  for (const X& xn : x) y.push_back(first_order_apf_step(s, p, xn));
  return y;
}

template <class T, class X>
std::vector<T> process_warped_first_order(std::span<const X> x, const WarpedFirstOrder<T>& w,
                                          const T& zero) {
  std::vector<T> y;
  y.reserve(x.size());
  FirstOrderState<T> s(zero);
  for (const X& xn : x) y.push_back(warped_first_order_step(s, w, xn));
  return y;
}

struct SectionSpec {
  int order = 2;  // 1 or 2
  bool warped = false;

  bool operator==(const SectionSpec&) const = default;
};

// One runtime section of a cascade, described by its coefficients.
struct Section {
  SectionSpec spec;
  BiquadCoeffs coeffs;  // order 2
  double pole = 0.0;    // order 1
  double warp = 0.0;    // used when spec.warped

  static Section biquad(const ApfParams& params, double sample_rate, bool warped);
  static Section first_order(double pole, double warp = 0.0, bool warped = false);

  void validate() const;
  // Frequency response at normalized angular frequency omega (rad/sample).
  std::complex<double> response(double omega) const;
};

std::vector<double> process_section(const Section& section, std::span<const double> x);

// Sections applied in order, each consuming the previous section's output.
// States are zero at the start of every call.
class Cascade {
 public:
  Cascade() = default;
  explicit Cascade(std::vector<Section> sections);

  void add(Section section);
  std::span<const Section> sections() const { return sections_; }
  bool empty() const { return sections_.empty(); }
  // Sum of the section orders.
  int order() const;

  std::vector<double> process(std::span<const double> x) const;
  Signal process(const Signal& x) const;

  std::complex<double> response(double frequency_hz, double sample_rate) const;
  std::vector<double> impulse_response(std::size_t length) const;

 private:
  std::vector<Section> sections_;
};

// First-order RC low-pass, bilinear discretization:
//   y[n] = (rho (x[n] + x[n-1]) + (1 - rho) y[n-1]) / (1 + rho)
struct RcFilter {
  double resistance = 120.0;    // ohms
  double capacitance = 68e-9;   // farads
  // rho = fs / (2RC) instead of 1 / (2 fs RC); for comparison only, the
  // literal form places the pole near z = -1.
  bool literal_rho = false;

  double rho(double sample_rate) const;
  std::vector<double> process(std::span<const double> x, double sample_rate) const;
  Signal process(const Signal& x) const;
};

}  // namespace apf::filters
