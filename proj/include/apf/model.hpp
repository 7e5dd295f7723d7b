#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "apf/autodiff.hpp"
#include "apf/filters.hpp"
#include "apf/nn.hpp"

namespace apf::nn {

enum class WarpMode { PerSection, Global };
enum class ModelKind { Sequential, Connected, Naive };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);
std::string to_string(WarpMode mode);
WarpMode parse_warp_mode(const std::string& name);

// Section layout of the cascade to be trained.
struct OrderSpec {
  std::vector<filters::SectionSpec> sections;

  // Three warped 2nd-order sections followed by one warped 1st-order section
  // (order 7, eleven per-section parameters).
  static OrderSpec standard();
  // Comma-separated section tokens: "2", "2w", "1", "1w".
  static OrderSpec parse(const std::string& text);

  int total_order() const;
  // Throws ConfigError on an empty list or orders other than 1 and 2.
  void validate() const;
  std::string to_string() const;
};

// One network output: which section it feeds (-1 for a shared warp factor)
// and what it denormalizes to.
struct Slot {
  int section = 0;
  ParamKind kind = ParamKind::Cutoff;
};

// Output routing: per section in declaration order, (R, fc[, a]) for 2nd
// order and (pole[, a]) for 1st order; in global-warp mode a single shared
// `a` is appended after all sections.
struct ParamLayout {
  std::vector<Slot> slots;

  static ParamLayout build(const OrderSpec& order, WarpMode warp);
  std::size_t size() const { return slots.size(); }
  std::vector<std::size_t> slots_of_section(int section) const;
  // Names such as "R1", "fc1", "a1", ..., "pole4", "a4"; "a" for a global warp.
  std::vector<std::string> routing() const;
};

// Gathers the physical parameters of each section and runs the cascade over
// `input`. Works on plain doubles and on tape variables alike.
template <class T, class X>
std::vector<T> render_cascade(const OrderSpec& order, const ParamLayout& layout,
                              std::span<const T> physical, std::span<const X> input,
                              double sample_rate, const T& zero);

filters::Cascade build_cascade(const OrderSpec& order, const ParamLayout& layout,
                               std::span<const double> physical, double sample_rate);

struct ParamBlock {
  std::span<double> values;
  std::span<double> grads;
};

// A trainable source of cascade parameters. Produces one raw value in
// (-1, 1) per layout slot; denormalization maps raw values to physical ones.
//   Sequential: one BiasNet per section (shared warp emitted by the first).
//   Connected:  one BiasNet emitting every slot.
//   Naive:      one free parameter per slot, squashed by tanh.
class ApfModel {
 public:
  struct Options {
    ModelKind kind = ModelKind::Sequential;
    OrderSpec order = OrderSpec::standard();
    WarpMode warp = WarpMode::PerSection;
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden{1024, 512, 256, 128};
    double omega0 = 30.0;
    // Bounds per parameter kind; kinds not listed use ParamSpec::defaults.
    std::vector<ParamSpec> bounds;
    std::uint64_t seed = 0;
  };

  struct Trace {
    std::vector<BiasNet::Trace> nets;
  };

  explicit ApfModel(Options options);

  const Options& options() const { return options_; }
  ModelKind kind() const { return options_.kind; }
  const OrderSpec& order() const { return options_.order; }
  const ParamLayout& layout() const { return layout_; }
  const std::vector<ParamSpec>& specs() const { return specs_; }
  std::span<const BiasNet> nets() const { return nets_; }
  std::span<BiasNet> nets() { return nets_; }
  std::size_t parameter_count() const;

  std::vector<double> raw_outputs() const;
  std::vector<double> raw_outputs(Trace& trace) const;
  // Accumulates parameter gradients from d(loss)/d(raw outputs).
  void backward(const Trace& trace, std::span<const double> grad_raw);
  // Fused tape version of raw_outputs(); gradients land in the blocks.
  std::vector<ad::Var> raw_outputs(ad::Tape& tape);

  std::vector<double> physical(std::span<const double> raw) const;
  template <class T>
  std::vector<T> physical(std::span<const T> raw) const {
    std::vector<T> out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out.push_back(denormalize(raw[i], specs_[i]));
    return out;
  }

  filters::Cascade cascade(double sample_rate) const;

  std::vector<ParamBlock> blocks();
  void zero_grad();

  // Binary checkpoint: magic, JSON header (shapes, omega0, specs, routing),
  // then every block's parameters as little-endian doubles.
  void save(const std::filesystem::path& path) const;
  static ApfModel load(const std::filesystem::path& path);

 private:
  Options options_;
  ParamLayout layout_;
  std::vector<ParamSpec> specs_;
  std::vector<BiasNet> nets_;
  std::vector<std::vector<std::size_t>> net_slots_;
  std::vector<double> naive_;
  std::vector<double> naive_grad_;
};

// ---------------------------------------------------------------------------

namespace detail {

template <class T, class X>
std::vector<T> run_section(const filters::SectionSpec& spec, const T& p0, const T& p1,
                           const T& warp, std::span<const X> x, double sample_rate,
                           const T& zero) {
  if (spec.order == 1) {
    if (spec.warped) {
      return filters::process_warped_first_order(x, filters::warped_first_order_terms(p0, warp), zero);
    }
    return filters::process_first_order(x, p0, zero);
  }
  T c = zero;
  T d = zero;
  filters::biquad_coefficients(p0, p1, sample_rate, c, d);
  if (spec.warped) {
    return filters::process_warped_biquad(x, filters::warped_biquad_terms(c, d, warp), zero);
  }
  return filters::process_biquad(x, c, d, zero);
}

}  // namespace detail

template <class T, class X>
std::vector<T> render_cascade(const OrderSpec& order, const ParamLayout& layout,
                              std::span<const T> physical, std::span<const X> input,
                              double sample_rate, const T& zero) {
  if (physical.size() != layout.size()) throw std::invalid_argument("render_cascade: parameter count mismatch");
  T global_warp = zero;
  for (std::size_t i = 0; i < layout.slots.size(); ++i) {
    if (layout.slots[i].section < 0) global_warp = physical[i];
  }

  std::vector<T> y;
  for (std::size_t s = 0; s < order.sections.size(); ++s) {
    const auto& spec = order.sections[s];
    T p0 = zero, p1 = zero, warp = global_warp;
    for (std::size_t i = 0; i < layout.slots.size(); ++i) {
      const Slot& slot = layout.slots[i];
      if (slot.section != static_cast<int>(s)) continue;
      switch (slot.kind) {
        case ParamKind::Radius:
        case ParamKind::Pole: p0 = physical[i]; break;
        case ParamKind::Cutoff: p1 = physical[i]; break;
        case ParamKind::Warp: warp = physical[i]; break;
      }
    }
    if (s == 0) {
      y = detail::run_section<T, X>(spec, p0, p1, warp, input, sample_rate, zero);
    } else {
      y = detail::run_section<T, T>(spec, p0, p1, warp, std::span<const T>(y), sample_rate, zero);
    }
  }
  if (order.sections.empty()) {
    y.clear();
    for (const X& v : input) y.push_back(zero + v);
  }
  return y;
}

}  // namespace apf::nn
