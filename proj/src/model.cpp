#include "apf/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apf/error.hpp"

namespace apf::nn {

using json = nlohmann::json;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Sequential: return "sequential";
    case ModelKind::Connected: return "connected";
    case ModelKind::Naive: return "naive";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "sequential") return ModelKind::Sequential;
  if (name == "connected") return ModelKind::Connected;
  if (name == "naive") return ModelKind::Naive;
  throw ConfigError("unknown model '" + name + "' (expected sequential, connected or naive)");
}

std::string to_string(WarpMode mode) {
  return mode == WarpMode::Global ? "global" : "per-section";
}

WarpMode parse_warp_mode(const std::string& name) {
  if (name == "per-section") return WarpMode::PerSection;
  if (name == "global") return WarpMode::Global;
  throw ConfigError("unknown warp mode '" + name + "' (expected per-section or global)");
}

OrderSpec OrderSpec::standard() {
  return OrderSpec{{{2, true}, {2, true}, {2, true}, {1, true}}};
}

OrderSpec OrderSpec::parse(const std::string& text) {
  OrderSpec spec;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    while (!token.empty() && token.front() == ' ') token.erase(token.begin());
    while (!token.empty() && token.back() == ' ') token.pop_back();
    if (token == "2") {
      spec.sections.push_back({2, false});
    } else if (token == "2w") {
      spec.sections.push_back({2, true});
    } else if (token == "1") {
      spec.sections.push_back({1, false});
    } else if (token == "1w") {
      spec.sections.push_back({1, true});
    } else {
      throw ConfigError("invalid section token '" + token + "' in order spec '" + text + "'");
    }
  }
  spec.validate();
  return spec;
}

int OrderSpec::total_order() const {
  int n = 0;
  for (const auto& s : sections) n += s.order;
  return n;
}

void OrderSpec::validate() const {
  if (sections.empty()) throw ConfigError("order spec has no sections");
  for (const auto& s : sections) {
    if (s.order != 1 && s.order != 2) {
      throw ConfigError("section order must be 1 or 2, got " + std::to_string(s.order));
    }
  }
}

std::string OrderSpec::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(sections[i].order);
    if (sections[i].warped) out += 'w';
  }
  return out;
}

ParamLayout ParamLayout::build(const OrderSpec& order, WarpMode warp) {
  order.validate();
  ParamLayout layout;
  bool any_warped = false;
  for (std::size_t i = 0; i < order.sections.size(); ++i) {
    const auto& s = order.sections[i];
    const int idx = static_cast<int>(i);
    if (s.order == 2) {
      layout.slots.push_back({idx, ParamKind::Radius});
      layout.slots.push_back({idx, ParamKind::Cutoff});
    } else {
      layout.slots.push_back({idx, ParamKind::Pole});
    }
    if (s.warped) {
      any_warped = true;
      if (warp == WarpMode::PerSection) layout.slots.push_back({idx, ParamKind::Warp});
    }
  }
  if (any_warped && warp == WarpMode::Global) layout.slots.push_back({-1, ParamKind::Warp});
  return layout;
}

std::vector<std::size_t> ParamLayout::slots_of_section(int section) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].section == section) out.push_back(i);
  }
  return out;
}

std::vector<std::string> ParamLayout::routing() const {
  std::vector<std::string> names;
  for (const Slot& s : slots) {
    names.push_back(s.section < 0 ? to_string(s.kind) : to_string(s.kind) + std::to_string(s.section + 1));
  }
  return names;
}

filters::Cascade build_cascade(const OrderSpec& order, const ParamLayout& layout,
                               std::span<const double> physical, double sample_rate) {
  if (physical.size() != layout.size()) throw ParameterError("build_cascade: parameter count mismatch");
  double global_warp = 0.0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout.slots[i].section < 0) global_warp = physical[i];
  }
  filters::Cascade cascade;
  for (std::size_t s = 0; s < order.sections.size(); ++s) {
    const auto& spec = order.sections[s];
    double p0 = 0.0, fc = 0.0, warp = global_warp;
    for (std::size_t i : layout.slots_of_section(static_cast<int>(s))) {
      switch (layout.slots[i].kind) {
        case ParamKind::Radius:
        case ParamKind::Pole: p0 = physical[i]; break;
        case ParamKind::Cutoff: fc = physical[i]; break;
        case ParamKind::Warp: warp = physical[i]; break;
      }
    }
    if (spec.order == 1) {
      cascade.add(filters::Section::first_order(p0, warp, spec.warped));
    } else {
      cascade.add(filters::Section::biquad({p0, fc, warp}, sample_rate, spec.warped));
    }
  }
  return cascade;
}

ApfModel::ApfModel(Options options) : options_(std::move(options)) {
  layout_ = ParamLayout::build(options_.order, options_.warp);
  for (const Slot& slot : layout_.slots) {
    ParamSpec spec = ParamSpec::defaults(slot.kind);
    for (const ParamSpec& b : options_.bounds) {
      if (b.kind == slot.kind) spec = b;
    }
    if (!(spec.min < spec.max)) throw ConfigError("parameter bounds for " + to_string(slot.kind) + " are empty");
    specs_.push_back(spec);
  }

  auto make_net = [this](std::size_t outputs, std::uint64_t seed) {
    BiasNet::Options o;
    o.input_dim = options_.input_dim;
    o.hidden = options_.hidden;
    o.output_dim = outputs;
    o.omega0 = options_.omega0;
    return BiasNet(o, seed);
  };

  switch (options_.kind) {
    case ModelKind::Connected: {
      std::vector<std::size_t> all(layout_.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      nets_.push_back(make_net(all.size(), options_.seed));
      net_slots_.push_back(std::move(all));
      break;
    }
    case ModelKind::Sequential: {
      for (std::size_t s = 0; s < options_.order.sections.size(); ++s) {
        auto slots = layout_.slots_of_section(static_cast<int>(s));
        if (s == 0) {
          for (std::size_t g : layout_.slots_of_section(-1)) slots.push_back(g);
        }
        // Distinct, reproducible seeds per section.
        nets_.push_back(make_net(slots.size(), options_.seed + 0x9E3779B97F4A7C15ull * (s + 1)));
        net_slots_.push_back(std::move(slots));
      }
      break;
    }
    case ModelKind::Naive:
      naive_.assign(layout_.size(), 0.0);
      naive_grad_.assign(layout_.size(), 0.0);
      break;
  }
}

std::size_t ApfModel::parameter_count() const {
  std::size_t n = naive_.size();
  for (const auto& net : nets_) n += net.parameter_count();
  return n;
}

std::vector<double> ApfModel::raw_outputs() const {
  Trace trace;
  return raw_outputs(trace);
}

std::vector<double> ApfModel::raw_outputs(Trace& trace) const {
  std::vector<double> raw(layout_.size());
  if (options_.kind == ModelKind::Naive) {
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = std::tanh(naive_[i]);
    return raw;
  }
  trace.nets.resize(nets_.size());
  for (std::size_t k = 0; k < nets_.size(); ++k) {
    const auto out = nets_[k].forward(trace.nets[k]);
    for (std::size_t j = 0; j < out.size(); ++j) raw[net_slots_[k][j]] = out[j];
  }
  return raw;
}

void ApfModel::backward(const Trace& trace, std::span<const double> grad_raw) {
  if (grad_raw.size() != layout_.size()) throw ParameterError("ApfModel::backward: gradient size mismatch");
  if (options_.kind == ModelKind::Naive) {
    for (std::size_t i = 0; i < naive_.size(); ++i) {
      const double t = std::tanh(naive_[i]);
      naive_grad_[i] += grad_raw[i] * (1.0 - t * t);
    }
    return;
  }
  for (std::size_t k = 0; k < nets_.size(); ++k) {
    std::vector<double> g;
    g.reserve(net_slots_[k].size());
    for (std::size_t slot : net_slots_[k]) g.push_back(grad_raw[slot]);
    nets_[k].backward(trace.nets[k], g);
  }
}

std::vector<ad::Var> ApfModel::raw_outputs(ad::Tape& tape) {
  std::vector<ad::Var> raw(layout_.size());
  if (options_.kind == ModelKind::Naive) {
    const std::vector<double> values(naive_.begin(), naive_.end());
    // One fused op so the gradients land in naive_grad_ directly.
    std::vector<double> squashed(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) squashed[i] = std::tanh(values[i]);
    return tape.custom(squashed, [this, squashed](std::span<const double> g, ad::Tape&) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        naive_grad_[i] += g[i] * (1.0 - squashed[i] * squashed[i]);
      }
    });
  }
  for (std::size_t k = 0; k < nets_.size(); ++k) {
    const auto out = nets_[k].forward(tape);
    for (std::size_t j = 0; j < out.size(); ++j) raw[net_slots_[k][j]] = out[j];
  }
  return raw;
}

std::vector<double> ApfModel::physical(std::span<const double> raw) const {
  return physical<double>(raw);
}

filters::Cascade ApfModel::cascade(double sample_rate) const {
  return build_cascade(options_.order, layout_, physical(raw_outputs()), sample_rate);
}

std::vector<ParamBlock> ApfModel::blocks() {
  std::vector<ParamBlock> out;
  if (options_.kind == ModelKind::Naive) {
    out.push_back({naive_, naive_grad_});
  }
  for (auto& net : nets_) out.push_back({net.parameters(), net.gradients()});
  return out;
}

void ApfModel::zero_grad() {
  std::fill(naive_grad_.begin(), naive_grad_.end(), 0.0);
  for (auto& net : nets_) net.zero_grad();
}

namespace {

constexpr char kMagic[8] = {'A', 'P', 'F', 'C', 'K', 'P', 'T', '1'};

json bounds_json(const std::vector<ParamSpec>& specs) {
  json out = json::array();
  for (const auto& s : specs) out.push_back({{"kind", to_string(s.kind)}, {"min", s.min}, {"max", s.max}});
  return out;
}

}  // namespace

void ApfModel::save(const std::filesystem::path& path) const {
  json header;
  header["version"] = 1;
  header["model"] = to_string(options_.kind);
  header["order"] = options_.order.to_string();
  header["warp"] = to_string(options_.warp);
  header["input_dim"] = options_.input_dim;
  header["hidden"] = options_.hidden;
  header["omega0"] = options_.omega0;
  header["seed"] = options_.seed;
  header["bounds"] = bounds_json(options_.bounds);
  header["specs"] = bounds_json(specs_);
  header["routing"] = layout_.routing();
  std::vector<std::size_t> sizes;
  if (options_.kind == ModelKind::Naive) sizes.push_back(naive_.size());
  for (const auto& net : nets_) sizes.push_back(net.parameter_count());
  header["blocks"] = sizes;

  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  auto write_block = [&out](std::span<const double> v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  };
  if (options_.kind == ModelKind::Naive) write_block(naive_);
  for (const auto& net : nets_) write_block(net.parameters());
  if (!out) throw IoError("write failed: " + path.string());
}

ApfModel ApfModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0 || len > (1u << 24)) {
    throw IoError(path.string() + ": not a model checkpoint");
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError(path.string() + ": truncated checkpoint header");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": corrupt checkpoint header: " + e.what());
  }

  Options o;
  try {
    if (header.at("version").get<int>() != 1) throw IoError(path.string() + ": unsupported checkpoint version");
    o.kind = parse_model_kind(header.at("model").get<std::string>());
    o.order = OrderSpec::parse(header.at("order").get<std::string>());
    o.warp = parse_warp_mode(header.at("warp").get<std::string>());
    o.input_dim = header.at("input_dim").get<std::size_t>();
    o.hidden = header.at("hidden").get<std::vector<std::size_t>>();
    o.omega0 = header.at("omega0").get<double>();
    o.seed = header.at("seed").get<std::uint64_t>();
    for (const auto& b : header.at("bounds")) {
      o.bounds.push_back({parse_param_kind(b.at("kind").get<std::string>()), b.at("min").get<double>(),
                          b.at("max").get<double>()});
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": invalid checkpoint header: " + e.what());
  }

  ApfModel model(o);
  const auto sizes = header.at("blocks").get<std::vector<std::size_t>>();
  auto blocks = model.blocks();
  if (sizes.size() != blocks.size()) throw IoError(path.string() + ": block count mismatch");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (sizes[i] != blocks[i].values.size()) throw IoError(path.string() + ": block shape mismatch");
    in.read(reinterpret_cast<char*>(blocks[i].values.data()),
            static_cast<std::streamsize>(blocks[i].values.size_bytes()));
  }
  if (!in) throw IoError(path.string() + ": truncated checkpoint payload");
  return model;
}

}  // namespace apf::nn
