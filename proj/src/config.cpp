#include "apf/config.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "apf/error.hpp"

namespace apf::config {

using json = nlohmann::json;

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

namespace {

json resolution_json(const loss::StftConfig& r) {
  return {{"fft_size", r.fft_size},
          {"hop", r.hop},
          {"win_length", r.win_length},
          {"window", loss::to_string(r.window)},
          {"power", r.power}};
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

}  // namespace

json to_json(const train::TrainConfig& cfg) {
  json res = json::array();
  for (const auto& r : cfg.resolutions) res.push_back(resolution_json(r));
  json bounds = json::object();
  for (const auto& b : cfg.bounds) bounds[nn::to_string(b.kind)] = {b.min, b.max};
  return {{"learning_rate", cfg.learning_rate},
          {"batch_size", cfg.batch_size},
          {"max_epochs", cfg.max_epochs},
          {"seed", cfg.seed},
          {"loss", train::to_string(cfg.loss)},
          {"model", nn::to_string(cfg.model)},
          {"order", cfg.order.to_string()},
          {"warp", nn::to_string(cfg.warp)},
          {"seq_len", cfg.seq_len},
          {"shuffle", cfg.shuffle},
          {"early_stop", cfg.early_stop},
          {"patience", cfg.patience},
          {"min_delta", cfg.min_delta},
          {"resolutions", res},
          {"hidden", cfg.hidden},
          {"omega0", cfg.omega0},
          {"bounds", bounds},
          {"beta1", cfg.beta1},
          {"beta2", cfg.beta2},
          {"epsilon", cfg.epsilon}};
}

json to_json(const ExperimentConfig& cfg) {
  json j = to_json(cfg.train);
  j["sample_rate"] = cfg.sample_rate;
  j["input"] = cfg.input.string();
  j["target"] = cfg.target.string();
  j["output_dir"] = cfg.output_dir.string();
  j["spec_power"] = cfg.spec_power;
  j["threads"] = cfg.train.threads;
  return j;
}

// Thread count is left out: it does not change the result.
std::string config_hash(const train::TrainConfig& cfg) { return fnv1a_hex(to_json(cfg).dump()); }

ExperimentConfig parse_experiment(const json& j, const std::filesystem::path& base_dir) {
  static const std::set<std::string> known = {
      "sample_rate", "input",   "target",      "output_dir", "spec_power", "learning_rate", "batch_size",
      "max_epochs",  "seed",    "loss",        "model",      "order",      "warp",          "seq_len",
      "shuffle",     "early_stop", "patience", "min_delta",  "resolutions", "hidden",       "omega0",
      "bounds",      "beta1",   "beta2",       "epsilon",    "threads"};
  reject_unknown(j, known, "config");

  ExperimentConfig c;
  auto& t = c.train;
  try {
    if (j.contains("sample_rate")) c.sample_rate = get<int>(j, "sample_rate");
    if (j.contains("input")) c.input = resolve(base_dir, get<std::string>(j, "input"));
    if (j.contains("target")) c.target = resolve(base_dir, get<std::string>(j, "target"));
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, get<std::string>(j, "output_dir"));
    if (j.contains("spec_power")) c.spec_power = get<int>(j, "spec_power");
    if (j.contains("learning_rate")) t.learning_rate = get<double>(j, "learning_rate");
    if (j.contains("batch_size")) t.batch_size = get<std::size_t>(j, "batch_size");
    if (j.contains("max_epochs")) t.max_epochs = get<std::size_t>(j, "max_epochs");
    if (j.contains("seed")) t.seed = get<std::uint64_t>(j, "seed");
    if (j.contains("loss")) t.loss = train::parse_loss_kind(get<std::string>(j, "loss"));
    if (j.contains("model")) t.model = nn::parse_model_kind(get<std::string>(j, "model"));
    if (j.contains("order")) t.order = nn::OrderSpec::parse(get<std::string>(j, "order"));
    if (j.contains("warp")) t.warp = nn::parse_warp_mode(get<std::string>(j, "warp"));
    if (j.contains("seq_len")) t.seq_len = get<std::size_t>(j, "seq_len");
    if (j.contains("shuffle")) t.shuffle = get<bool>(j, "shuffle");
    if (j.contains("early_stop")) t.early_stop = get<bool>(j, "early_stop");
    if (j.contains("patience")) t.patience = get<std::size_t>(j, "patience");
    if (j.contains("min_delta")) t.min_delta = get<double>(j, "min_delta");
    if (j.contains("hidden")) t.hidden = get<std::vector<std::size_t>>(j, "hidden");
    if (j.contains("omega0")) t.omega0 = get<double>(j, "omega0");
    if (j.contains("beta1")) t.beta1 = get<double>(j, "beta1");
    if (j.contains("beta2")) t.beta2 = get<double>(j, "beta2");
    if (j.contains("epsilon")) t.epsilon = get<double>(j, "epsilon");
    if (j.contains("threads")) t.threads = get<std::size_t>(j, "threads");

    if (c.spec_power != 1 && c.spec_power != 2) throw ConfigError("spec_power must be 1 or 2");
    t.resolutions = loss::default_resolutions(c.spec_power);
    if (j.contains("resolutions")) {
      t.resolutions.clear();
      for (const auto& r : j.at("resolutions")) {
        reject_unknown(r, {"fft_size", "hop", "win_length", "window", "power"}, "resolution");
        loss::StftConfig s;
        s.fft_size = get<std::size_t>(r, "fft_size");
        s.hop = get<std::size_t>(r, "hop");
        s.win_length = get<std::size_t>(r, "win_length");
        if (r.contains("window")) s.window = loss::parse_window(get<std::string>(r, "window"));
        s.power = r.contains("power") ? get<int>(r, "power") : c.spec_power;
        s.validate();
        t.resolutions.push_back(s);
      }
    }
    if (j.contains("bounds")) {
      const auto& b = j.at("bounds");
      if (!b.is_object()) throw ConfigError("bounds must be an object");
      for (const auto& [key, value] : b.items()) {
        const auto range = value.get<std::vector<double>>();
        if (range.size() != 2) throw ConfigError("bounds." + key + " must be [min, max]");
        t.bounds.push_back({nn::parse_param_kind(key), range[0], range[1]});
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  t.validate();
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_experiment(j);
}

}  // namespace apf::config
