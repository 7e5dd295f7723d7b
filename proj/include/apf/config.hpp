#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "apf/train.hpp"

// Experiment files are JSON objects. Unknown keys are rejected so typos do
// not silently fall back to defaults. Command-line flags override file values.
namespace apf::config {

struct ExperimentConfig {
  train::TrainConfig train;
  int sample_rate = 48000;
  std::filesystem::path input;
  std::filesystem::path target;
  std::filesystem::path output_dir = "out";
  // Spectrogram exponent applied to the default resolutions when none are
  // listed explicitly.
  int spec_power = 1;
};

// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

nlohmann::json to_json(const train::TrainConfig& cfg);
nlohmann::json to_json(const ExperimentConfig& cfg);
// Hash of the canonical JSON form of the training settings.
std::string config_hash(const train::TrainConfig& cfg);

// Throws ConfigError on unknown keys, wrong types or invalid values.
// Relative paths are resolved against `base_dir` when one is given, else
// left relative to the working directory (load_experiment does this).
ExperimentConfig parse_experiment(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);

}  // namespace apf::config
