#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "apf/filters.hpp"
#include "apf/model.hpp"

namespace apf::train {

// Trained cascade in a form any conventional all-pass runtime can consume.
// JSON schema (version 1):
//   {version, sample_rate, model, routing: [names],
//    sections: [{order, warped, params: {R, fc, a} | {pole, a},
//                coeffs: {c, d} | {pole}}],
//    provenance: {seed, loss, epochs, final_loss, best_loss, config_hash}}
struct SectionRecord {
  int order = 2;
  bool warped = false;
  double radius = 0.0;
  double cutoff_hz = 0.0;
  double warp = 0.0;
  double pole = 0.0;
  double c = 0.0;
  double d = 0.0;
};

struct Provenance {
  std::uint64_t seed = 0;
  std::string loss = "none";
  std::size_t epochs = 0;
  double final_loss = 0.0;
  double best_loss = 0.0;
  std::string config_hash;
};

struct CoefficientBundle {
  static constexpr int kVersion = 1;

  int sample_rate = 48000;
  std::string model = "identity";
  std::vector<std::string> routing;
  std::vector<SectionRecord> sections;
  Provenance provenance;

  // Coefficients of the model's current outputs at `sample_rate`.
  static CoefficientBundle from_model(const nn::ApfModel& model, int sample_rate);

  // Throws ParameterError if a section violates the stability ranges.
  void validate() const;
  filters::Cascade cascade() const;

  nlohmann::json to_json() const;
  static CoefficientBundle from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static CoefficientBundle load(const std::filesystem::path& path);
};

}  // namespace apf::train
