#include "apf/bundle.hpp"

#include <fstream>

#include "apf/error.hpp"

namespace apf::train {

using json = nlohmann::json;

CoefficientBundle CoefficientBundle::from_model(const nn::ApfModel& model, int sample_rate) {
  const auto raw = model.raw_outputs();
  const auto physical = model.physical(raw);
  const auto& layout = model.layout();
  const auto cascade = nn::build_cascade(model.order(), layout, physical, sample_rate);

  CoefficientBundle b;
  b.sample_rate = sample_rate;
  b.model = nn::to_string(model.kind());
  b.routing = layout.routing();

  for (std::size_t s = 0; s < cascade.sections().size(); ++s) {
    const auto& sec = cascade.sections()[s];
    SectionRecord r;
    r.order = sec.spec.order;
    r.warped = sec.spec.warped;
    r.warp = sec.spec.warped ? sec.warp : 0.0;
    for (std::size_t i : layout.slots_of_section(static_cast<int>(s))) {
      if (layout.slots[i].kind == nn::ParamKind::Radius) r.radius = physical[i];
      if (layout.slots[i].kind == nn::ParamKind::Cutoff) r.cutoff_hz = physical[i];
    }
    if (r.order == 1) {
      r.pole = sec.pole;
    } else {
      r.c = sec.coeffs.c;
      r.d = sec.coeffs.d;
    }
    b.sections.push_back(r);
  }
  return b;
}

void CoefficientBundle::validate() const {
  if (sample_rate <= 0) throw ParameterError("bundle: sample rate must be positive");
  const auto c = cascade();
  for (std::size_t i = 0; i < c.sections().size(); ++i) {
    try {
      c.sections()[i].validate();
    } catch (const ParameterError& e) {
      throw ParameterError("bundle section " + std::to_string(i) + ": " + e.what());
    }
  }
}

filters::Cascade CoefficientBundle::cascade() const {
  filters::Cascade c;
  for (const auto& r : sections) {
    filters::Section s;
    s.spec = {r.order, r.warped};
    s.warp = r.warped ? r.warp : 0.0;
    if (r.order == 1) {
      s.pole = r.pole;
    } else {
      s.coeffs = {r.c, r.d};
    }
    c.add(s);
  }
  return c;
}

json CoefficientBundle::to_json() const {
  json j;
  j["version"] = kVersion;
  j["sample_rate"] = sample_rate;
  j["model"] = model;
  j["routing"] = routing;
  j["sections"] = json::array();
  for (const auto& r : sections) {
    json s;
    s["order"] = r.order;
    s["warped"] = r.warped;
    if (r.order == 2) {
      s["params"] = {{"R", r.radius}, {"fc", r.cutoff_hz}, {"a", r.warp}};
      s["coeffs"] = {{"c", r.c}, {"d", r.d}};
    } else {
      s["params"] = {{"pole", r.pole}, {"a", r.warp}};
      s["coeffs"] = {{"pole", r.pole}};
    }
    j["sections"].push_back(s);
  }
  j["provenance"] = {{"seed", provenance.seed},
                     {"loss", provenance.loss},
                     {"epochs", provenance.epochs},
                     {"final_loss", provenance.final_loss},
                     {"best_loss", provenance.best_loss},
                     {"config_hash", provenance.config_hash}};
  return j;
}

CoefficientBundle CoefficientBundle::from_json(const json& j) {
  CoefficientBundle b;
  try {
    const int version = j.at("version").get<int>();
    if (version != kVersion) throw IoError("bundle: unsupported version " + std::to_string(version));
    b.sample_rate = j.at("sample_rate").get<int>();
    b.model = j.at("model").get<std::string>();
    if (j.contains("routing")) b.routing = j.at("routing").get<std::vector<std::string>>();
    for (const auto& s : j.at("sections")) {
      SectionRecord r;
      r.order = s.at("order").get<int>();
      r.warped = s.at("warped").get<bool>();
      const auto& p = s.at("params");
      const auto& k = s.at("coeffs");
      r.warp = p.value("a", 0.0);
      if (r.order == 2) {
        r.radius = p.value("R", 0.0);
        r.cutoff_hz = p.value("fc", 0.0);
        r.c = k.at("c").get<double>();
        r.d = k.at("d").get<double>();
      } else if (r.order == 1) {
        r.pole = k.at("pole").get<double>();
      } else {
        throw IoError("bundle: section order must be 1 or 2");
      }
      b.sections.push_back(r);
    }
    if (j.contains("provenance")) {
      const auto& p = j.at("provenance");
      b.provenance.seed = p.value("seed", std::uint64_t{0});
      b.provenance.loss = p.value("loss", std::string("none"));
      b.provenance.epochs = p.value("epochs", std::size_t{0});
      b.provenance.final_loss = p.value("final_loss", 0.0);
      b.provenance.best_loss = p.value("best_loss", 0.0);
      b.provenance.config_hash = p.value("config_hash", std::string());
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("bundle: malformed JSON: ") + e.what());
  }
  b.validate();
  return b;
}

void CoefficientBundle::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_json().dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

CoefficientBundle CoefficientBundle::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace apf::train
