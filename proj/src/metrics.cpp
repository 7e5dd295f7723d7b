#include "apf/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "apf/error.hpp"
#include "apf/train.hpp"

namespace apf::metrics {

std::string to_string(MaeNorm norm) { return norm == MaeNorm::N ? "n" : "n-1"; }

MaeNorm parse_mae_norm(const std::string& name) {
  if (name == "n-1") return MaeNorm::NMinusOne;
  if (name == "n") return MaeNorm::N;
  throw ConfigError("unknown MAE normalizer '" + name + "' (expected n-1 or n)");
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw ParameterError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
}

}  // namespace

double mae(std::span<const double> y_hat, std::span<const double> y, MaeNorm norm) {
  check_pair(y_hat, y, "mae");
  if (y.size() < 2) throw ParameterError("mae: needs at least two samples");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(y_hat[i] - y[i]);
  const double n = static_cast<double>(y.size());
  return sum / (norm == MaeNorm::N ? n : n - 1.0);
}

double mse(std::span<const double> y_hat, std::span<const double> y) {
  check_pair(y_hat, y, "mse");
  if (y.empty()) throw ParameterError("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y_hat[i] - y[i];
    sum += e * e;
  }
  return sum / static_cast<double>(y.size());
}

double esr(std::span<const double> y_hat, std::span<const double> y) {
  check_pair(y_hat, y, "esr");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y_hat[i] - y[i];
    num += e * e;
    den += y[i] * y[i];
  }
  if (!(den > 0.0)) throw NumericError("esr: undefined for a zero-energy target");
  return num / den;
}

Scores score(std::span<const double> y_hat, std::span<const double> y, MaeNorm norm) {
  return {mae(y_hat, y, norm), mse(y_hat, y), esr(y_hat, y)};
}

nlohmann::json MetricsReport::to_json() const {
  auto row = [](const Scores& s) { return nlohmann::json{{"mae", s.mae}, {"mse", s.mse}, {"esr", s.esr}}; };
  return {{"prediction", row(prediction)},
          {"reference", row(reference)},
          {"mae_norm", to_string(mae_norm)},
          {"samples", samples},
          {"sample_rate", sample_rate},
          {"config_hash", config_hash}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  auto row = [](const nlohmann::json& r) {
    return Scores{r.at("mae").get<double>(), r.at("mse").get<double>(), r.at("esr").get<double>()};
  };
  MetricsReport m;
  try {
    m.prediction = row(j.at("prediction"));
    m.reference = row(j.at("reference"));
    m.mae_norm = parse_mae_norm(j.at("mae_norm").get<std::string>());
    m.samples = j.at("samples").get<std::size_t>();
    m.sample_rate = j.at("sample_rate").get<int>();
    m.config_hash = j.value("config_hash", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("metrics report: ") + e.what());
  }
  return m;
}

std::string MetricsReport::table() const {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %14s %14s %14s\n", "signal", "MAE", "MSE", "ESR");
  os << line;
  std::snprintf(line, sizeof line, "%-12s %14.6e %14.6e %14.6e\n", "prediction", prediction.mae, prediction.mse,
                prediction.esr);
  os << line;
  std::snprintf(line, sizeof line, "%-12s %14.6e %14.6e %14.6e\n", "reference", reference.mae, reference.mse,
                reference.esr);
  os << line;
  return os.str();
}

MetricsReport evaluate(const train::CoefficientBundle& bundle, const Signal& input, const Signal& target,
                       MaeNorm norm) {
  if (input.sample_rate != target.sample_rate) throw ParameterError("evaluate: input and target rates differ");
  const Signal prediction = train::apply(bundle, input);
  MetricsReport r;
  r.prediction = score(prediction.samples, target.samples, norm);
  r.reference = score(input.samples, target.samples, norm);
  r.mae_norm = norm;
  r.samples = target.size();
  r.sample_rate = target.sample_rate;
  r.config_hash = bundle.provenance.config_hash;
  return r;
}

}  // namespace apf::metrics
