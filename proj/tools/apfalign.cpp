// apfalign: phase alignment of dry/wet recordings with learned all-pass cascades.
//
// Exit codes: 0 ok, 2 configuration/usage error, 3 numeric failure, 4 I/O error.
// Failures print a single line to stderr:  error[<kind>]: <message>

#include <CLI11.hpp>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include "apf/config.hpp"
#include "apf/error.hpp"
#include "apf/filters.hpp"
#include "apf/metrics.hpp"
#include "apf/signal.hpp"
#include "apf/train.hpp"
#include "apf/wav.hpp"

namespace fs = std::filesystem;
using namespace apf;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kNumeric = 3, kIo = 4 };

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int fail(const char* kind, const std::string& message, int code) {
  std::cerr << "error[" << kind << "]: " << one_line(message) << '\n';
  return code;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

SampleFormat format_or(std::optional<int> bits, SampleFormat fallback) {
  return bits ? parse_sample_format(*bits) : fallback;
}

struct SweepArgs {
  double f1 = 20.0, f2 = 20000.0, duration = 2.0, amp = 0.5;
  int sample_rate = 48000;
  int bits = 32;
  std::string out = "sweep.wav";
};

struct RcArgs {
  std::string in, out;
  double r_ohms = 120.0, c_farads = 68e-9;
  bool literal = false;
  std::optional<int> bits;
};

struct TrainArgs {
  std::string config;
  std::optional<std::string> input, target, output_dir, loss, model, order, warp;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<std::size_t> epochs, batch, threads, seq_len;
  bool quiet = false;
};

struct ApplyArgs {
  std::string bundle, in, out;
  std::optional<int> bits;
};

struct EvalArgs {
  std::string bundle, in, target, mae_norm = "n-1";
  std::optional<std::string> json_out;
};

struct ResponseArgs {
  std::string bundle, out_dir = ".";
  std::size_t taps = 8192, points = 1024;
};

void run_sweep(const SweepArgs& a) {
  const Signal s = generate_log_sweep(a.f1, a.f2, a.duration, a.sample_rate, a.amp);
  write_wav(a.out, s, parse_sample_format(a.bits));
  std::cout << "wrote " << a.out << " (" << s.size() << " samples at " << s.sample_rate << " Hz)\n";
}

void run_rc(const RcArgs& a) {
  WavInfo info;
  const Signal x = read_wav(a.in, &info);
  const filters::RcFilter rc{a.r_ohms, a.c_farads, a.literal};
  const Signal y = rc.process(x);
  write_wav(a.out, y, format_or(a.bits, info.format));
  std::cout << "wrote " << a.out << " (rho = " << rc.rho(x.sample_rate) << ")\n";
}

void run_train(const TrainArgs& a) {
  config::ExperimentConfig cfg = config::load_experiment(a.config);
  auto& t = cfg.train;
  if (a.input) cfg.input = *a.input;
  if (a.target) cfg.target = *a.target;
  if (a.output_dir) cfg.output_dir = *a.output_dir;
  if (a.loss) t.loss = train::parse_loss_kind(*a.loss);
  if (a.model) t.model = nn::parse_model_kind(*a.model);
  if (a.order) t.order = nn::OrderSpec::parse(*a.order);
  if (a.warp) t.warp = nn::parse_warp_mode(*a.warp);
  if (a.seed) t.seed = *a.seed;
  if (a.lr) t.learning_rate = *a.lr;
  if (a.epochs) t.max_epochs = *a.epochs;
  if (a.batch) t.batch_size = *a.batch;
  if (a.threads) t.threads = *a.threads;
  if (a.seq_len) t.seq_len = *a.seq_len;
  t.validate();
  if (cfg.input.empty() || cfg.target.empty()) throw ConfigError("train needs input and target paths");

  const Signal input = read_wav(cfg.input);
  const Signal target = read_wav(cfg.target);
  if (input.sample_rate != cfg.sample_rate) {
    throw ConfigError("input rate " + std::to_string(input.sample_rate) + " differs from configured sample_rate " +
                      std::to_string(cfg.sample_rate));
  }

  train::ProgressFn progress;
  if (!a.quiet) {
    progress = [](std::size_t epoch, double loss) {
      std::cout << "epoch " << epoch << " loss " << loss << '\n';
    };
  }
  const auto result = train::train(input, target, t, progress);

  fs::create_directories(cfg.output_dir);
  const std::string hash = result.bundle.provenance.config_hash;
  result.model.save(cfg.output_dir / "model.ckpt");
  result.bundle.save(cfg.output_dir / "bundle.json");
  write_text(cfg.output_dir / "loss.csv", train::loss_csv(result.steps, hash));
  {
    std::ostringstream os;
    os.precision(17);
    os << "# config_hash=" << hash << "\nepoch,loss\n";
    for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) os << e << ',' << result.epoch_losses[e] << '\n';
    write_text(cfg.output_dir / "epochs.csv", os.str());
  }
  write_text(cfg.output_dir / "config.json", config::to_json(cfg).dump(2) + "\n");

  std::cout << "best loss " << result.best_loss << " at epoch " << result.best_epoch << "; wrote "
            << (cfg.output_dir / "bundle.json").string() << '\n';
  if (result.failure) throw NumericError(*result.failure + " (last good checkpoint written)");
}

void run_apply(const ApplyArgs& a) {
  const auto bundle = train::CoefficientBundle::load(a.bundle);
  WavInfo info;
  const Signal x = read_wav(a.in, &info);
  const Signal y = train::apply(bundle, x);
  write_wav(a.out, y, format_or(a.bits, info.format));
  std::cout << "wrote " << a.out << '\n';
}

void run_eval(const EvalArgs& a) {
  const auto bundle = train::CoefficientBundle::load(a.bundle);
  const Signal x = read_wav(a.in);
  const Signal y = read_wav(a.target);
  if (x.size() != y.size()) throw ParameterError("input and target lengths differ");
  const auto report = metrics::evaluate(bundle, x, y, metrics::parse_mae_norm(a.mae_norm));
  std::cout << report.table();
  const std::string js = report.to_json().dump(2) + "\n";
  if (a.json_out) {
    write_text(*a.json_out, js);
  } else {
    std::cout << js;
  }
}

void run_response(const ResponseArgs& a) {
  const auto bundle = train::CoefficientBundle::load(a.bundle);
  const auto cascade = bundle.cascade();
  const std::string header = "# config_hash=" + bundle.provenance.config_hash + "\n";
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);

  std::ostringstream ir, mag, ph;
  ir.precision(17);
  mag.precision(17);
  ph.precision(17);
  ir << header << "n,h\n";
  const auto h = cascade.impulse_response(a.taps);
  for (std::size_t n = 0; n < h.size(); ++n) ir << n << ',' << h[n] << '\n';

  mag << header << "freq_hz,magnitude_db\n";
  ph << header << "freq_hz,phase_rad,unwrapped_rad\n";
  const double fs = bundle.sample_rate;
  double prev = 0.0, offset = 0.0;
  for (std::size_t k = 0; k < a.points; ++k) {
    // Log-spaced from 10 Hz to just below Nyquist.
    const double f = 10.0 * std::pow(0.49 * fs / 10.0, static_cast<double>(k) / static_cast<double>(a.points - 1));
    const std::complex<double> r = cascade.response(f, fs);
    const double phase = std::arg(r);
    if (k > 0) {
      const double jump = phase - prev;
      if (jump > std::numbers::pi) offset -= 2.0 * std::numbers::pi;
      if (jump < -std::numbers::pi) offset += 2.0 * std::numbers::pi;
    }
    prev = phase;
    mag << f << ',' << 20.0 * std::log10(std::abs(r)) << '\n';
    ph << f << ',' << phase << ',' << phase + offset << '\n';
  }
  write_text(dir / "impulse.csv", ir.str());
  write_text(dir / "magnitude.csv", mag.str());
  write_text(dir / "phase.csv", ph.str());
  std::cout << "wrote impulse.csv, magnitude.csv, phase.csv to " << dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase alignment with trainable all-pass filter cascades"};
  app.require_subcommand(1);

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Write an exponential sine sweep WAV");
  s->add_option("--f1", sweep.f1, "Start frequency in Hz")->capture_default_str();
  s->add_option("--f2", sweep.f2, "End frequency in Hz")->capture_default_str();
  s->add_option("--duration", sweep.duration, "Length in seconds")->capture_default_str();
  s->add_option("--sample-rate", sweep.sample_rate, "Sampling rate in Hz")->capture_default_str();
  s->add_option("--amp", sweep.amp, "Peak amplitude")->capture_default_str();
  s->add_option("--bits", sweep.bits, "16, 24 or 32 (float)")->capture_default_str();
  s->add_option("-o,--output", sweep.out, "Output WAV")->capture_default_str();

  RcArgs rc;
  auto* r = app.add_subcommand("rc-sim", "Run the RC low-pass over a WAV");
  r->add_option("-i,--input", rc.in, "Input WAV")->required();
  r->add_option("-o,--output", rc.out, "Output WAV")->required();
  r->add_option("--r-ohms", rc.r_ohms, "Resistance")->capture_default_str();
  r->add_option("--c-farads", rc.c_farads, "Capacitance")->capture_default_str();
  r->add_flag("--literal-rho", rc.literal, "Use rho = fs/(2RC) instead of 1/(2 fs RC)");
  r->add_option("--bits", rc.bits, "Output format (default: input format)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a cascade from an experiment config");
  t->add_option("-c,--config", tr.config, "Experiment JSON")->required();
  t->add_option("--input", tr.input, "Dry input WAV");
  t->add_option("--target", tr.target, "Wet target WAV");
  t->add_option("--output-dir", tr.output_dir, "Directory for checkpoint, bundle and CSVs");
  t->add_option("--loss", tr.loss, "mstft or mse");
  t->add_option("--model", tr.model, "sequential, connected or naive");
  t->add_option("--order", tr.order, "Section list, e.g. 2w,2w,2w,1w");
  t->add_option("--warp", tr.warp, "per-section or global");
  t->add_option("--seed", tr.seed, "Random seed");
  t->add_option("--lr", tr.lr, "Learning rate");
  t->add_option("--epochs", tr.epochs, "Maximum epochs");
  t->add_option("--batch", tr.batch, "Sequences per batch");
  t->add_option("--threads", tr.threads, "Worker threads");
  t->add_option("--seq-len", tr.seq_len, "Samples per sequence");
  t->add_flag("-q,--quiet", tr.quiet, "No per-epoch output");

  ApplyArgs ap;
  auto* a = app.add_subcommand("apply", "Apply a coefficient bundle to a WAV");
  a->add_option("-b,--bundle", ap.bundle, "Bundle JSON")->required();
  a->add_option("-i,--input", ap.in, "Input WAV")->required();
  a->add_option("-o,--output", ap.out, "Output WAV")->required();
  a->add_option("--bits", ap.bits, "Output format (default: input format)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a bundle against a target");
  e->add_option("-b,--bundle", ev.bundle, "Bundle JSON")->required();
  e->add_option("-i,--input", ev.in, "Dry input WAV")->required();
  e->add_option("-t,--target", ev.target, "Wet target WAV")->required();
  e->add_option("--mae-norm", ev.mae_norm, "n-1 or n")->capture_default_str();
  e->add_option("--json", ev.json_out, "Write the JSON report here instead of stdout");

  ResponseArgs rs;
  auto* x = app.add_subcommand("export-response", "Impulse, magnitude and phase response CSVs");
  x->add_option("-b,--bundle", rs.bundle, "Bundle JSON")->required();
  x->add_option("-o,--output-dir", rs.out_dir, "Output directory")->capture_default_str();
  x->add_option("--taps", rs.taps, "Impulse response length")->capture_default_str()->check(CLI::PositiveNumber);
  x->add_option("--points", rs.points, "Frequency points")->capture_default_str()->check(CLI::Range(2, 1 << 20));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    return fail("usage", ex.what(), kConfig);
  }

  try {
    if (s->parsed()) run_sweep(sweep);
    if (r->parsed()) run_rc(rc);
    if (t->parsed()) run_train(tr);
    if (a->parsed()) run_apply(ap);
    if (e->parsed()) run_eval(ev);
    if (x->parsed()) run_response(rs);
  } catch (const ConfigError& ex) {
    return fail("config", ex.what(), kConfig);
  } catch (const ParameterError& ex) {
    return fail("parameter", ex.what(), kConfig);
  } catch (const NumericError& ex) {
    return fail("numeric", ex.what(), kNumeric);
  } catch (const IoError& ex) {
    return fail("io", ex.what(), kIo);
  } catch (const fs::filesystem_error& ex) {
    return fail("io", ex.what(), kIo);
  } catch (const std::exception& ex) {
    return fail("internal", ex.what(), 1);
  }
  return kOk;
}
