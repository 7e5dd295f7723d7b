#include "apf/train.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "apf/config.hpp"
#include "apf/error.hpp"
#include "apf/log.hpp"

namespace apf::train {

std::string to_string(LossKind kind) { return kind == LossKind::Mse ? "mse" : "mstft"; }

LossKind parse_loss_kind(const std::string& name) {
  if (name == "mstft" || name == "m-stft") return LossKind::Mstft;
  if (name == "mse") return LossKind::Mse;
  throw ConfigError("unknown loss '" + name + "' (expected mstft or mse)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (seq_len == 0) throw ConfigError("seq_len must be positive");
  if (patience == 0) throw ConfigError("patience must be positive");
  if (!(min_delta >= 0.0)) throw ConfigError("min_delta must be non-negative");
  if (threads == 0) throw ConfigError("threads must be positive");
  if (hidden.empty() || std::find(hidden.begin(), hidden.end(), 0u) != hidden.end()) {
    throw ConfigError("hidden layer widths must be positive");
  }
  if (!(omega0 > 0.0)) throw ConfigError("omega0 must be positive");
  order.validate();
  if (loss == LossKind::Mstft) {
    if (resolutions.empty()) throw ConfigError("at least one STFT resolution is required");
    for (const auto& r : resolutions) {
      r.validate();
      if (r.win_length > seq_len) throw ConfigError("STFT window longer than seq_len");
    }
  }
  for (const auto& b : bounds) {
    if (!(b.min < b.max)) throw ConfigError("bound for " + nn::to_string(b.kind) + " needs min < max");
  }
}

nn::ApfModel::Options TrainConfig::model_options() const {
  nn::ApfModel::Options o;
  o.kind = model;
  o.order = order;
  o.warp = warp;
  o.hidden = hidden;
  o.omega0 = omega0;
  o.bounds = bounds;
  o.seed = seed;
  return o;
}

AdamOptions TrainConfig::adam_options() const { return {learning_rate, beta1, beta2, epsilon}; }

// ---------------------------------------------------------------------------

Pipeline Pipeline::from(const nn::ApfModel& model, double sample_rate, LossKind loss,
                        std::vector<loss::StftConfig> resolutions) {
  return {model.order(), model.layout(), model.specs(), sample_rate, loss, std::move(resolutions)};
}

double Pipeline::loss_value(std::span<const double> raw, std::span<const double> x,
                            std::span<const double> y) const {
  std::vector<double> physical;
  for (std::size_t i = 0; i < raw.size(); ++i) physical.push_back(nn::denormalize(raw[i], specs[i]));
  const auto y_hat = nn::render_cascade<double, double>(order, layout, physical, x, sample_rate, 0.0);
  if (loss == LossKind::Mse) return loss::mse_time_loss(y, y_hat);
  return loss::mstft_loss(y, y_hat, resolutions);
}

double Pipeline::loss_and_grad(ad::Tape& tape, std::span<const double> raw, std::span<const double> x,
                               std::span<const double> y, std::span<double> grad_raw) const {
  if (grad_raw.size() != raw.size()) throw ParameterError("loss_and_grad: gradient buffer size mismatch");
  tape.clear();
  const auto leaves = tape.variables(raw);
  const ad::Var zero = tape.variable(0.0);
  std::vector<ad::Var> physical;
  physical.reserve(leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) physical.push_back(nn::denormalize(leaves[i], specs[i]));
  const auto y_hat = nn::render_cascade<ad::Var, double>(order, layout, physical, x, sample_rate, zero);
  const ad::Var l = loss == LossKind::Mse ? loss::mse_time_loss(tape, y, y_hat)
                                          : loss::mstft_loss(tape, y, y_hat, resolutions);
  tape.backward(l);
  for (std::size_t i = 0; i < leaves.size(); ++i) grad_raw[i] = leaves[i].grad();
  return l.value();
}

// ---------------------------------------------------------------------------

namespace {

void check_bounds(const nn::ApfModel& model, std::span<const double> raw) {
  const auto& specs = model.specs();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double p = nn::denormalize(raw[i], specs[i]);
    if (!(std::abs(raw[i]) <= 1.0) || !(p >= specs[i].min && p <= specs[i].max)) {
      std::ostringstream os;
      os << "parameter " << model.layout().routing()[i] << " left its bounds (raw " << raw[i] << ")";
      throw NumericError(os.str());
    }
  }
}

struct BatchResult {
  double loss = 0.0;
  std::vector<double> grad;
};

// Per-sequence losses and gradients, reduced in sequence order so the result
// does not depend on the number of workers.
BatchResult run_batch(const Pipeline& pipe, std::span<const double> raw, const SequenceBatch& in,
                      const SequenceBatch& out, std::span<const std::size_t> members,
                      std::vector<ad::Tape>& tapes) {
  const std::size_t n = members.size();
  std::vector<double> losses(n, 0.0);
  std::vector<std::vector<double>> grads(n, std::vector<double>(raw.size(), 0.0));

  const std::size_t workers = std::min(tapes.size(), n);
  auto work = [&](std::size_t w) {
    for (std::size_t k = w; k < n; k += workers) {
      const std::size_t idx = members[k];
      losses[k] = pipe.loss_and_grad(tapes[w], raw, in.windows[idx], out.windows[idx], grads[k]);
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            work(w);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  BatchResult r;
  r.grad.assign(raw.size(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    r.loss += losses[k];
    for (std::size_t i = 0; i < raw.size(); ++i) r.grad[i] += grads[k][i];
  }
  const double inv = 1.0 / static_cast<double>(n);
  r.loss *= inv;
  for (double& g : r.grad) g *= inv;
  return r;
}

std::vector<std::vector<double>> snapshot(nn::ApfModel& model) {
  std::vector<std::vector<double>> out;
  for (const auto& b : model.blocks()) out.emplace_back(b.values.begin(), b.values.end());
  return out;
}

void restore(nn::ApfModel& model, const std::vector<std::vector<double>>& values) {
  auto blocks = model.blocks();
  for (std::size_t k = 0; k < blocks.size(); ++k) std::copy(values[k].begin(), values[k].end(), blocks[k].values.begin());
}

}  // namespace

TrainResult train(const Signal& input, const Signal& target, const TrainConfig& cfg,
                  const ProgressFn& progress) {
  cfg.validate();
  validate(input);
  validate(target);
  if (input.sample_rate != target.sample_rate) throw ParameterError("input and target sample rates differ");
  if (input.size() != target.size()) throw ParameterError("input and target lengths differ");
  if (input.size() < cfg.seq_len) throw ParameterError("signal shorter than one sequence");

  const auto in = frame(input, cfg.seq_len);
  const auto out = frame(target, cfg.seq_len);
  const std::string hash = config::config_hash(cfg);

  nn::ApfModel model(cfg.model_options());
  const Pipeline pipe = Pipeline::from(model, input.sample_rate, cfg.loss, cfg.resolutions);
  Adam adam(cfg.adam_options());
  std::vector<ad::Tape> tapes(cfg.threads);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(in.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result{model, {}, {}, {}, 0.0, 0, false, std::nullopt};
  auto best = snapshot(model);
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto start = snapshot(model);
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);

    double epoch_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size, ++batch_index) {
      const std::size_t last = std::min(order.size(), first + cfg.batch_size);
      const std::span<const std::size_t> members(order.data() + first, last - first);

      nn::ApfModel::Trace trace;
      const auto raw = model.raw_outputs(trace);
      check_bounds(model, raw);
      const BatchResult br = run_batch(pipe, raw, in, out, members, tapes);
      const bool finite = std::isfinite(br.loss) &&
                          std::all_of(br.grad.begin(), br.grad.end(), [](double g) { return std::isfinite(g); });
      if (!finite) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << ", batch " << batch_index;
        result.failure = os.str();
        warn(os.str());
        break;
      }
      model.zero_grad();
      model.backward(trace, br.grad);
      adam.step(model.blocks());
      result.steps.push_back({step++, epoch, br.loss});
      epoch_sum += br.loss * static_cast<double>(members.size());
    }
    if (result.failure) {
      // The epoch's starting parameters were the last ones known to be finite.
      if (!std::isfinite(best_loss)) best = start;
      break;
    }

    const double epoch_loss = epoch_sum / static_cast<double>(order.size());
    result.epoch_losses.push_back(epoch_loss);
    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      best = start;
      result.best_epoch = epoch;
    }
    if (progress) progress(epoch, epoch_loss);
    if (cfg.early_stop && plateau_check(result.epoch_losses, cfg.patience, cfg.min_delta)) {
      result.plateaued = true;
      break;
    }
  }

  restore(model, best);
  result.model = model;
  result.best_loss = best_loss;
  result.bundle = CoefficientBundle::from_model(model, input.sample_rate);
  result.bundle.provenance = {cfg.seed,
                              to_string(cfg.loss),
                              result.epoch_losses.size(),
                              result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back(),
                              std::isfinite(best_loss) ? best_loss : 0.0,
                              hash};
  return result;
}

Signal apply(const CoefficientBundle& bundle, const Signal& x) {
  if (bundle.sample_rate != x.sample_rate) {
    throw ParameterError("bundle sample rate " + std::to_string(bundle.sample_rate) + " does not match signal rate " +
                         std::to_string(x.sample_rate));
  }
  return bundle.cascade().process(x);
}

bool plateau_check(std::span<const double> history, std::size_t patience, double min_delta) {
  if (history.empty()) throw ParameterError("plateau_check: empty history");
  double best = history[0];
  std::size_t since = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (best - history[i] > min_delta * std::abs(best)) {
      best = history[i];
      since = 0;
    } else {
      ++since;
    }
  }
  return since >= patience;
}

std::string loss_csv(std::span<const LossPoint> points, const std::string& config_hash) {
  std::ostringstream os;
  os.precision(17);
  os << "# config_hash=" << config_hash << "\nstep,epoch,loss\n";
  for (const auto& p : points) os << p.step << ',' << p.epoch << ',' << p.loss << '\n';
  return os.str();
}

}  // namespace apf::train
