#include "detcal/toytrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "detcal/eval.hpp"
#include "detcal/gaussian.hpp"
#include "detcal/random.hpp"

namespace detcal::toytrain {

namespace {

void check_dims(std::span<const double> y, std::span<const double> u, std::span<const double> var) {
  if (y.size() != u.size() || y.size() != var.size()) throw DomainError("loss: vectors differ in dimension");
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

// Per-sample workspace for one forward/backward pass.
struct Pass {
  std::vector<double> hidden;
  std::vector<double> mean;
  std::vector<double> log_var;
  std::vector<double> var;
};

void forward(const ToyModel& m, std::span<const double> x, Pass& pass) {
  pass.hidden.resize(m.hidden);
  pass.mean.resize(m.outputs);
  pass.log_var.resize(m.outputs);
  pass.var.resize(m.outputs);
  for (std::size_t h = 0; h < m.hidden; ++h) {
    double a = m.b_hidden[h];
    for (std::size_t f = 0; f < m.features; ++f) a += m.w_hidden[h * m.features + f] * x[f];
    pass.hidden[h] = std::tanh(a);
  }
  for (std::size_t d = 0; d < m.outputs; ++d) {
    double mu = m.b_mean[d];
    double s = m.b_log_var[d];
    for (std::size_t h = 0; h < m.hidden; ++h) {
      mu += m.w_mean[d * m.hidden + h] * pass.hidden[h];
      s += m.w_log_var[d * m.hidden + h] * pass.hidden[h];
    }
    pass.mean[d] = mu;
    pass.log_var[d] = s;
    pass.var[d] = std::exp(s);
  }
}

// Accumulates parameter gradients given dL/dmean and dL/dlogvar for one sample.
void backward(const ToyModel& m, std::span<const double> x, const Pass& pass, std::span<const double> d_mean,
              std::span<const double> d_log_var, ToyModel& grad) {
  std::vector<double> d_hidden(m.hidden, 0.0);
  for (std::size_t d = 0; d < m.outputs; ++d) {
    grad.b_mean[d] += d_mean[d];
    grad.b_log_var[d] += d_log_var[d];
    for (std::size_t h = 0; h < m.hidden; ++h) {
      grad.w_mean[d * m.hidden + h] += d_mean[d] * pass.hidden[h];
      grad.w_log_var[d * m.hidden + h] += d_log_var[d] * pass.hidden[h];
      d_hidden[h] += m.w_mean[d * m.hidden + h] * d_mean[d] + m.w_log_var[d * m.hidden + h] * d_log_var[d];
    }
  }
  for (std::size_t h = 0; h < m.hidden; ++h) {
    const double pre = d_hidden[h] * (1.0 - pass.hidden[h] * pass.hidden[h]);
    grad.b_hidden[h] += pre;
    for (std::size_t f = 0; f < m.features; ++f) grad.w_hidden[h * m.features + f] += pre * x[f];
  }
}

void zero(ToyModel& g) {
  for (auto* v : {&g.w_hidden, &g.b_hidden, &g.w_mean, &g.b_mean, &g.w_log_var, &g.b_log_var}) {
    std::fill(v->begin(), v->end(), 0.0);
  }
}

void sgd_step(ToyModel& m, const ToyModel& g, double step) {
  auto update = [step](std::vector<double>& p, const std::vector<double>& d) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= step * d[i];
  };
  update(m.w_hidden, g.w_hidden);
  update(m.b_hidden, g.b_hidden);
  update(m.w_mean, g.w_mean);
  update(m.b_mean, g.b_mean);
  update(m.w_log_var, g.w_log_var);
  update(m.b_log_var, g.b_log_var);
}

std::span<const double> row(const std::vector<double>& data, std::size_t i, std::size_t width) {
  return std::span<const double>(data).subspan(i * width, width);
}

}  // namespace

LossValue loss_reg(std::span<const double> y, std::span<const double> u, std::span<const double> var) {
  check_dims(y, u, var);
  LossValue out;
  out.d_mean.resize(y.size());
  out.d_log_var.resize(y.size());
  for (std::size_t d = 0; d < y.size(); ++d) {
    if (!(var[d] > 0.0)) throw DomainError("loss_reg: variance must be positive");
    const double r = y[d] - u[d];
    const double scaled = r * r / var[d];
    out.value += 0.5 * scaled + 0.5 * std::log(var[d]);
    out.d_mean[d] = -r / var[d];
    out.d_log_var[d] = 0.5 - 0.5 * scaled;
  }
  return out;
}

std::string_view calib_norm_name(CalibNorm n) { return n == CalibNorm::l1 ? "l1" : "l2"; }

std::optional<CalibNorm> parse_calib_norm(std::string_view name) {
  if (name == "l1") return CalibNorm::l1;
  if (name == "l2") return CalibNorm::l2;
  return std::nullopt;
}

LossValue loss_calib(std::span<const double> y, std::span<const double> u, std::span<const double> var,
                     CalibNorm norm) {
  check_dims(y, u, var);
  const std::size_t dims = y.size();
  std::vector<double> diff(dims), r(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    r[d] = y[d] - u[d];
    diff[d] = var[d] - r[d] * r[d];
  }
  LossValue out;
  out.d_mean.assign(dims, 0.0);
  out.d_log_var.assign(dims, 0.0);
  // d diff / d mean = 2r, d diff / d log var = var
  if (norm == CalibNorm::l1) {
    for (std::size_t d = 0; d < dims; ++d) {
      out.value += std::abs(diff[d]);
      out.d_mean[d] = sign(diff[d]) * 2.0 * r[d];
      out.d_log_var[d] = sign(diff[d]) * var[d];
    }
  } else {
    double sq = 0.0;
    for (double v : diff) sq += v * v;
    out.value = std::sqrt(sq);
    if (out.value > 0.0) {
      for (std::size_t d = 0; d < dims; ++d) {
        out.d_mean[d] = diff[d] / out.value * 2.0 * r[d];
        out.d_log_var[d] = diff[d] / out.value * var[d];
      }
    }
  }
  return out;
}

LossValue loss_total(std::span<const double> y, std::span<const double> u, std::span<const double> var,
                     double lambda, CalibNorm norm) {
  if (!(lambda >= 0.0)) throw DomainError("loss_total: lambda must be >= 0");
  LossValue total = loss_reg(y, u, var);
  const LossValue calib = loss_calib(y, u, var, norm);
  total.value += lambda * calib.value;
  for (std::size_t d = 0; d < y.size(); ++d) {
    total.d_mean[d] += lambda * calib.d_mean[d];
    total.d_log_var[d] += lambda * calib.d_log_var[d];
  }
  return total;
}

ToyModel ToyModel::zeros(std::size_t features, std::size_t hidden, std::size_t outputs) {
  if (features == 0 || hidden == 0 || outputs == 0) throw DomainError("toy model dimensions must be positive");
  ToyModel m;
  m.features = features;
  m.hidden = hidden;
  m.outputs = outputs;
  m.w_hidden.assign(hidden * features, 0.0);
  m.b_hidden.assign(hidden, 0.0);
  m.w_mean.assign(outputs * hidden, 0.0);
  m.b_mean.assign(outputs, 0.0);
  m.w_log_var.assign(outputs * hidden, 0.0);
  m.b_log_var.assign(outputs, 0.0);
  return m;
}

ToyModel ToyModel::initialized(std::size_t features, std::size_t hidden, std::size_t outputs, std::uint64_t seed) {
  ToyModel m = zeros(features, hidden, outputs);
  Rng rng(seed);
  const double hidden_scale = 1.0 / std::sqrt(static_cast<double>(features));
  const double out_scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& w : m.w_hidden) w = hidden_scale * rng.normal();
  for (auto& w : m.w_mean) w = out_scale * rng.normal();
  return m;
}

std::size_t ToyModel::parameter_count() const {
  return w_hidden.size() + b_hidden.size() + w_mean.size() + b_mean.size() + w_log_var.size() + b_log_var.size();
}

std::vector<GaussianMarginal> predict(const ToyModel& model, std::span<const double> features) {
  if (features.size() != model.features) {
    throw DomainError("predict: expected " + std::to_string(model.features) + " features, got " +
                      std::to_string(features.size()));
  }
  Pass pass;
  forward(model, features, pass);
  std::vector<GaussianMarginal> out(model.outputs);
  for (std::size_t d = 0; d < model.outputs; ++d) out[d] = {pass.mean[d], pass.var[d]};
  return out;
}

void TaskConfig::validate() const {
  if (n_train == 0 || n_heldout == 0) throw UsageError("toy task: split sizes must be positive");
  if (features == 0) throw UsageError("toy task: feature dimension must be positive");
  if (outputs == 0 || outputs > kNumElements) throw UsageError("toy task: outputs must be in [1, 6]");
  if (!(noise_floor > 0.0) || !(noise_slope >= 0.0)) throw UsageError("toy task: noise parameters must be positive");
}

double ToyTask::true_variance(std::span<const double> x) const {
  const double sd = config.noise_floor + config.noise_slope * std::abs(x[0]);
  return sd * sd;
}

ToyTask make_task(const TaskConfig& config) {
  config.validate();
  ToyTask task;
  task.config = config;
  Rng rng(config.seed);
  task.mean_map.resize(config.outputs * config.features);
  for (auto& w : task.mean_map) w = rng.normal();

  auto fill = [&](std::size_t n, std::vector<double>& xs, std::vector<double>& ys) {
    xs.resize(n * config.features);
    ys.resize(n * config.outputs);
    for (std::size_t i = 0; i < n; ++i) {
      auto x = std::span<double>(xs).subspan(i * config.features, config.features);
      for (auto& v : x) v = rng.uniform(-1.0, 1.0);
      const double sd = std::sqrt(task.true_variance(x));
      for (std::size_t d = 0; d < config.outputs; ++d) {
        double mu = 0.0;
        for (std::size_t f = 0; f < config.features; ++f) mu += task.mean_map[d * config.features + f] * x[f];
        ys[i * config.outputs + d] = mu + sd * rng.normal();
      }
    }
  };
  fill(config.n_train, task.train_x, task.train_y);
  fill(config.n_heldout, task.heldout_x, task.heldout_y);
  return task;
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("train config: lambda must be >= 0");
  if (epochs == 0) throw UsageError("train config: epochs must be positive");
  if (!(learning_rate > 0.0) || !(pretrain_learning_rate > 0.0)) {
    throw UsageError("train config: learning rates must be positive");
  }
  if (!(lr_decay >= 0.0) || !std::isfinite(lr_decay)) throw UsageError("train config: lr_decay must be >= 0");
  if (batch_size == 0) throw UsageError("train config: batch size must be positive");
  if (hidden == 0) throw UsageError("train config: hidden width must be positive");
}

TrainingDiverged::TrainingDiverged(std::size_t epoch)
    : Error("training diverged at epoch " + std::to_string(epoch) + ": loss became non-finite"), epoch_(epoch) {}

double heldout_l2(const ToyModel& model, const ToyTask& task) {
  const std::size_t dims = model.outputs;
  double total = 0.0;
  Pass pass;
  for (std::size_t i = 0; i < task.n_heldout(); ++i) {
    forward(model, row(task.heldout_x, i, model.features), pass);
    for (std::size_t d = 0; d < dims; ++d) {
      const double r = task.heldout_y[i * dims + d] - pass.mean[d];
      total += r * r;
    }
  }
  return total / static_cast<double>(task.n_heldout() * dims);
}

double heldout_ece(const ToyModel& model, const ToyTask& task) {
  const std::size_t dims = model.outputs;
  const auto levels = eval::default_levels();
  std::vector<std::vector<double>> cdf(dims, std::vector<double>(task.n_heldout()));
  Pass pass;
  for (std::size_t i = 0; i < task.n_heldout(); ++i) {
    forward(model, row(task.heldout_x, i, model.features), pass);
    for (std::size_t d = 0; d < dims; ++d) {
      cdf[d][i] = gaussian::std_normal_cdf((task.heldout_y[i * dims + d] - pass.mean[d]) / std::sqrt(pass.var[d]));
    }
  }
  double total = 0.0;
  for (std::size_t d = 0; d < dims; ++d) total += eval::ece(eval::regression_curve_from_cdf(cdf[d], levels));
  return total / static_cast<double>(dims);
}

double variance_relative_error(const ToyModel& model, const ToyTask& task) {
  double total = 0.0;
  Pass pass;
  for (std::size_t i = 0; i < task.n_heldout(); ++i) {
    const auto x = row(task.heldout_x, i, model.features);
    forward(model, x, pass);
    const double truth = task.true_variance(x);
    for (double v : pass.var) total += std::abs(v - truth) / truth;
  }
  return total / static_cast<double>(task.n_heldout() * model.outputs);
}

TrainResult train_toy(const TrainConfig& config, const ToyTask& task) {
  config.validate();
  const std::size_t features = task.config.features;
  const std::size_t dims = task.config.outputs;
  const std::size_t n = task.n_train();

  TrainResult result{ToyModel::initialized(features, config.hidden, dims, config.seed), {}};
  ToyModel& model = result.model;
  ToyModel grad = ToyModel::zeros(features, config.hidden, dims);

  Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Pass pass;
  std::vector<double> d_mean(dims), zeros(dims, 0.0);

  auto shuffle = [&] {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
  };

  // exp of a runaway log-variance over- or underflows before the loss turns non-finite
  auto check_pass = [&](std::size_t epoch) {
    for (std::size_t d = 0; d < dims; ++d) {
      if (!std::isfinite(pass.mean[d]) || !(pass.var[d] > 0.0) || !std::isfinite(pass.var[d])) {
        throw TrainingDiverged(epoch);
      }
    }
  };

  auto run_epoch = [&](std::size_t epoch, std::size_t phase_epoch, bool pretrain) {
    shuffle();
    const double lr = pretrain ? config.pretrain_learning_rate
                               : config.learning_rate / (1.0 + config.lr_decay * static_cast<double>(phase_epoch - 1));
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      zero(grad);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        const auto x = row(task.train_x, i, features);
        const auto y = row(task.train_y, i, dims);
        forward(model, x, pass);
        check_pass(epoch);
        if (pretrain) {
          for (std::size_t d = 0; d < dims; ++d) {
            d_mean[d] = pass.mean[d] - y[d];
            batch_loss += 0.5 * d_mean[d] * d_mean[d];
          }
          backward(model, x, pass, d_mean, zeros, grad);
        } else {
          const auto loss = loss_total(y, pass.mean, pass.var, config.lambda, config.norm);
          batch_loss += loss.value;
          backward(model, x, pass, loss.d_mean, loss.d_log_var, grad);
        }
      }
      if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch);
      sgd_step(model, grad, lr / static_cast<double>(stop - start));
    }
  };

  for (std::size_t e = 1; e <= config.pretrain_epochs; ++e) run_epoch(e, e, true);

  for (std::size_t e = 1; e <= config.epochs; ++e) {
    const std::size_t epoch = config.pretrain_epochs + e;
    run_epoch(epoch, e, false);

    TraceEntry entry;
    entry.epoch = epoch;
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = row(task.train_y, i, dims);
      forward(model, row(task.train_x, i, features), pass);
      check_pass(epoch);
      entry.l_reg += loss_reg(y, pass.mean, pass.var).value;
      entry.l_calib += loss_calib(y, pass.mean, pass.var, config.norm).value;
    }
    entry.l_reg /= static_cast<double>(n);
    entry.l_calib /= static_cast<double>(n);
    try {
      entry.heldout_l2 = heldout_l2(model, task);
      entry.heldout_ece = heldout_ece(model, task);
    } catch (const DomainError&) {
      throw TrainingDiverged(epoch);
    }
    if (!std::isfinite(entry.l_reg) || !std::isfinite(entry.l_calib) || !std::isfinite(entry.heldout_l2)) {
      throw TrainingDiverged(epoch);
    }
    result.trace.push_back(entry);
  }
  return result;
}

void write_trace(std::ostream& os, const ToyTrainTrace& trace) {
  os << kTraceSchema << "\nepoch,l_reg,l_calib,heldout_l2,heldout_ece\n";
  for (const auto& t : trace) {
    os << t.epoch << ',' << eval::format_real(t.l_reg) << ',' << eval::format_real(t.l_calib) << ','
       << eval::format_real(t.heldout_l2) << ',' << eval::format_real(t.heldout_ece) << '\n';
  }
}

}  // namespace detcal::toytrain
