#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "detcal/core.hpp"

namespace detcal::toytrain {

// ---------------------------------------------------------------------------
// Losses. Gradients are taken with respect to the predicted means and the
// log-variances s_d = log(var_d), which is what the variance head outputs.

struct LossValue {
  double value = 0.0;
  std::vector<double> d_mean;
  std::vector<double> d_log_var;
};

/// Attenuated regression loss: 1/2 sum (y-u)^2/var + 1/2 sum log var.
LossValue loss_reg(std::span<const double> y, std::span<const double> u, std::span<const double> var);

enum class CalibNorm { l1, l2 };

std::string_view calib_norm_name(CalibNorm n);
std::optional<CalibNorm> parse_calib_norm(std::string_view name);

/// ||var - (y-u)*(y-u)|| with the L1 norm (sum of absolute values) or the
/// Euclidean norm. Subgradient zero at kinks.
LossValue loss_calib(std::span<const double> y, std::span<const double> u, std::span<const double> var,
                     CalibNorm norm = CalibNorm::l1);

/// loss_reg + lambda * loss_calib.
LossValue loss_total(std::span<const double> y, std::span<const double> u, std::span<const double> var,
                     double lambda, CalibNorm norm = CalibNorm::l1);

// ---------------------------------------------------------------------------
// Model

/// One tanh hidden layer shared by a mean head and a log-variance head.
struct ToyModel {
  std::size_t features = 4;
  std::size_t hidden = 32;
  std::size_t outputs = 1;

  std::vector<double> w_hidden;   // hidden x features, row-major
  std::vector<double> b_hidden;   // hidden
  std::vector<double> w_mean;     // outputs x hidden
  std::vector<double> b_mean;     // outputs
  std::vector<double> w_log_var;  // outputs x hidden
  std::vector<double> b_log_var;  // outputs

  static ToyModel zeros(std::size_t features, std::size_t hidden, std::size_t outputs);
  /// Gaussian hidden and mean-head weights scaled by 1/sqrt(fan-in); the
  /// variance head starts at zero so every predicted variance starts at 1.
  static ToyModel initialized(std::size_t features, std::size_t hidden, std::size_t outputs, std::uint64_t seed);

  std::size_t parameter_count() const;
};

/// One marginal per output. Throws DomainError on dimension mismatch.
std::vector<GaussianMarginal> predict(const ToyModel& model, std::span<const double> features);

// ---------------------------------------------------------------------------
// Synthetic heteroscedastic task

struct TaskConfig {
  std::size_t n_train = 200;
  std::size_t n_heldout = 2000;
  std::size_t features = 4;
  std::size_t outputs = 1;
  std::uint64_t seed = 0;
  double noise_floor = 0.1;  // true sd(x) = noise_floor + noise_slope * |x_1|
  double noise_slope = 0.5;

  void validate() const;
};

/// Features uniform on [-1,1]^F, means from a fixed random linear map,
/// Gaussian noise with the heteroscedastic sd above.
struct ToyTask {
  TaskConfig config;
  std::vector<double> mean_map;  // outputs x features
  std::vector<double> train_x, train_y;
  std::vector<double> heldout_x, heldout_y;

  std::size_t n_train() const { return config.n_train; }
  std::size_t n_heldout() const { return config.n_heldout; }
  double true_variance(std::span<const double> x) const;
};

ToyTask make_task(const TaskConfig& config);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double lambda = 0.1;
  CalibNorm norm = CalibNorm::l1;
  std::size_t pretrain_epochs = 1;  // squared-error phase on the mean head
  std::size_t epochs = 300;         // attenuated-loss phase
  double pretrain_learning_rate = 0.01;
  double learning_rate = 0.003;
  double lr_decay = 0.0;  // phase-two step at epoch e is learning_rate / (1 + lr_decay * (e - 1))
  std::size_t batch_size = 32;
  std::size_t hidden = 32;
  std::uint64_t seed = 0;

  /// Throws UsageError naming the offending field.
  void validate() const;
};

struct TraceEntry {
  std::size_t epoch = 0;
  double l_reg = 0.0;    // mean over the training split
  double l_calib = 0.0;  // mean over the training split
  double heldout_l2 = 0.0;
  double heldout_ece = 0.0;
};

using ToyTrainTrace = std::vector<TraceEntry>;

struct TrainResult {
  ToyModel model;
  ToyTrainTrace trace;
};

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(std::size_t epoch);
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Pretrains the mean head with squared error, then trains everything on
/// loss_total. One trace entry per epoch of the second phase, numbered from
/// pretrain_epochs + 1. Bit-reproducible for a given seed.
TrainResult train_toy(const TrainConfig& config, const ToyTask& task);

/// Held-out metrics of a model: mean squared error and ECE averaged over outputs.
double heldout_l2(const ToyModel& model, const ToyTask& task);
double heldout_ece(const ToyModel& model, const ToyTask& task);

/// Mean over held-out inputs and outputs of |var_pred - var_true| / var_true.
double variance_relative_error(const ToyModel& model, const ToyTask& task);

inline constexpr std::string_view kTraceSchema = "# detcal.trace v1";
void write_trace(std::ostream& os, const ToyTrainTrace& trace);

}  // namespace detcal::toytrain
