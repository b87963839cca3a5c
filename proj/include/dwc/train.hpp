#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dwc/dataset.hpp"
#include "dwc/lstm.hpp"

namespace dwc::train {

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 16;
  int max_epochs = 1000;
  int hidden_units = 120;
  std::uint64_t rng_seed = 42;
  Optimizer optimizer = Optimizer::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // global gradient norm; <= 0 disables clipping
  int patience = 0;        // epochs without validation improvement before stopping; 0 = off
  bool parallel = true;    // split each batch across threads (results do not depend on it)

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  /// Validation loss of the initial parameters, before any update.
  double initial_val_loss = 0.0;
  bool operator==(const TrainHistory&) const = default;
};

/// Hit-rate surrogate for accuracy: a prediction counts when its de-scaled point
/// lies within `threshold` meters of the de-scaled ground truth.
struct HitMetric {
  dataset::ScalerParams scaler;
  double threshold = 0.013;
};

double hit_rate(const Matrix& predictions, const Matrix& labels, const HitMetric& metric);

/// Predictions for every row of a windowed block (rows evaluated in parallel).
Matrix predict_rows(const lstm::NetworkParams& params, const Matrix& features);

struct TrainResult {
  lstm::NetworkParams params;  // parameters at the best validation epoch
  TrainHistory history;
};

/// Mini-batch training on `train_set`, model selection on `val_set` (falls back to
/// the training loss when the validation block is empty).
TrainResult train(const dataset::WindowedDataset& train_set, const dataset::WindowedDataset& val_set,
                  const TrainConfig& cfg, const std::optional<HitMetric>& metric = std::nullopt);

struct Grid {
  std::vector<int> hidden_units;
  std::vector<int> batch_sizes;
  std::vector<double> learning_rates;

  std::size_t size() const { return hidden_units.size() * batch_sizes.size() * learning_rates.size(); }
  /// Hidden units 40..180 step 20, batch sizes {16..256}, learning rates 1e-2..1e-6.
  static Grid standard();
};

struct GridRow {
  int hidden_units = 0;
  int batch_size = 0;
  double learning_rate = 0.0;
  double val_mse = 0.0;  // NaN when the cell diverged
  int epochs_run = 0;
  bool diverged = false;
  std::string error;
};

struct GridResult {
  std::vector<GridRow> rows;
  std::size_t best = 0;
  TrainConfig best_config;
};

/// Trains one model per grid cell with `base` for everything the grid does not set
/// (max_epochs carries the reduced budget). Cells run in parallel with per-cell
/// derived seeds; a diverging cell is recorded, not fatal.
GridResult grid_search(const dataset::WindowedDataset& train_set, const dataset::WindowedDataset& val_set,
                       const Grid& grid, const TrainConfig& base);

std::string grid_csv(const GridResult& result);
std::string history_csv(const TrainHistory& history);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const TrainHistory& h);
void from_json(const nlohmann::json& j, TrainHistory& h);
void to_json(nlohmann::json& j, const Grid& g);
void from_json(const nlohmann::json& j, Grid& g);

}  // namespace dwc::train
