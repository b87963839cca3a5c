#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dwc/checkpoint.hpp"
#include "dwc/controller.hpp"
#include "dwc/dataset.hpp"
#include "dwc/train.hpp"

namespace dwc::eval {

inline constexpr int kSchemaVersion = 1;

struct EfficiencyReport {
  controller::PolicyKind policy;
  std::size_t n_predictions = 0;
  double avg_strength = 0.0;
  std::vector<double> per_step;
  double gain_vs_base_percent = 0.0;
  std::int64_t first_step = 0;
  std::vector<controller::HarvestRecord> trace;
};

/// 100 * (avg - base_avg) / base_avg; 0 when the base average is 0.
double gain_percent(double avg, double base_avg);

/// Runs n consecutive steps starting at `start` and averages the harvested strength.
EfficiencyReport evaluate_efficiency(controller::World& world, const controller::PolicyKind& policy,
                                     std::int64_t start, std::size_t n);

/// Fills gain_vs_base_percent of every report from the first Base report in the set.
void attach_gains(std::vector<EfficiencyReport>& reports, std::optional<double> base_avg = std::nullopt);

struct SizeRow {
  std::size_t size = 0;
  double avg_strength = 0.0;
  EfficiencyReport report;
};

/// One fresh model per training-record count; all evaluated on the same test segment.
std::vector<SizeRow> sweep_dataset_size(const controller::World& world, std::span<const std::size_t> sizes,
                                        const dataset::DatasetConfig& data_cfg, const train::TrainConfig& train_cfg,
                                        std::int64_t start, std::size_t n);

struct IntervalRow {
  double percent = 0.0;
  double avg_strength = 0.0;
  EfficiencyReport report;
};

std::vector<IntervalRow> sweep_update_interval(controller::World& world, std::span<const double> percentages,
                                               std::int64_t start, std::size_t n);

struct DelayReport {
  std::vector<double> samples_ms;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  std::vector<std::pair<double, double>> cdf;  // (delay_ms, cumulative fraction)
};

/// Builds mean, nearest-rank p95 and the empirical CDF from raw delays.
DelayReport summarize_delays(std::vector<double> samples_ms);

/// Wall-clock cost of scaling + forward + de-scaling per prediction, cycling over the
/// history windows available in `raw`. The first `warmup` predictions are discarded.
DelayReport measure_delay(const checkpoint::Checkpoint& model, std::span<const dataset::FeatureVector> raw,
                          std::size_t n, std::size_t warmup = 10);

/// Trains on `pool_records` (or all non-test records) and packages a checkpoint.
checkpoint::Checkpoint train_model(std::span<const dataset::FeatureVector> raw, const dataset::DatasetConfig& data_cfg,
                                   const train::TrainConfig& train_cfg, double coil_radius,
                                   std::optional<std::size_t> pool_records = std::nullopt);

std::string efficiency_csv(std::span<const EfficiencyReport> reports);
std::string summary_csv(std::span<const EfficiencyReport> reports);
std::string delay_csv(const DelayReport& report);
std::string size_sweep_csv(std::span<const SizeRow> rows);
std::string interval_sweep_csv(std::span<const IntervalRow> rows);

nlohmann::json report_json(std::span<const EfficiencyReport> reports, std::span<const SizeRow> sizes,
                           std::span<const IntervalRow> intervals, const std::optional<DelayReport>& delay);

}  // namespace dwc::eval
