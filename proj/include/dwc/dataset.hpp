#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dwc/field_sim.hpp"
#include "dwc/matrix.hpp"

namespace dwc::dataset {

inline constexpr std::size_t kFeatureWidth = 4;
inline constexpr std::size_t kLabelWidth = 2;

using Features = std::array<double, kFeatureWidth>;

/// Raw dataset element: time step, strength at the strongest point, and that point's coordinates.
struct FeatureVector {
  std::int64_t t_step = 0;
  double a = 0.0;
  double p_x = 0.0;
  double p_y = 0.0;

  Features as_array() const { return {static_cast<double>(t_step), a, p_x, p_y}; }
  bool operator==(const FeatureVector&) const = default;
};

struct ScalerParams {
  Features mins{};
  Features maxs{};
  bool operator==(const ScalerParams&) const = default;
};

struct WindowedDataset {
  Matrix features;  // N x (l * 4)
  Matrix labels;    // N x 2
  int l = 10;
  int f = 1;
  /// Row index of this block's first row within the full windowed dataset.
  std::size_t row_offset = 0;
  std::optional<ScalerParams> scaler;

  std::size_t size() const { return features.rows; }
  /// Raw-stream index of the label for row i (relative to the raw stream start).
  std::size_t label_step(std::size_t i) const { return row_offset + i + static_cast<std::size_t>(l + f - 1); }
};

struct Splits {
  WindowedDataset train;
  WindowedDataset val;
  WindowedDataset test;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// One feature vector per sample from the argmax point. Samples must be 200 ms apart.
std::vector<FeatureVector> build_raw(std::span<const field::FieldSample> samples,
                                     std::span<const field::MeasurementPoint> points);

ScalerParams fit_scaler(std::span<const FeatureVector> raw);
Features apply_scaler(const ScalerParams& params, const Features& v);
inline Features apply_scaler(const ScalerParams& params, const FeatureVector& v) {
  return apply_scaler(params, v.as_array());
}
Features invert_scaler(const ScalerParams& params, const Features& s);

std::vector<Features> scale_all(const ScalerParams& params, std::span<const FeatureVector> raw);

/// Sliding window of length l over scaled vectors; the label is (p_x, p_y) f steps past the window.
WindowedDataset window(std::span<const Features> raw_scaled, int l = 10, int f = 1);

/// Chronological partition: test is the last test_rows rows, validation the last
/// round(val_fraction * remainder) rows before it, train the rest.
SplitSizes split_sizes(std::size_t n_rows, double val_fraction, std::size_t test_rows);
Splits split(const WindowedDataset& ds, double val_fraction = 0.10, std::size_t test_rows = 600);

/// Copies rows [begin, begin + count) into a new block, preserving row offsets.
WindowedDataset slice_rows(const WindowedDataset& ds, std::size_t begin, std::size_t count);

struct DatasetConfig {
  int l = 10;
  int f = 1;
  double val_fraction = 0.10;
  std::size_t test_rows = 600;
  bool operator==(const DatasetConfig&) const = default;
};

/// Full preprocessing: fit the scaler on the raw range covered by the training
/// rows, scale, window, and split. When pool_records is set, the training and
/// validation rows are restricted to windows whose label falls before that raw
/// index; the test block is always the last test_rows windows of the full stream.
Splits prepare(std::span<const FeatureVector> raw, const DatasetConfig& config,
               std::optional<std::size_t> pool_records = std::nullopt);

void to_json(nlohmann::json& j, const ScalerParams& s);
void from_json(const nlohmann::json& j, ScalerParams& s);
void to_json(nlohmann::json& j, const DatasetConfig& c);
void from_json(const nlohmann::json& j, DatasetConfig& c);

nlohmann::json windowed_to_json(const WindowedDataset& ds);
WindowedDataset windowed_from_json(const nlohmann::json& j);

}  // namespace dwc::dataset
