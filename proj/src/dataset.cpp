#include "dwc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "dwc/error.hpp"

namespace dwc::dataset {

namespace {

constexpr double kSpacingTolerance = 1e-9;

void check_window_args(int l, int f) {
  if (l < 1) throw ArgumentError("window: lookback l must be at least 1");
  if (f < 1) throw ArgumentError("window: horizon f must be at least 1");
}

}  // namespace

std::vector<FeatureVector> build_raw(std::span<const field::FieldSample> samples,
                                     std::span<const field::MeasurementPoint> points) {
  if (samples.empty()) throw ArgumentError("build_raw: empty sample stream");
  std::vector<FeatureVector> raw;
  raw.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0 && std::abs(samples[i].t - samples[i - 1].t - field::kStepSeconds) > kSpacingTolerance)
      throw FormatError("build_raw: samples must be spaced 200 ms apart (break before index " +
                        std::to_string(i) + ")");
    if (samples[i].strengths.size() != points.size())
      throw ArgumentError("build_raw: sample width does not match the point grid");
    const auto [idx, a] = field::argmax_point(samples[i]);
    const auto& p = points[static_cast<std::size_t>(idx)];
    raw.push_back({static_cast<std::int64_t>(i), a, p.x, p.y});
  }
  return raw;
}

ScalerParams fit_scaler(std::span<const FeatureVector> raw) {
  if (raw.empty()) throw ArgumentError("fit_scaler: empty input");
  ScalerParams p;
  p.mins = raw.front().as_array();
  p.maxs = p.mins;
  for (const auto& v : raw) {
    const Features a = v.as_array();
    for (std::size_t d = 0; d < kFeatureWidth; ++d) {
      p.mins[d] = std::min(p.mins[d], a[d]);
      p.maxs[d] = std::max(p.maxs[d], a[d]);
    }
  }
  return p;
}

Features apply_scaler(const ScalerParams& params, const Features& v) {
  Features out{};
  for (std::size_t d = 0; d < kFeatureWidth; ++d) {
    const double range = params.maxs[d] - params.mins[d];
    out[d] = range == 0.0 ? 0.0 : (v[d] - params.mins[d]) / range;
  }
  return out;
}

Features invert_scaler(const ScalerParams& params, const Features& s) {
  Features out{};
  for (std::size_t d = 0; d < kFeatureWidth; ++d) {
    const double range = params.maxs[d] - params.mins[d];
    out[d] = range == 0.0 ? params.mins[d] : params.mins[d] + s[d] * range;
  }
  return out;
}

std::vector<Features> scale_all(const ScalerParams& params, std::span<const FeatureVector> raw) {
  std::vector<Features> out;
  out.reserve(raw.size());
  for (const auto& v : raw) out.push_back(apply_scaler(params, v));
  return out;
}

WindowedDataset window(std::span<const Features> raw_scaled, int l, int f) {
  check_window_args(l, f);
  const auto span_len = static_cast<std::size_t>(l + f - 1);
  if (raw_scaled.size() <= span_len)
    throw ArgumentError("window: need more than l + f - 1 raw vectors, got " +
                        std::to_string(raw_scaled.size()));
  const std::size_t n = raw_scaled.size() - span_len;
  const auto lu = static_cast<std::size_t>(l);
  WindowedDataset ds;
  ds.l = l;
  ds.f = f;
  ds.features = Matrix(n, lu * kFeatureWidth);
  ds.labels = Matrix(n, kLabelWidth);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = ds.features.row(i);
    for (std::size_t k = 0; k < lu; ++k)
      std::copy(raw_scaled[i + k].begin(), raw_scaled[i + k].end(), row.begin() + k * kFeatureWidth);
    const Features& target = raw_scaled[i + span_len];
    ds.labels(i, 0) = target[2];
    ds.labels(i, 1) = target[3];
  }
  return ds;
}

SplitSizes split_sizes(std::size_t n_rows, double val_fraction, std::size_t test_rows) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw ArgumentError("split: val_fraction must lie in [0, 1)");
  if (n_rows <= test_rows)
    throw ArgumentError("split: " + std::to_string(n_rows) + " rows cannot hold " +
                        std::to_string(test_rows) + " test rows plus training data");
  SplitSizes s;
  s.test = test_rows;
  const std::size_t rest = n_rows - test_rows;
  s.val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(rest)));
  s.val = std::min(s.val, rest - 1);
  s.train = rest - s.val;
  return s;
}

WindowedDataset slice_rows(const WindowedDataset& ds, std::size_t begin, std::size_t count) {
  if (begin + count > ds.size()) throw ArgumentError("slice_rows: range out of bounds");
  WindowedDataset out;
  out.l = ds.l;
  out.f = ds.f;
  out.scaler = ds.scaler;
  out.row_offset = ds.row_offset + begin;
  out.features = Matrix(count, ds.features.cols);
  out.labels = Matrix(count, ds.labels.cols);
  std::copy_n(ds.features.data.begin() + static_cast<std::ptrdiff_t>(begin * ds.features.cols),
              count * ds.features.cols, out.features.data.begin());
  std::copy_n(ds.labels.data.begin() + static_cast<std::ptrdiff_t>(begin * ds.labels.cols),
              count * ds.labels.cols, out.labels.data.begin());
  return out;
}

Splits split(const WindowedDataset& ds, double val_fraction, std::size_t test_rows) {
  const SplitSizes s = split_sizes(ds.size(), val_fraction, test_rows);
  return {slice_rows(ds, 0, s.train), slice_rows(ds, s.train, s.val),
          slice_rows(ds, s.train + s.val, s.test)};
}

Splits prepare(std::span<const FeatureVector> raw, const DatasetConfig& config,
               std::optional<std::size_t> pool_records) {
  check_window_args(config.l, config.f);
  const auto span_len = static_cast<std::size_t>(config.l + config.f - 1);
  if (raw.size() <= span_len) throw ArgumentError("prepare: raw stream shorter than one window");
  const std::size_t n_rows = raw.size() - span_len;
  if (n_rows <= config.test_rows)
    throw ArgumentError("prepare: " + std::to_string(n_rows) + " windows cannot hold " +
                        std::to_string(config.test_rows) + " test rows plus training data");
  std::size_t pool = n_rows - config.test_rows;
  if (pool_records) {
    if (*pool_records < static_cast<std::size_t>(config.l) + 1 || *pool_records <= span_len)
      throw ArgumentError("prepare: training record count must be at least l + 1");
    pool = std::min(pool, *pool_records - span_len);
  }
  const SplitSizes s = split_sizes(pool + config.test_rows, config.val_fraction, config.test_rows);

  // Scaler sees exactly the raw steps that training rows read (inputs and labels).
  const ScalerParams scaler = fit_scaler(raw.subspan(0, s.train + span_len));
  WindowedDataset full = window(scale_all(scaler, raw), config.l, config.f);
  full.scaler = scaler;
  return {slice_rows(full, 0, s.train), slice_rows(full, s.train, s.val),
          slice_rows(full, n_rows - config.test_rows, config.test_rows)};
}

void to_json(nlohmann::json& j, const ScalerParams& s) {
  j = nlohmann::json{{"mins", s.mins}, {"maxs", s.maxs}};
}

void from_json(const nlohmann::json& j, ScalerParams& s) {
  try {
    s.mins = j.at("mins").get<Features>();
    s.maxs = j.at("maxs").get<Features>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("scaler: ") + e.what());
  }
  for (std::size_t d = 0; d < kFeatureWidth; ++d)
    if (s.maxs[d] < s.mins[d]) throw FormatError("scaler: max below min");
}

void to_json(nlohmann::json& j, const DatasetConfig& c) {
  j = nlohmann::json{{"l", c.l}, {"f", c.f}, {"val_fraction", c.val_fraction}, {"test_rows", c.test_rows}};
}

void from_json(const nlohmann::json& j, DatasetConfig& c) {
  try {
    c.l = j.value("l", c.l);
    c.f = j.value("f", c.f);
    c.val_fraction = j.value("val_fraction", c.val_fraction);
    c.test_rows = j.value("test_rows", c.test_rows);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("dataset config: ") + e.what());
  }
  if (c.l < 1 || c.f < 1) throw ConfigError("dataset config: l and f must be at least 1");
}

namespace {

nlohmann::json matrix_rows(const Matrix& m) {
  auto out = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    out.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

Matrix rows_matrix(const nlohmann::json& j, std::size_t width) {
  Matrix m(j.size(), width);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (row.size() != width) throw FormatError("windowed dataset: ragged row " + std::to_string(r));
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

nlohmann::json windowed_to_json(const WindowedDataset& ds) {
  nlohmann::json j{{"l", ds.l}, {"f", ds.f}, {"features", matrix_rows(ds.features)},
                   {"labels", matrix_rows(ds.labels)}};
  j["scaler"] = ds.scaler ? nlohmann::json(*ds.scaler) : nlohmann::json(nullptr);
  return j;
}

WindowedDataset windowed_from_json(const nlohmann::json& j) {
  WindowedDataset ds;
  try {
    ds.l = j.at("l").get<int>();
    ds.f = j.at("f").get<int>();
    if (ds.l < 1 || ds.f < 1) throw FormatError("windowed dataset: l and f must be positive");
    ds.features = rows_matrix(j.at("features"), static_cast<std::size_t>(ds.l) * kFeatureWidth);
    ds.labels = rows_matrix(j.at("labels"), kLabelWidth);
    if (!j.at("scaler").is_null()) ds.scaler = j.at("scaler").get<ScalerParams>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("windowed dataset: ") + e.what());
  }
  if (ds.features.rows != ds.labels.rows) throw FormatError("windowed dataset: row count mismatch");
  return ds;
}

}  // namespace dwc::dataset
