#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "dwc/dataset.hpp"
#include "dwc/error.hpp"

using namespace dwc;
using namespace dwc::dataset;

namespace {

std::vector<FeatureVector> random_raw(std::size_t n, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> a(0.0, 80.0), p(-0.13, 0.13);
  std::vector<FeatureVector> raw;
  for (std::size_t i = 0; i < n; ++i) raw.push_back({static_cast<std::int64_t>(i), a(eng), p(eng), p(eng)});
  return raw;
}

std::vector<field::FieldSample> stream(std::size_t n, std::size_t width) {
  std::vector<field::FieldSample> s;
  for (std::size_t k = 0; k < n; ++k) s.push_back({0.2 * static_cast<double>(k), std::vector<double>(width, 0.0)});
  return s;
}

}  // namespace

TEST(BuildRaw, OneVectorPerSample) {
  field::FieldConfig cfg;
  const auto pts = field::generate_points(cfg);
  const auto samples = field::sample_stream(cfg, pts, 0, 6000);
  const auto raw = build_raw(samples, pts);
  ASSERT_EQ(raw.size(), 6000u);
  for (std::size_t i = 0; i < raw.size(); i += 997) {
    const auto [idx, a] = field::argmax_point(samples[i]);
    EXPECT_EQ(raw[i], (FeatureVector{static_cast<std::int64_t>(i), a, pts[idx].x, pts[idx].y}));
  }
}

TEST(BuildRaw, AllZeroSampleTakesPointZero) {
  const std::vector<field::MeasurementPoint> pts{{0, 0.01, 0.02}, {1, -0.03, 0.04}};
  const auto raw = build_raw(stream(1, 2), pts);
  ASSERT_EQ(raw.size(), 1u);
  EXPECT_EQ(raw[0], (FeatureVector{0, 0.0, 0.01, 0.02}));
}

TEST(BuildRaw, GapIsFormatError) {
  const std::vector<field::MeasurementPoint> pts{{0, 0.0, 0.0}};
  auto s = stream(4, 1);
  s[2].t = 0.6;  // 400 ms after the previous sample
  s[3].t = 0.8;
  EXPECT_THROW(build_raw(s, pts), FormatError);
  EXPECT_THROW(build_raw(std::vector<field::FieldSample>{}, pts), ArgumentError);
}

TEST(FitScaler, TimeStepRange) {
  std::mt19937_64 eng(1);
  const auto raw = random_raw(6000, eng);
  const auto s = fit_scaler(raw);
  EXPECT_EQ(s.mins[0], 0.0);
  EXPECT_EQ(s.maxs[0], 5999.0);
}

TEST(FitScaler, ConstantDimension) {
  std::vector<FeatureVector> raw{{0, 3.0, 0.1, 0.2}, {1, 3.0, -0.1, 0.0}};
  const auto s = fit_scaler(raw);
  EXPECT_EQ(s.mins[1], 3.0);
  EXPECT_EQ(s.maxs[1], 3.0);
  EXPECT_THROW(fit_scaler(std::vector<FeatureVector>{}), ArgumentError);
}

TEST(FitScaler, MatchesColumnScan) {
  std::mt19937_64 eng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto raw = random_raw(1 + trial * 13, eng);
    const auto s = fit_scaler(raw);
    for (std::size_t d = 0; d < 4; ++d) {
      double lo = 1e300, hi = -1e300;
      for (const auto& v : raw) {
        const double x = d == 0 ? static_cast<double>(v.t_step) : d == 1 ? v.a : d == 2 ? v.p_x : v.p_y;
        lo = x < lo ? x : lo;
        hi = x > hi ? x : hi;
      }
      EXPECT_EQ(s.mins[d], lo);
      EXPECT_EQ(s.maxs[d], hi);
    }
  }
}

TEST(Scaler, EndpointsAndRoundTripProperty) {
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto raw = random_raw(2 + static_cast<std::size_t>(trial), eng);
    const auto s = fit_scaler(raw);
    EXPECT_EQ(apply_scaler(s, s.mins), (Features{0, 0, 0, 0}));
    EXPECT_EQ(apply_scaler(s, s.maxs), (Features{1, 1, 1, 1}));
    for (const auto& v : raw) {
      const auto back = invert_scaler(s, apply_scaler(s, v));
      const auto orig = v.as_array();
      for (std::size_t d = 0; d < 4; ++d) EXPECT_NEAR(back[d], orig[d], 1e-12 * std::max(1.0, std::abs(orig[d])));
    }
    // Out-of-range values are not clipped and still invert.
    const Features wide{u(eng) * 1e4, u(eng) * 100, u(eng), u(eng)};
    const auto back = invert_scaler(s, apply_scaler(s, wide));
    for (std::size_t d = 0; d < 4; ++d) EXPECT_NEAR(back[d], wide[d], 1e-12 * std::max(1.0, std::abs(wide[d])));
  }
}

TEST(Scaler, DegenerateDimension) {
  ScalerParams s{{0, 3, 0, 0}, {10, 3, 1, 1}};
  EXPECT_EQ(apply_scaler(s, Features{5, 3, 0.5, 0.5})[1], 0.0);
  EXPECT_EQ(apply_scaler(s, Features{5, 7, 0.5, 0.5})[1], 0.0);
  EXPECT_EQ(invert_scaler(s, Features{0.5, 0.9, 0.5, 0.5})[1], 3.0);
}

TEST(Scaler, InvertExamples) {
  ScalerParams s{{2, 2, 2, 2}, {4, 4, 4, 4}};
  EXPECT_EQ(invert_scaler(s, Features{0, 0, 0, 0}), s.mins);
  EXPECT_EQ(invert_scaler(s, Features{1, 1, 1, 1}), s.maxs);
  EXPECT_EQ(invert_scaler(s, Features{0.5, 0.5, 0.5, 0.5}), (Features{3, 3, 3, 3}));
}

TEST(Window, ShapeLaw) {
  std::mt19937_64 eng(4);
  for (std::size_t n : {11u, 12u, 500u, 6000u}) {
    const auto raw = random_raw(n, eng);
    const auto ds = window(scale_all(fit_scaler(raw), raw), 10, 1);
    EXPECT_EQ(ds.features.rows, n - 10);
    EXPECT_EQ(ds.labels.rows, n - 10);
    EXPECT_EQ(ds.features.cols, 40u);
    EXPECT_EQ(ds.labels.cols, 2u);
  }
  const auto short_raw = random_raw(10, eng);
  EXPECT_THROW(window(scale_all(fit_scaler(short_raw), short_raw), 10, 1), ArgumentError);
}

TEST(Window, AlignmentByReconstruction) {
  std::mt19937_64 eng(5);
  const auto raw = random_raw(60, eng);
  const auto scaled = scale_all(fit_scaler(raw), raw);
  const auto ds = window(scaled, 10, 1);
  EXPECT_EQ(ds.labels(0, 0), scaled[10][2]);
  EXPECT_EQ(ds.labels(0, 1), scaled[10][3]);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t k = 0; k < 10; ++k)
      for (std::size_t d = 0; d < 4; ++d) ASSERT_EQ(ds.features(i, k * 4 + d), scaled[i + k][d]);
    EXPECT_EQ(ds.labels(i, 0), scaled[i + 10][2]);
    EXPECT_EQ(ds.labels(i, 1), scaled[i + 10][3]);
    EXPECT_EQ(ds.label_step(i), i + 10);
  }
}

TEST(Split, DefaultSizes) {
  const auto s = split_sizes(5990, 0.10, 600);
  EXPECT_EQ(s.train, 4851u);
  EXPECT_EQ(s.val, 539u);
  EXPECT_EQ(s.test, 600u);
  const auto b = split_sizes(601, 0.10, 600);
  EXPECT_EQ(b.train, 1u);
  EXPECT_EQ(b.val, 0u);
  EXPECT_EQ(b.test, 600u);
  EXPECT_THROW(split_sizes(600, 0.10, 600), ArgumentError);
}

TEST(Split, PartitionProperty) {
  std::mt19937_64 eng(6);
  const auto raw = random_raw(900, eng);
  const auto ds = window(scale_all(fit_scaler(raw), raw), 10, 1);
  const auto sp = split(ds, 0.1, 300);
  ASSERT_EQ(sp.train.size() + sp.val.size() + sp.test.size(), ds.size());
  Matrix joined(0, ds.features.cols);
  for (const auto* part : {&sp.train, &sp.val, &sp.test})
    joined.data.insert(joined.data.end(), part->features.data.begin(), part->features.data.end());
  EXPECT_EQ(joined.data, ds.features.data);
  EXPECT_EQ(sp.val.row_offset, sp.train.size());
  EXPECT_EQ(sp.test.row_offset, sp.train.size() + sp.val.size());
}

TEST(Prepare, ScalerSeesTrainingRangeOnlyAndNoLeakage) {
  std::mt19937_64 eng(7);
  auto raw = random_raw(2000, eng);
  raw[1900].a = 1e6;  // an outlier inside the test block must not affect the scaler
  const DatasetConfig cfg;
  const auto sp = prepare(raw, cfg);
  ASSERT_TRUE(sp.train.scaler.has_value());
  const std::size_t fit_end = sp.train.size() + 10;  // inputs and labels of the training rows
  const auto expected = fit_scaler(std::span(raw).subspan(0, fit_end));
  EXPECT_EQ(*sp.train.scaler, expected);
  EXPECT_LT(sp.train.scaler->maxs[1], 1e6);
  EXPECT_LT(sp.train.label_step(sp.train.size() - 1), sp.val.label_step(0));
  EXPECT_LT(sp.val.label_step(sp.val.size() - 1), sp.test.label_step(0));
  EXPECT_EQ(sp.test.label_step(sp.test.size() - 1), raw.size() - 1);
  EXPECT_EQ(sp.test.size(), 600u);
}

TEST(Prepare, PoolRestrictsTrainingButKeepsTest) {
  std::mt19937_64 eng(8);
  const auto raw = random_raw(6000, eng);
  const auto full = prepare(raw, DatasetConfig{});
  const auto small = prepare(raw, DatasetConfig{}, 500);
  EXPECT_EQ(small.train.size() + small.val.size(), 490u);
  EXPECT_EQ(small.test.row_offset, full.test.row_offset);
  EXPECT_LT(small.val.label_step(small.val.size() - 1), 500u);
  const auto all = prepare(raw, DatasetConfig{}, 6000);
  EXPECT_EQ(all.train.size(), full.train.size());
  EXPECT_EQ(all.train.features, full.train.features);
  EXPECT_THROW(prepare(raw, DatasetConfig{}, 10), ArgumentError);
}

TEST(WindowedJson, RoundTrip) {
  std::mt19937_64 eng(9);
  const auto raw = random_raw(30, eng);
  auto ds = window(scale_all(fit_scaler(raw), raw), 10, 1);
  ds.scaler = fit_scaler(raw);
  const auto j = windowed_to_json(ds);
  const auto back = windowed_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.scaler, ds.scaler);
  auto bad = j;
  bad["labels"][0] = {1.0};
  EXPECT_THROW(windowed_from_json(bad), FormatError);
}
