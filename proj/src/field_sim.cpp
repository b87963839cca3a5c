#include "dwc/field_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "dwc/error.hpp"
#include "dwc/rng.hpp"

namespace dwc::field {

namespace {

constexpr std::uint64_t kPointStream = 1;
constexpr std::uint64_t kSourceStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

std::pair<double, double> uniform_on_disk(std::mt19937_64& eng, double radius) {
  const double r = radius * std::sqrt(rng::uniform01(eng));
  const double theta = 2.0 * std::numbers::pi * rng::uniform01(eng);
  return {r * std::cos(theta), r * std::sin(theta)};
}

// Noise is keyed on the time in whole milliseconds so that the stream depends
// only on (seed, point, t) and not on evaluation order.
double noise_at(const FieldConfig& config, int point_index, double t) {
  if (config.noise_std == 0.0) return 0.0;
  const auto ms = static_cast<std::uint64_t>(std::llround(t * 1000.0));
  const std::uint64_t key =
      rng::derive(config.rng_seed, kNoiseStream ^ (static_cast<std::uint64_t>(point_index) << 8), ms);
  return config.noise_std * rng::normal_from_key(key);
}

}  // namespace

void FieldConfig::validate() const {
  if (!(coil_radius > 0.0)) throw ConfigError("coil_radius must be positive");
  if (coil_depth < 0.0) throw ConfigError("coil_depth must be non-negative");
  if (n_points < 1) throw ConfigError("n_points must be at least 1");
  if (n_sources < 0) throw ConfigError("n_sources must be non-negative");
  const auto n = static_cast<std::size_t>(n_sources);
  if (source_amplitudes.size() != n || source_frequencies.size() != n || source_phases.size() != n)
    throw ConfigError("source lists must each have n_sources entries");
  for (double a : source_amplitudes)
    if (!(a >= 0.0)) throw ConfigError("source amplitudes must be non-negative");
  for (double f : source_frequencies)
    if (!std::isfinite(f)) throw ConfigError("source frequencies must be finite");
  if (!(source_kernel_width > 0.0)) throw ConfigError("source_kernel_width must be positive");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
}

double FieldConfig::depth_attenuation() const { return std::exp(-coil_depth / source_kernel_width); }

std::vector<MeasurementPoint> generate_points(const FieldConfig& config) {
  config.validate();
  std::mt19937_64 eng(rng::derive(config.rng_seed, kPointStream));
  std::vector<MeasurementPoint> points;
  points.reserve(static_cast<std::size_t>(config.n_points));
  for (int i = 0; i < config.n_points; ++i) {
    auto [x, y] = uniform_on_disk(eng, config.coil_radius);
    points.push_back({i, x, y});
  }
  return points;
}

std::vector<Source> sources(const FieldConfig& config) {
  config.validate();
  std::mt19937_64 eng(rng::derive(config.rng_seed, kSourceStream));
  std::vector<Source> out;
  const double atten = config.depth_attenuation();
  for (int k = 0; k < config.n_sources; ++k) {
    auto [x, y] = uniform_on_disk(eng, config.coil_radius);
    const auto ks = static_cast<std::size_t>(k);
    out.push_back({x, y, config.source_amplitudes[ks] * atten, config.source_frequencies[ks],
                   config.source_phases[ks]});
  }
  return out;
}

double field_strength(const FieldConfig& config, std::span<const Source> srcs,
                      const MeasurementPoint& point, double t) {
  if (!(t >= 0.0)) throw ArgumentError("field_strength: t must be non-negative");
  const double two_w2 = 2.0 * config.source_kernel_width * config.source_kernel_width;
  double sum = 0.0;
  for (const Source& s : srcs) {
    const double dx = point.x - s.x;
    const double dy = point.y - s.y;
    const double temporal = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * s.frequency * t + s.phase);
    sum += s.amplitude * temporal * std::exp(-(dx * dx + dy * dy) / two_w2);
  }
  sum += noise_at(config, point.index, t);
  return std::max(0.0, sum);
}

double field_strength(const FieldConfig& config, const MeasurementPoint& point, double t) {
  const auto srcs = sources(config);
  return field_strength(config, srcs, point, t);
}

FieldSample sample_all(const FieldConfig& config, std::span<const MeasurementPoint> points, double t) {
  if (points.size() != static_cast<std::size_t>(config.n_points))
    throw ArgumentError("sample_all: point count does not match config.n_points");
  const auto srcs = sources(config);
  FieldSample sample{t, std::vector<double>(points.size())};
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static) if (n >= 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) sample.strengths[i] = field_strength(config, srcs, points[i], t);
  return sample;
}

std::vector<FieldSample> sample_stream(const FieldConfig& config,
                                       std::span<const MeasurementPoint> points,
                                       std::int64_t first_step, std::int64_t n_steps) {
  if (first_step < 0 || n_steps < 0) throw ArgumentError("sample_stream: negative step range");
  if (points.size() != static_cast<std::size_t>(config.n_points))
    throw ArgumentError("sample_stream: point count does not match config.n_points");
  const auto srcs = sources(config);
  std::vector<FieldSample> out(static_cast<std::size_t>(n_steps));
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < n_steps; ++k) {
    const double t = static_cast<double>(first_step + k) * kStepSeconds;
    FieldSample& s = out[static_cast<std::size_t>(k)];
    s.t = t;
    s.strengths.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) s.strengths[i] = field_strength(config, srcs, points[i], t);
  }
  return out;
}

std::pair<int, double> argmax_point(const FieldSample& sample) {
  if (sample.strengths.empty()) throw ArgumentError("argmax_point: empty sample");
  std::size_t best = 0;
  for (std::size_t i = 1; i < sample.strengths.size(); ++i)
    if (sample.strengths[i] > sample.strengths[best]) best = i;
  return {static_cast<int>(best), sample.strengths[best]};
}

std::pair<double, double> centroid(std::span<const MeasurementPoint> points) {
  if (points.empty()) throw ArgumentError("centroid: no points");
  double sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    sx += p.x;
    sy += p.y;
  }
  const auto n = static_cast<double>(points.size());
  return {sx / n, sy / n};
}

void to_json(nlohmann::json& j, const FieldConfig& c) {
  j = nlohmann::json{{"coil_radius", c.coil_radius},
                     {"coil_depth", c.coil_depth},
                     {"n_points", c.n_points},
                     {"n_sources", c.n_sources},
                     {"source_amplitudes", c.source_amplitudes},
                     {"source_frequencies", c.source_frequencies},
                     {"source_phases", c.source_phases},
                     {"source_kernel_width", c.source_kernel_width},
                     {"noise_std", c.noise_std},
                     {"rng_seed", c.rng_seed}};
}

// Missing keys keep their defaults; present keys must have the right type.
void from_json(const nlohmann::json& j, FieldConfig& c) {
  if (!j.is_object()) throw ConfigError("field config must be a JSON object");
  try {
    c.coil_radius = j.value("coil_radius", c.coil_radius);
    c.coil_depth = j.value("coil_depth", c.coil_depth);
    c.n_points = j.value("n_points", c.n_points);
    c.n_sources = j.value("n_sources", c.n_sources);
    c.source_amplitudes = j.value("source_amplitudes", c.source_amplitudes);
    c.source_frequencies = j.value("source_frequencies", c.source_frequencies);
    c.source_phases = j.value("source_phases", c.source_phases);
    c.source_kernel_width = j.value("source_kernel_width", c.source_kernel_width);
    c.noise_std = j.value("noise_std", c.noise_std);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field config: ") + e.what());
  }
}

}  // namespace dwc::field
