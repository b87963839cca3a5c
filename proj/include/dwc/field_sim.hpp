#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace dwc::field {

/// Step between consecutive field measurements, in seconds.
inline constexpr double kStepSeconds = 0.2;

/// Parametric time-varying field: a sum of latent Gaussian-kernel sources whose
/// amplitudes oscillate sinusoidally, plus per-(point, time) Gaussian noise.
struct FieldConfig {
  double coil_radius = 0.13;  // m
  double coil_depth = 0.03;   // m
  int n_points = 20;
  int n_sources = 3;
  std::vector<double> source_amplitudes{100.0, 80.0, 60.0};  // A/m
  std::vector<double> source_frequencies{0.05, 0.13, 0.31};  // Hz
  std::vector<double> source_phases{0.0, 2.1, 4.2};          // rad
  double source_kernel_width = 0.05;                          // m
  double noise_std = 2.0;                                     // A/m
  std::uint64_t rng_seed = 42;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  /// exp(-depth / kernel_width); the only effect coil_depth has on the field.
  double depth_attenuation() const;

  bool operator==(const FieldConfig&) const = default;
};

struct MeasurementPoint {
  int index = 0;
  double x = 0.0;
  double y = 0.0;
  bool operator==(const MeasurementPoint&) const = default;
};

struct FieldSample {
  double t = 0.0;
  std::vector<double> strengths;
  bool operator==(const FieldSample&) const = default;
};

struct Source {
  double x;
  double y;
  double amplitude;
  double frequency;
  double phase;
};

/// Uniform points on the coil disk, drawn from the config's seed.
std::vector<MeasurementPoint> generate_points(const FieldConfig& config);

/// Latent source centers (seeded, uniform on the disk) with their temporal parameters.
std::vector<Source> sources(const FieldConfig& config);

/// Clipped closed-form strength at a point and time; deterministic per (config, point, t).
double field_strength(const FieldConfig& config, const MeasurementPoint& point, double t);

/// Same as field_strength with the source list precomputed.
double field_strength(const FieldConfig& config, std::span<const Source> srcs,
                      const MeasurementPoint& point, double t);

/// Evaluates every point at time t. Points are evaluated in parallel.
FieldSample sample_all(const FieldConfig& config, std::span<const MeasurementPoint> points, double t);

/// Samples at t = k * kStepSeconds for k in [first_step, first_step + n_steps).
std::vector<FieldSample> sample_stream(const FieldConfig& config,
                                       std::span<const MeasurementPoint> points,
                                       std::int64_t first_step, std::int64_t n_steps);

/// Index and value of the strongest point; ties go to the smallest index.
std::pair<int, double> argmax_point(const FieldSample& sample);

/// Geometric centroid of the measurement grid (the lane-center anchor).
std::pair<double, double> centroid(std::span<const MeasurementPoint> points);

void to_json(nlohmann::json& j, const FieldConfig& c);
void from_json(const nlohmann::json& j, FieldConfig& c);

}  // namespace dwc::field
