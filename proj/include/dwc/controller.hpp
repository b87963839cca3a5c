#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dwc/checkpoint.hpp"
#include "dwc/dataset.hpp"
#include "dwc/field_sim.hpp"

namespace dwc::controller {

enum class MessageKind { SpeedReport, PositionCommand };

struct V2xMessage {
  MessageKind kind = MessageKind::SpeedReport;
  int ev_id = 0;
  double timestamp = 0.0;  // send time, s
  double speed = 0.0;      // SpeedReport
  double target_x = 0.0;   // PositionCommand, absolute coordinates in m
  double target_y = 0.0;
  std::int64_t valid_at_step = 0;
  std::int64_t history_end_step = -1;  // last raw step the prediction read
};

enum class PolicyType { Base, Lstm, Oracle };

struct PolicyKind {
  PolicyType type = PolicyType::Base;
  double update_interval_percent = 100.0;  // Lstm only

  void validate() const;
  std::string name() const;
  static PolicyKind base() { return {PolicyType::Base, 100.0}; }
  static PolicyKind lstm(double percent = 100.0) { return {PolicyType::Lstm, percent}; }
  static PolicyKind oracle() { return {PolicyType::Oracle, 100.0}; }
  bool operator==(const PolicyKind&) const = default;
};

PolicyKind parse_policy(const std::string& name);

/// How a commanded 2-D point is turned into the point the receiver coil sits over.
enum class AlignMode {
  Point,    // the EV aligns with the full 2-D point
  Lateral,  // only the lateral (y) coordinate is controlled
};

struct EvState {
  double longitudinal_pos = 0.0;
  double speed = 0.0;
  double lateral_pos = 0.0;  // signed offset of the receiver from lane center along y, m
  double lane_half_width = 0.5;
  double aligned_x = 0.0;    // offset from lane center along x of the point aligned with (Point mode)
};

struct WorldConfig {
  double speed = 33.528;  // m/s (75 mph)
  double lane_half_width = 0.5;
  double distance_to_coil = 6.7056;  // m; one 200 ms step at the default speed
  double v2x_latency_ms = 0.0;
  AlignMode align = AlignMode::Point;
  PolicyKind policy = PolicyKind::lstm();

  void validate() const;
};

/// Steps until the EV reaches the coil, rounded to the nearest 200 ms step.
std::int64_t estimate_arrival(double speed, double distance_to_coil);

/// Whether step `k` of an evaluation segment receives a fresh position under an
/// update interval of `percent`: ceil(percent) steps per 100-step block, evenly spaced.
bool update_selected(double percent, std::int64_t k);

/// Lane geometry anchored on the measurement grid.
struct Lane {
  double center_x = 0.0;
  double center_y = 0.0;
  double half_width = 0.5;
};

/// Scales the history, runs the network and de-scales the predicted point; the
/// lateral coordinate is clamped to the lane.
V2xMessage rsu_predict(const checkpoint::Checkpoint* model, std::span<const dataset::FeatureVector> history,
                       const Lane& lane, std::int64_t valid_at_step, int ev_id = 0, double timestamp = 0.0);

/// Idealized actuation: Base returns to lane center; Lstm/Oracle jump to the command
/// when the step is selected by the update interval and hold otherwise.
EvState apply_policy(const EvState& ev, const PolicyKind& policy, const std::optional<V2xMessage>& command,
                     std::int64_t segment_step, const Lane& lane);

/// In-process V2X transport with a fixed delivery latency.
class V2xChannel {
 public:
  explicit V2xChannel(double latency_s = 0.0) : latency_s_(latency_s) {}
  void send(const V2xMessage& msg);
  /// Removes and returns every message due at or before `now`, in delivery order.
  std::vector<V2xMessage> poll(double now);
  std::size_t pending() const { return queue_.size(); }

 private:
  struct Entry {
    double deliver_at;
    std::uint64_t seq;
    V2xMessage msg;
  };
  double latency_s_;
  std::uint64_t next_seq_ = 0;
  std::deque<Entry> queue_;
};

struct HarvestRecord {
  std::int64_t step = 0;
  PolicyKind policy;
  double lateral_target_y = 0.0;  // absolute y of the receiver line, m
  int achieved_point_index = 0;
  double achieved_strength = 0.0;
  /// Last raw step the applied command was computed from (-1 when none).
  std::int64_t command_history_end = -1;
};

/// Field, grid, EV and RSU under one logical 200 ms clock.
class World {
 public:
  /// Precomputes `total_steps` field samples starting at t = 0.
  World(field::FieldConfig field, WorldConfig config, std::int64_t total_steps);

  void set_model(std::optional<checkpoint::Checkpoint> model);
  const checkpoint::Checkpoint* model() const { return model_ ? &*model_ : nullptr; }

  /// Positions the clock so the next step() produces step `start`; the EV starts at lane center.
  void reset(std::int64_t start, const PolicyKind& policy);
  /// Advances one step and returns what the receiver harvested.
  HarvestRecord step();

  std::int64_t current_step() const { return current_; }
  std::int64_t total_steps() const { return static_cast<std::int64_t>(samples_.size()); }
  const field::FieldConfig& field_config() const { return field_; }
  const WorldConfig& config() const { return config_; }
  const std::vector<field::MeasurementPoint>& points() const { return points_; }
  const std::vector<field::FieldSample>& samples() const { return samples_; }
  const std::vector<dataset::FeatureVector>& raw() const { return raw_; }
  const Lane& lane() const { return lane_; }
  const EvState& ev() const { return ev_; }

  /// Grid point under the receiver for a target point, per the align mode.
  int achieved_point(double x, double y) const;
  /// Steps between sending a speed report and the command's valid step (>= 1).
  std::int64_t lead_steps() const;

 private:
  void process(std::int64_t step);
  void deliver(double now);

  field::FieldConfig field_;
  WorldConfig config_;
  std::vector<field::MeasurementPoint> points_;
  std::vector<field::FieldSample> samples_;
  std::vector<dataset::FeatureVector> raw_;
  Lane lane_;
  std::optional<checkpoint::Checkpoint> model_;

  PolicyKind policy_;
  EvState ev_;
  V2xChannel channel_;
  std::map<std::int64_t, V2xMessage> pending_commands_;
  std::int64_t start_ = 0;
  std::int64_t current_ = 0;
  std::int64_t last_history_end_ = -1;
};

std::string trace_csv(std::span<const HarvestRecord> records);

void to_json(nlohmann::json& j, const WorldConfig& c);
void from_json(const nlohmann::json& j, WorldConfig& c);

}  // namespace dwc::controller
