#include "dwc/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dwc/csv.hpp"
#include "dwc/error.hpp"

namespace dwc::controller {

namespace {

constexpr double kTimeEps = 1e-9;

std::int64_t step_of(double t) {
  return static_cast<std::int64_t>(std::floor(t / field::kStepSeconds + kTimeEps));
}

double clamp_lateral(double v, double half_width) { return std::clamp(v, -half_width, half_width); }

}  // namespace

void PolicyKind::validate() const {
  if (!(update_interval_percent >= 0.0 && update_interval_percent <= 100.0))
    throw ArgumentError("update_interval_percent must lie in [0, 100]");
}

std::string PolicyKind::name() const {
  switch (type) {
    case PolicyType::Base:
      return "base";
    case PolicyType::Lstm:
      return "lstm";
    case PolicyType::Oracle:
      return "oracle";
  }
  return "unknown";
}

PolicyKind parse_policy(const std::string& name) {
  if (name == "base") return PolicyKind::base();
  if (name == "lstm") return PolicyKind::lstm();
  if (name == "oracle") return PolicyKind::oracle();
  throw ConfigError("unknown policy '" + name + "' (expected base, lstm or oracle)");
}

void WorldConfig::validate() const {
  if (!(speed > 0.0)) throw ConfigError("world: speed must be positive");
  if (!(lane_half_width > 0.0)) throw ConfigError("world: lane_half_width must be positive");
  if (!(distance_to_coil >= 0.0)) throw ConfigError("world: distance_to_coil must be non-negative");
  if (!(v2x_latency_ms >= 0.0)) throw ConfigError("world: v2x_latency_ms must be non-negative");
  policy.validate();
}

std::int64_t estimate_arrival(double speed, double distance_to_coil) {
  if (!(speed > 0.0)) throw ArgumentError("estimate_arrival: speed must be positive");
  if (!(distance_to_coil >= 0.0)) throw ArgumentError("estimate_arrival: distance must be non-negative");
  return std::llround(distance_to_coil / speed / field::kStepSeconds);
}

bool update_selected(double percent, std::int64_t k) {
  if (k < 0) return false;
  const auto per_block = static_cast<std::int64_t>(std::ceil(percent - 1e-9));
  if (per_block <= 0) return false;
  if (per_block >= 100) return true;
  return (k % 100) * per_block % 100 < per_block;
}

V2xMessage rsu_predict(const checkpoint::Checkpoint* model, std::span<const dataset::FeatureVector> history,
                       const Lane& lane, std::int64_t valid_at_step, int ev_id, double timestamp) {
  if (model == nullptr) throw StateError("rsu_predict: no model loaded");
  if (history.size() != static_cast<std::size_t>(model->l))
    throw ArgumentError("rsu_predict: history must hold exactly l feature vectors");
  std::vector<double> window;
  window.reserve(history.size() * dataset::kFeatureWidth);
  for (const auto& v : history) {
    const auto s = dataset::apply_scaler(model->scaler, v);
    window.insert(window.end(), s.begin(), s.end());
  }
  const auto out = lstm::network_forward(model->params, window);
  const auto point = dataset::invert_scaler(model->scaler, {0.0, 0.0, out[0], out[1]});
  V2xMessage cmd;
  cmd.kind = MessageKind::PositionCommand;
  cmd.ev_id = ev_id;
  cmd.timestamp = timestamp;
  cmd.target_x = point[2];
  cmd.target_y = lane.center_y + clamp_lateral(point[3] - lane.center_y, lane.half_width);
  cmd.valid_at_step = valid_at_step;
  return cmd;
}

EvState apply_policy(const EvState& ev, const PolicyKind& policy, const std::optional<V2xMessage>& command,
                     std::int64_t segment_step, const Lane& lane) {
  EvState next = ev;
  switch (policy.type) {
    case PolicyType::Base:
      next.lateral_pos = 0.0;
      next.aligned_x = 0.0;
      break;
    case PolicyType::Lstm:
    case PolicyType::Oracle: {
      const double percent = policy.type == PolicyType::Oracle ? 100.0 : policy.update_interval_percent;
      if (command && command->kind == MessageKind::PositionCommand && update_selected(percent, segment_step)) {
        next.lateral_pos = command->target_y - lane.center_y;
        next.aligned_x = command->target_x - lane.center_x;
      }
      break;
    }
  }
  next.lateral_pos = clamp_lateral(next.lateral_pos, next.lane_half_width);
  return next;
}

void V2xChannel::send(const V2xMessage& msg) {
  Entry e{msg.timestamp + latency_s_, next_seq_++, msg};
  auto pos = std::upper_bound(queue_.begin(), queue_.end(), e, [](const Entry& a, const Entry& b) {
    return a.deliver_at < b.deliver_at || (a.deliver_at == b.deliver_at && a.seq < b.seq);
  });
  queue_.insert(pos, std::move(e));
}

std::vector<V2xMessage> V2xChannel::poll(double now) {
  std::vector<V2xMessage> out;
  while (!queue_.empty() && queue_.front().deliver_at <= now + kTimeEps) {
    out.push_back(queue_.front().msg);
    queue_.pop_front();
  }
  return out;
}

World::World(field::FieldConfig field, WorldConfig config, std::int64_t total_steps)
    : field_(std::move(field)), config_(std::move(config)), channel_(config_.v2x_latency_ms / 1000.0) {
  config_.validate();
  if (total_steps < 1) throw ArgumentError("World: need at least one step");
  points_ = field::generate_points(field_);
  samples_ = field::sample_stream(field_, points_, 0, total_steps);
  raw_ = dataset::build_raw(samples_, points_);
  const auto [cx, cy] = field::centroid(points_);
  lane_ = {cx, cy, config_.lane_half_width};
  policy_ = config_.policy;
}

void World::set_model(std::optional<checkpoint::Checkpoint> model) { model_ = std::move(model); }

std::int64_t World::lead_steps() const {
  return std::max<std::int64_t>(1, estimate_arrival(config_.speed, config_.distance_to_coil));
}

int World::achieved_point(double x, double y) const {
  int best = 0;
  double best_primary = std::numeric_limits<double>::infinity();
  double best_secondary = std::numeric_limits<double>::infinity();
  for (const auto& p : points_) {
    const double d2 = (p.x - x) * (p.x - x) + (p.y - y) * (p.y - y);
    const double primary = config_.align == AlignMode::Point ? d2 : std::abs(p.y - y);
    const double secondary = config_.align == AlignMode::Point ? 0.0 : d2;
    if (primary < best_primary || (primary == best_primary && secondary < best_secondary)) {
      best = p.index;
      best_primary = primary;
      best_secondary = secondary;
    }
  }
  return best;
}

void World::reset(std::int64_t start, const PolicyKind& policy) {
  policy.validate();
  if (start < 0 || start >= total_steps()) throw ArgumentError("World::reset: start outside the sampled horizon");
  if (policy.type == PolicyType::Lstm && !model_) throw StateError("World: Lstm policy needs a model");
  policy_ = policy;
  start_ = start;
  ev_ = EvState{0.0, config_.speed, 0.0, config_.lane_half_width, 0.0};
  channel_ = V2xChannel(config_.v2x_latency_ms / 1000.0);
  pending_commands_.clear();

  // Warm up long enough for requests targeting the first segment steps to round-trip.
  const auto latency_steps =
      static_cast<std::int64_t>(std::ceil(config_.v2x_latency_ms / 1000.0 / field::kStepSeconds - kTimeEps));
  const std::int64_t warm = lead_steps() + 2 * latency_steps + 1;
  for (std::int64_t s = std::max<std::int64_t>(0, start - warm); s < start; ++s) process(s);
  current_ = start;
}

void World::deliver(double now) {
  const std::int64_t step_now = step_of(now);
  // RSU replies may be due immediately, so keep polling until the queue is quiet.
  for (auto batch = channel_.poll(now); !batch.empty(); batch = channel_.poll(now)) {
    for (const V2xMessage& msg : batch) {
      if (msg.kind == MessageKind::SpeedReport) {
        const std::int64_t report_step = step_of(msg.timestamp);
        const std::int64_t target =
            report_step + std::max<std::int64_t>(1, estimate_arrival(msg.speed, config_.distance_to_coil));
        const std::int64_t history_end = std::min(step_now, target - 1);
        const auto l = static_cast<std::int64_t>(model_->l);
        if (history_end - l + 1 < 0 || target >= total_steps()) continue;
        const std::span<const dataset::FeatureVector> history(raw_.data() + (history_end - l + 1),
                                                              static_cast<std::size_t>(l));
        V2xMessage cmd = rsu_predict(model(), history, lane_, target, msg.ev_id, now);
        cmd.history_end_step = history_end;
        channel_.send(cmd);
      } else {
        pending_commands_[msg.valid_at_step] = msg;
      }
    }
  }
}

void World::process(std::int64_t s) {
  const double now = static_cast<double>(s) * field::kStepSeconds;
  std::optional<V2xMessage> command;
  std::int64_t history_end = -1;

  if (policy_.type == PolicyType::Lstm) {
    const std::int64_t target = s + lead_steps();
    if (update_selected(policy_.update_interval_percent, target - start_)) {
      V2xMessage report;
      report.kind = MessageKind::SpeedReport;
      report.timestamp = now;
      report.speed = ev_.speed;
      channel_.send(report);
    }
    deliver(now);
    pending_commands_.erase(pending_commands_.begin(), pending_commands_.lower_bound(s));
    if (auto it = pending_commands_.find(s); it != pending_commands_.end()) {
      command = it->second;
      history_end = it->second.history_end_step;
      pending_commands_.erase(it);
    }
  } else if (policy_.type == PolicyType::Oracle) {
    const int idx = field::argmax_point(samples_[static_cast<std::size_t>(s)]).first;
    const auto& p = points_[static_cast<std::size_t>(idx)];
    V2xMessage cmd;
    cmd.kind = MessageKind::PositionCommand;
    cmd.target_x = p.x;
    cmd.target_y = p.y;
    cmd.valid_at_step = s;
    command = cmd;
  }

  const double percent = policy_.type == PolicyType::Oracle ? 100.0 : policy_.update_interval_percent;
  const bool applied = command.has_value() && update_selected(percent, s - start_);
  ev_ = apply_policy(ev_, policy_, command, s - start_, lane_);
  ev_.longitudinal_pos += ev_.speed * field::kStepSeconds;
  last_history_end_ = applied ? history_end : -1;
}

HarvestRecord World::step() {
  if (current_ >= total_steps()) throw ArgumentError("World::step: past the end of the sampled horizon");
  const std::int64_t s = current_;
  process(s);
  ++current_;
  HarvestRecord rec;
  rec.step = s;
  rec.policy = policy_;
  rec.lateral_target_y = lane_.center_y + ev_.lateral_pos;
  rec.achieved_point_index = achieved_point(lane_.center_x + ev_.aligned_x, lane_.center_y + ev_.lateral_pos);
  rec.achieved_strength = samples_[static_cast<std::size_t>(s)].strengths[static_cast<std::size_t>(rec.achieved_point_index)];
  rec.command_history_end = last_history_end_;
  return rec;
}

std::string trace_csv(std::span<const HarvestRecord> records) {
  std::ostringstream out;
  out << "step,policy,lateral_target_y,achieved_point_index,achieved_strength\n";
  for (const auto& r : records)
    out << r.step << ',' << r.policy.name() << ',' << csv::num(r.lateral_target_y) << ',' << r.achieved_point_index
        << ',' << csv::num(r.achieved_strength) << '\n';
  return out.str();
}

void to_json(nlohmann::json& j, const WorldConfig& c) {
  j = nlohmann::json{{"ev", {{"speed", c.speed}, {"lane_half_width", c.lane_half_width}}},
                     {"distance_to_coil", c.distance_to_coil},
                     {"v2x_latency_ms", c.v2x_latency_ms},
                     {"align", c.align == AlignMode::Point ? "point" : "lateral"},
                     {"policy", {{"kind", c.policy.name()}, {"update_interval_percent", c.policy.update_interval_percent}}}};
}

void from_json(const nlohmann::json& j, WorldConfig& c) {
  try {
    if (j.contains("ev")) {
      const auto& ev = j.at("ev");
      c.speed = ev.value("speed", c.speed);
      c.lane_half_width = ev.value("lane_half_width", c.lane_half_width);
    }
    c.distance_to_coil = j.value("distance_to_coil", c.distance_to_coil);
    c.v2x_latency_ms = j.value("v2x_latency_ms", c.v2x_latency_ms);
    const std::string align = j.value("align", std::string(c.align == AlignMode::Point ? "point" : "lateral"));
    if (align == "point")
      c.align = AlignMode::Point;
    else if (align == "lateral")
      c.align = AlignMode::Lateral;
    else
      throw ConfigError("world: align must be 'point' or 'lateral'");
    if (j.contains("policy")) {
      const auto& p = j.at("policy");
      const double pct = p.value("update_interval_percent", c.policy.update_interval_percent);
      c.policy = parse_policy(p.value("kind", c.policy.name()));
      c.policy.update_interval_percent = pct;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("world config: ") + e.what());
  }
  c.validate();
}

}  // namespace dwc::controller
