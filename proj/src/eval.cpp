#include "dwc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dwc/csv.hpp"
#include "dwc/error.hpp"
#include "dwc/kernels.hpp"

namespace dwc::eval {

double gain_percent(double avg, double base_avg) {
  if (base_avg == 0.0) return 0.0;
  return 100.0 * (avg - base_avg) / base_avg;
}

EfficiencyReport evaluate_efficiency(controller::World& world, const controller::PolicyKind& policy,
                                     std::int64_t start, std::size_t n) {
  if (n == 0) throw ArgumentError("evaluate_efficiency: n must be positive");
  if (start < 0 || start + static_cast<std::int64_t>(n) > world.total_steps())
    throw ArgumentError("evaluate_efficiency: test segment shorter than " + std::to_string(n) + " steps");
  world.reset(start, policy);
  EfficiencyReport rep;
  rep.policy = policy;
  rep.first_step = start;
  rep.n_predictions = n;
  rep.per_step.reserve(n);
  rep.trace.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    rep.trace.push_back(world.step());
    rep.per_step.push_back(rep.trace.back().achieved_strength);
  }
  rep.avg_strength = std::accumulate(rep.per_step.begin(), rep.per_step.end(), 0.0) / static_cast<double>(n);
  return rep;
}

void attach_gains(std::vector<EfficiencyReport>& reports, std::optional<double> base_avg) {
  if (!base_avg) {
    for (const auto& r : reports)
      if (r.policy.type == controller::PolicyType::Base) {
        base_avg = r.avg_strength;
        break;
      }
  }
  if (!base_avg) return;
  for (auto& r : reports) r.gain_vs_base_percent = gain_percent(r.avg_strength, *base_avg);
}

checkpoint::Checkpoint train_model(std::span<const dataset::FeatureVector> raw, const dataset::DatasetConfig& data_cfg,
                                   const train::TrainConfig& train_cfg, double coil_radius,
                                   std::optional<std::size_t> pool_records) {
  const dataset::Splits sp = dataset::prepare(raw, data_cfg, pool_records);
  const train::HitMetric metric{*sp.train.scaler, 0.1 * coil_radius};
  train::TrainResult tr = train::train(sp.train, sp.val, train_cfg, metric);
  checkpoint::Checkpoint ckpt;
  ckpt.params = std::move(tr.params);
  ckpt.scaler = *sp.train.scaler;
  ckpt.l = data_cfg.l;
  ckpt.f = data_cfg.f;
  ckpt.train_config = train_cfg;
  ckpt.history = std::move(tr.history);
  ckpt.meta = {{"train_rows", sp.train.size()},
               {"val_rows", sp.val.size()},
               {"test_rows", sp.test.size()},
               {"raw_records", pool_records ? *pool_records : raw.size()}};
  return ckpt;
}

std::vector<SizeRow> sweep_dataset_size(const controller::World& world, std::span<const std::size_t> sizes,
                                        const dataset::DatasetConfig& data_cfg, const train::TrainConfig& train_cfg,
                                        std::int64_t start, std::size_t n) {
  for (std::size_t s : sizes) {
    if (s < static_cast<std::size_t>(data_cfg.l) + 1)
      throw ArgumentError("sweep_dataset_size: size " + std::to_string(s) + " is below l + 1");
    if (s > world.raw().size())
      throw ArgumentError("sweep_dataset_size: size " + std::to_string(s) + " exceeds the available records");
  }
  std::vector<SizeRow> rows(sizes.size());
  const auto count = static_cast<std::ptrdiff_t>(sizes.size());
  const int threads = std::min<int>(kernels::max_threads(), std::max<int>(1, static_cast<int>(count)));
  train::TrainConfig cfg = train_cfg;
  if (threads > 1) cfg.parallel = false;
  const double radius = world.field_config().coil_radius;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    controller::World local = world;
    local.set_model(train_model(world.raw(), data_cfg, cfg, radius, sizes[k]));
    rows[k].size = sizes[k];
    rows[k].report = evaluate_efficiency(local, controller::PolicyKind::lstm(100.0), start, n);
    rows[k].avg_strength = rows[k].report.avg_strength;
  }
  return rows;
}

std::vector<IntervalRow> sweep_update_interval(controller::World& world, std::span<const double> percentages,
                                               std::int64_t start, std::size_t n) {
  for (double p : percentages)
    if (!(p >= 0.0 && p <= 100.0)) throw ArgumentError("sweep_update_interval: percentage outside [0, 100]");
  std::vector<IntervalRow> rows;
  for (double p : percentages) {
    IntervalRow row;
    row.percent = p;
    row.report = evaluate_efficiency(world, controller::PolicyKind::lstm(p), start, n);
    row.avg_strength = row.report.avg_strength;
    rows.push_back(std::move(row));
  }
  return rows;
}

DelayReport summarize_delays(std::vector<double> samples_ms) {
  if (samples_ms.empty()) throw ArgumentError("summarize_delays: no samples");
  DelayReport rep;
  rep.samples_ms = samples_ms;
  rep.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(samples_ms.size());
  std::sort(samples_ms.begin(), samples_ms.end());
  const std::size_t n = samples_ms.size();
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  rep.p95_ms = samples_ms[std::max<std::size_t>(rank, 1) - 1];
  rep.cdf.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    rep.cdf.emplace_back(samples_ms[i], static_cast<double>(i + 1) / static_cast<double>(n));
  return rep;
}

DelayReport measure_delay(const checkpoint::Checkpoint& model, std::span<const dataset::FeatureVector> raw,
                          std::size_t n, std::size_t warmup) {
  if (n < 1) throw ArgumentError("measure_delay: n must be at least 1");
  const auto l = static_cast<std::size_t>(model.l);
  if (raw.size() < l) throw ArgumentError("measure_delay: not enough raw history for one window");
  const controller::Lane lane{0.0, 0.0, std::numeric_limits<double>::max()};
  const std::size_t windows = raw.size() - l + 1;
  std::vector<double> samples;
  samples.reserve(n);
  double sink = 0.0;
  for (std::size_t k = 0; k < n + warmup; ++k) {
    const auto history = raw.subspan(k % windows, l);
    const auto t0 = std::chrono::steady_clock::now();
    const auto cmd = controller::rsu_predict(&model, history, lane, 0);
    const auto t1 = std::chrono::steady_clock::now();
    sink += cmd.target_x;
    if (k >= warmup) samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  if (!std::isfinite(sink)) throw NumericError("measure_delay: non-finite prediction");
  return summarize_delays(std::move(samples));
}

std::string efficiency_csv(std::span<const EfficiencyReport> reports) {
  std::ostringstream out;
  out << "policy,step,strength\n";
  for (const auto& r : reports)
    for (std::size_t k = 0; k < r.per_step.size(); ++k)
      out << r.policy.name() << ',' << (r.first_step + static_cast<std::int64_t>(k)) << ',' << csv::num(r.per_step[k])
          << '\n';
  return out.str();
}

std::string summary_csv(std::span<const EfficiencyReport> reports) {
  std::ostringstream out;
  out << "policy,n,avg_strength,gain_vs_base_percent\n";
  for (const auto& r : reports)
    out << r.policy.name() << ',' << r.n_predictions << ',' << csv::num(r.avg_strength) << ','
        << csv::num(r.gain_vs_base_percent) << '\n';
  return out.str();
}

std::string delay_csv(const DelayReport& report) {
  std::ostringstream out;
  out << "delay_ms,cum_fraction\n";
  for (const auto& [d, frac] : report.cdf) out << csv::num(d) << ',' << csv::num(frac) << '\n';
  return out.str();
}

std::string size_sweep_csv(std::span<const SizeRow> rows) {
  std::ostringstream out;
  out << "size,avg_strength\n";
  for (const auto& r : rows) out << r.size << ',' << csv::num(r.avg_strength) << '\n';
  return out.str();
}

std::string interval_sweep_csv(std::span<const IntervalRow> rows) {
  std::ostringstream out;
  out << "percent,avg_strength\n";
  for (const auto& r : rows) out << csv::num(r.percent) << ',' << csv::num(r.avg_strength) << '\n';
  return out.str();
}

nlohmann::json report_json(std::span<const EfficiencyReport> reports, std::span<const SizeRow> sizes,
                           std::span<const IntervalRow> intervals, const std::optional<DelayReport>& delay) {
  using nlohmann::json;
  json j{{"schema_version", kSchemaVersion}};
  auto eff = json::array();
  for (const auto& r : reports)
    eff.push_back({{"policy", r.policy.name()},
                   {"update_interval_percent", r.policy.update_interval_percent},
                   {"n", r.n_predictions},
                   {"first_step", r.first_step},
                   {"avg_strength", r.avg_strength},
                   {"gain_vs_base_percent", r.gain_vs_base_percent},
                   {"per_step", r.per_step}});
  j["efficiency"] = eff;
  auto sz = json::array();
  for (const auto& r : sizes) sz.push_back({{"size", r.size}, {"avg_strength", r.avg_strength}});
  j["dataset_size_sweep"] = sz;
  auto iv = json::array();
  for (const auto& r : intervals) iv.push_back({{"percent", r.percent}, {"avg_strength", r.avg_strength}});
  j["update_interval_sweep"] = iv;
  if (delay) {
    auto cdf = json::array();
    for (const auto& [d, f] : delay->cdf) cdf.push_back({d, f});
    j["delay"] = {{"n", delay->samples_ms.size()}, {"mean_ms", delay->mean_ms}, {"p95_ms", delay->p95_ms}, {"cdf", cdf}};
  } else {
    j["delay"] = nullptr;
  }
  return j;
}

}  // namespace dwc::eval
