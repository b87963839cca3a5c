// dwc-sim: data generation, training, tuning, simulation and evaluation for the
// LSTM-guided dynamic wireless charging controller.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dwc/checkpoint.hpp"
#include "dwc/config.hpp"
#include "dwc/controller.hpp"
#include "dwc/csv.hpp"
#include "dwc/dataset.hpp"
#include "dwc/error.hpp"
#include "dwc/eval.hpp"
#include "dwc/field_sim.hpp"
#include "dwc/train.hpp"

namespace fs = std::filesystem;
using namespace dwc;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<int> epochs;
  std::optional<std::string> policies;
  std::optional<std::size_t> steps;
  std::optional<std::string> data;
  std::optional<std::string> checkpoint;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& item : csv::split_line(s))
    if (!item.empty()) out.push_back(item);
  return out;
}

config::RunConfig resolve(const Options& o) {
  config::RunConfig c = o.config_path.empty() ? config::RunConfig{} : config::load(o.config_path);
  if (o.seed) {
    c.field.rng_seed = *o.seed;
    c.train.rng_seed = *o.seed;
  }
  if (o.output) c.output_dir = *o.output;
  if (o.epochs) {
    c.train.max_epochs = *o.epochs;
    c.grid_epochs = *o.epochs;
  }
  if (o.policies) c.eval.policies = split_list(*o.policies);
  if (o.steps) c.steps = *o.steps;
  return c;
}

std::string raw_csv(std::span<const dataset::FeatureVector> raw) {
  std::ostringstream out;
  out << "t_step,a,p_x,p_y\n";
  for (const auto& v : raw) out << v.t_step << ',' << csv::num(v.a) << ',' << csv::num(v.p_x) << ',' << csv::num(v.p_y) << '\n';
  return out.str();
}

std::vector<dataset::FeatureVector> read_raw(const fs::path& path) {
  const csv::Table t = csv::parse(csv::read_file(path));
  if (t.header != std::vector<std::string>{"t_step", "a", "p_x", "p_y"})
    throw FormatError(path.string() + ": expected header t_step,a,p_x,p_y");
  std::vector<dataset::FeatureVector> raw;
  raw.reserve(t.rows.size());
  for (const auto& r : t.rows)
    raw.push_back({csv::to_int(r[0]), csv::to_double(r[1]), csv::to_double(r[2]), csv::to_double(r[3])});
  return raw;
}

std::string field_csv(std::span<const field::FieldSample> samples, std::span<const field::MeasurementPoint> points) {
  std::ostringstream out;
  out << "t,point_index,x,y,strength\n";
  for (const auto& s : samples)
    for (const auto& p : points)
      out << csv::fixed(s.t, 3) << ',' << p.index << ',' << csv::num(p.x) << ',' << csv::num(p.y) << ','
          << csv::num(s.strengths[static_cast<std::size_t>(p.index)]) << '\n';
  return out.str();
}

fs::path data_path(const Options& o, const config::RunConfig& c) {
  return o.data ? fs::path(*o.data) : c.output_dir / "raw.csv";
}

fs::path checkpoint_path(const Options& o, const config::RunConfig& c) {
  return o.checkpoint ? fs::path(*o.checkpoint) : c.output_dir / "checkpoint.json";
}

void announce(const std::string& what, const fs::path& path) { std::cout << what << ' ' << path.string() << '\n'; }

int cmd_gen_data(const Options& o) {
  const config::RunConfig c = resolve(o);
  c.field.validate();
  if (c.steps < 1) throw ConfigError("--steps must be at least 1");
  const auto points = field::generate_points(c.field);
  const auto samples = field::sample_stream(c.field, points, 0, static_cast<std::int64_t>(c.steps));
  const auto raw = dataset::build_raw(samples, points);
  csv::write_file(c.output_dir / "raw.csv", raw_csv(raw));
  csv::write_file(c.output_dir / "field.csv", field_csv(samples, points));
  csv::write_file(c.output_dir / "field_config.json", nlohmann::json(c.field).dump(2) + "\n");
  std::cout << "rows=" << raw.size() << '\n';
  announce("wrote", c.output_dir / "raw.csv");
  return 0;
}

int cmd_train(const Options& o) {
  const config::RunConfig c = resolve(o);
  c.train.validate();
  const fs::path in = data_path(o, c);
  if (!fs::exists(in)) throw IoError("data file not found: " + in.string());
  const auto raw = read_raw(in);
  checkpoint::Checkpoint ckpt = eval::train_model(raw, c.dataset, c.train, c.field.coil_radius);
  ckpt.meta["field"] = c.field;
  checkpoint::write(c.output_dir / "checkpoint.json", ckpt);
  csv::write_file(c.output_dir / "history.csv", train::history_csv(ckpt.history));
  std::cout << "epochs=" << ckpt.history.epochs.size() << " best_epoch=" << ckpt.history.best_epoch << '\n';
  announce("wrote", c.output_dir / "checkpoint.json");
  return 0;
}

int cmd_tune(const Options& o) {
  const config::RunConfig c = resolve(o);
  const fs::path in = data_path(o, c);
  if (!fs::exists(in)) throw IoError("data file not found: " + in.string());
  const auto raw = read_raw(in);
  const dataset::Splits sp = dataset::prepare(raw, c.dataset);
  train::TrainConfig base = c.train;
  base.max_epochs = c.grid_epochs;
  const train::GridResult result = train::grid_search(sp.train, sp.val, c.grid, base);
  csv::write_file(c.output_dir / "grid.csv", train::grid_csv(result));
  csv::write_file(c.output_dir / "best_config.json", nlohmann::json(result.best_config).dump(2) + "\n");
  const auto& best = result.rows[result.best];
  std::cout << "cells=" << result.rows.size() << " best_hidden=" << best.hidden_units
            << " best_batch=" << best.batch_size << " best_lr=" << csv::num(best.learning_rate) << '\n';
  announce("wrote", c.output_dir / "grid.csv");
  return 0;
}

controller::World make_world(const config::RunConfig& c) {
  return controller::World(c.field, c.world, static_cast<std::int64_t>(c.steps));
}

bool needs_model(const config::RunConfig& c) {
  for (const auto& p : c.eval.policies)
    if (controller::parse_policy(p).type == controller::PolicyType::Lstm) return true;
  return false;
}

int cmd_simulate(const Options& o) {
  config::RunConfig c = resolve(o);
  c.validate();
  controller::World world = make_world(c);
  controller::PolicyKind policy = c.world.policy;
  if (o.policies) {
    const auto names = split_list(*o.policies);
    if (names.size() != 1) throw ConfigError("simulate takes exactly one policy");
    const double pct = policy.update_interval_percent;
    policy = controller::parse_policy(names.front());
    policy.update_interval_percent = pct;
  }
  if (policy.type == controller::PolicyType::Lstm) world.set_model(checkpoint::read(checkpoint_path(o, c)));
  const auto rep = eval::evaluate_efficiency(world, policy, c.test_start(), c.dataset.test_rows);
  csv::write_file(c.output_dir / "trace.csv", controller::trace_csv(rep.trace));
  std::cout << "policy=" << policy.name() << " avg_strength=" << csv::num(rep.avg_strength) << '\n';
  announce("wrote", c.output_dir / "trace.csv");
  return 0;
}

int cmd_eval(const Options& o) {
  config::RunConfig c = resolve(o);
  c.validate();
  controller::World world = make_world(c);
  const bool want_model = needs_model(c) || c.eval.sweeps;
  if (want_model) world.set_model(checkpoint::read(checkpoint_path(o, c)));
  const std::int64_t start = c.test_start();
  const std::size_t n = c.dataset.test_rows;

  std::vector<eval::EfficiencyReport> reports;
  for (const auto& name : c.eval.policies) reports.push_back(eval::evaluate_efficiency(world, controller::parse_policy(name), start, n));
  const double base_avg = eval::evaluate_efficiency(world, controller::PolicyKind::base(), start, n).avg_strength;
  eval::attach_gains(reports, base_avg);
  csv::write_file(c.output_dir / "efficiency.csv", eval::efficiency_csv(reports));
  csv::write_file(c.output_dir / "summary.csv", eval::summary_csv(reports));

  std::vector<eval::SizeRow> sizes;
  std::vector<eval::IntervalRow> intervals;
  std::optional<eval::DelayReport> delay;
  if (c.eval.sweeps) {
    sizes = eval::sweep_dataset_size(world, c.eval.sizes, c.dataset, c.train, start, n);
    intervals = eval::sweep_update_interval(world, c.eval.intervals, start, n);
    delay = eval::measure_delay(*world.model(), world.raw(), c.eval.delay_samples);
    csv::write_file(c.output_dir / "sweep_size.csv", eval::size_sweep_csv(sizes));
    csv::write_file(c.output_dir / "sweep_interval.csv", eval::interval_sweep_csv(intervals));
    csv::write_file(c.output_dir / "delay_cdf.csv", eval::delay_csv(*delay));
  }
  csv::write_file(c.output_dir / "report.json", eval::report_json(reports, sizes, intervals, delay).dump(2) + "\n");
  for (const auto& r : reports)
    std::cout << "policy=" << r.policy.name() << " avg_strength=" << csv::num(r.avg_strength)
              << " gain_vs_base_percent=" << csv::num(r.gain_vs_base_percent) << '\n';
  announce("wrote", c.output_dir / "summary.csv");
  return 0;
}

int cmd_delay(const Options& o) {
  config::RunConfig c = resolve(o);
  c.validate();
  const checkpoint::Checkpoint model = checkpoint::read(checkpoint_path(o, c));
  const auto points = field::generate_points(c.field);
  const auto raw = dataset::build_raw(
      field::sample_stream(c.field, points, 0, static_cast<std::int64_t>(c.steps)), points);
  const auto rep = eval::measure_delay(model, raw, c.eval.delay_samples);
  csv::write_file(c.output_dir / "delay_cdf.csv", eval::delay_csv(rep));
  std::cout << "n=" << rep.samples_ms.size() << " mean_ms=" << csv::num(rep.mean_ms) << " p95_ms=" << csv::num(rep.p95_ms)
            << '\n';
  announce("wrote", c.output_dir / "delay_cdf.csv");
  return 0;
}

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic wireless charging: field simulation, LSTM training and controller evaluation", "dwc-sim"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Overrides the field and training seeds");
    sub->add_option("--output", o.output, "Output directory");
    sub->add_option("--epochs", o.epochs, "Overrides train.max_epochs (and grid_epochs)");
    sub->add_option("--policies", o.policies, "Comma-separated policies: base,lstm,oracle");
    sub->add_option("--steps", o.steps, "Number of 200 ms field steps");
    sub->add_option("--data", o.data, "Raw dataset CSV (default <output>/raw.csv)");
    sub->add_option("--checkpoint", o.checkpoint, "Checkpoint JSON (default <output>/checkpoint.json)");
  };
  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Cmd cmds[] = {
      {"gen-data", "Generate the field stream and the raw feature-vector CSV", cmd_gen_data},
      {"train", "Train the two-layer LSTM and write a checkpoint", cmd_train},
      {"tune", "Grid-search hidden units, batch size and learning rate", cmd_tune},
      {"simulate", "Run one policy over the test segment and write a trace", cmd_simulate},
      {"eval", "Efficiency, dataset-size and update-interval sweeps, delay CDF", cmd_eval},
      {"delay", "Measure per-prediction computational delay", cmd_delay},
  };
  std::vector<std::pair<CLI::App*, const Cmd*>> subs;
  for (const Cmd& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, &c);
  }
  CLI11_PARSE(app, argc, argv);
  try {
    for (auto& [sub, cmd] : subs)
      if (sub->parsed()) return cmd->run(o);
  } catch (const Error& e) {
    std::cerr << "error kind=" << e.kind() << " message=" << quoted(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error kind=internal message=" << quoted(e.what()) << '\n';
    return 1;
  }
  return 1;
}
