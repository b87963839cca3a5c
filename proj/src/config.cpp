#include "dwc/config.hpp"

#include <nlohmann/json.hpp>

#include "dwc/csv.hpp"
#include "dwc/error.hpp"

namespace dwc::config {

void RunConfig::validate() const {
  field.validate();
  train.validate();
  world.validate();
  if (steps <= static_cast<std::size_t>(dataset.l + dataset.f - 1) + dataset.test_rows)
    throw ConfigError("steps too small for one training window plus the test rows");
  if (grid_epochs < 1) throw ConfigError("grid_epochs must be at least 1");
  for (double p : eval.intervals)
    if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("eval.intervals must lie in [0, 100]");
  for (const auto& p : eval.policies) controller::parse_policy(p);
  if (eval.delay_samples < 1) throw ConfigError("eval.delay_samples must be at least 1");
}

nlohmann::json to_json(const RunConfig& c) {
  return nlohmann::json{{"format_version", kFormatVersion},
                        {"field", c.field},
                        {"dataset",
                         {{"steps", c.steps},
                          {"l", c.dataset.l},
                          {"f", c.dataset.f},
                          {"val_fraction", c.dataset.val_fraction},
                          {"test_rows", c.dataset.test_rows}}},
                        {"train", c.train},
                        {"grid", c.grid},
                        {"grid_epochs", c.grid_epochs},
                        {"world", c.world},
                        {"eval",
                         {{"sizes", c.eval.sizes},
                          {"intervals", c.eval.intervals},
                          {"policies", c.eval.policies},
                          {"delay_samples", c.eval.delay_samples},
                          {"sweeps", c.eval.sweeps}}},
                        {"output_dir", c.output_dir.string()}};
}

RunConfig from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  try {
    const int version = j.value("format_version", kFormatVersion);
    if (version != kFormatVersion) throw ConfigError("unsupported config format_version " + std::to_string(version));
    if (j.contains("field")) c.field = j.at("field").get<field::FieldConfig>();
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      c.steps = d.value("steps", c.steps);
      c.dataset = d.get<dataset::DatasetConfig>();
    }
    if (j.contains("train")) c.train = j.at("train").get<train::TrainConfig>();
    if (j.contains("grid")) c.grid = j.at("grid").get<train::Grid>();
    c.grid_epochs = j.value("grid_epochs", c.grid_epochs);
    if (j.contains("world")) c.world = j.at("world").get<controller::WorldConfig>();
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      c.eval.sizes = e.value("sizes", c.eval.sizes);
      c.eval.intervals = e.value("intervals", c.eval.intervals);
      c.eval.policies = e.value("policies", c.eval.policies);
      c.eval.delay_samples = e.value("delay_samples", c.eval.delay_samples);
      c.eval.sweeps = e.value("sweeps", c.eval.sweeps);
    }
    c.output_dir = j.value("output_dir", c.output_dir.string());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace dwc::config
