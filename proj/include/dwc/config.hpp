#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dwc/controller.hpp"
#include "dwc/dataset.hpp"
#include "dwc/field_sim.hpp"
#include "dwc/train.hpp"

namespace dwc::config {

inline constexpr int kFormatVersion = 1;

struct EvalConfig {
  std::vector<std::size_t> sizes{500, 1000, 2000, 3000, 4000, 5000, 6000};
  std::vector<double> intervals{0, 20, 40, 60, 80, 100};
  std::vector<std::string> policies{"base", "lstm", "oracle"};
  std::size_t delay_samples = 600;
  bool sweeps = true;
};

struct RunConfig {
  field::FieldConfig field;
  std::size_t steps = 6000;  // raw records generated by gen-data
  dataset::DatasetConfig dataset;
  train::TrainConfig train;
  train::Grid grid = train::Grid::standard();
  int grid_epochs = 20;
  controller::WorldConfig world;
  EvalConfig eval;
  std::filesystem::path output_dir = "out";

  void validate() const;
  /// First raw step of the held-out test segment.
  std::int64_t test_start() const { return static_cast<std::int64_t>(steps - dataset.test_rows); }
};

nlohmann::json to_json(const RunConfig& c);
RunConfig from_json(const nlohmann::json& j);
RunConfig load(const std::filesystem::path& path);

}  // namespace dwc::config
