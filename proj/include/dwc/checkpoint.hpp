#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "dwc/dataset.hpp"
#include "dwc/lstm.hpp"
#include "dwc/train.hpp"

namespace dwc::checkpoint {

inline constexpr int kFormatVersion = 1;

/// Everything needed to reproduce predictions: weights, the input scaler and the
/// window geometry, plus the training record for provenance.
struct Checkpoint {
  lstm::NetworkParams params;
  dataset::ScalerParams scaler;
  int l = 10;
  int f = 1;
  train::TrainConfig train_config;
  train::TrainHistory history;
  nlohmann::json meta = nlohmann::json::object();

  bool operator==(const Checkpoint&) const = default;
};

nlohmann::json save_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on a malformed, inconsistent or version-mismatched document.
Checkpoint load_checkpoint(const nlohmann::json& doc);

std::string dump(const Checkpoint& ckpt);
Checkpoint parse(const std::string& text);

void write(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read(const std::filesystem::path& path);

}  // namespace dwc::checkpoint
