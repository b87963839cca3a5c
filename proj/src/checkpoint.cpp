#include "dwc/checkpoint.hpp"

#include <cmath>

#include "dwc/csv.hpp"
#include "dwc/error.hpp"

namespace dwc::checkpoint {

namespace {

using nlohmann::json;

const char* const kGateKeys[] = {"f", "i", "c", "o"};

json cell_to_json(const lstm::LstmCellParams& cell) {
  const lstm::Gate* gates[] = {&cell.forget, &cell.input, &cell.candidate, &cell.output};
  json j = json::object();
  for (int g = 0; g < 4; ++g) {
    const std::string k = kGateKeys[g];
    j["w_h_" + k] = gates[g]->w_h.data;
    j["w_i_" + k] = gates[g]->w_i.data;
    j["b_" + k] = gates[g]->b;
  }
  j["hidden"] = cell.hidden();
  j["input_width"] = cell.input_width();
  return j;
}

Matrix read_matrix(const json& j, std::size_t rows, std::size_t cols, const std::string& name) {
  Matrix m(rows, cols);
  auto v = j.at(name).get<std::vector<double>>();
  if (v.size() != rows * cols) throw FormatError("checkpoint: '" + name + "' has the wrong size");
  m.data = std::move(v);
  return m;
}

Vector read_vector(const json& j, std::size_t n, const std::string& name) {
  auto v = j.at(name).get<std::vector<double>>();
  if (v.size() != n) throw FormatError("checkpoint: '" + name + "' has the wrong size");
  return v;
}

lstm::LstmCellParams cell_from_json(const json& j, std::size_t hidden, std::size_t input_width) {
  if (j.at("hidden").get<std::size_t>() != hidden || j.at("input_width").get<std::size_t>() != input_width)
    throw FormatError("checkpoint: layer dimensions disagree with hidden_units");
  lstm::LstmCellParams cell;
  lstm::Gate* gates[] = {&cell.forget, &cell.input, &cell.candidate, &cell.output};
  for (int g = 0; g < 4; ++g) {
    const std::string k = kGateKeys[g];
    gates[g]->w_h = read_matrix(j, hidden, hidden, "w_h_" + k);
    gates[g]->w_i = read_matrix(j, hidden, input_width, "w_i_" + k);
    gates[g]->b = read_vector(j, hidden, "b_" + k);
  }
  return cell;
}

}  // namespace

json save_checkpoint(const Checkpoint& ckpt) {
  ckpt.params.check_shapes();
  for (auto t : lstm::tensors(ckpt.params))
    for (double v : t)
      if (!std::isfinite(v)) throw NumericError("save_checkpoint: non-finite parameter");
  json j;
  j["format_version"] = kFormatVersion;
  j["hidden_units"] = ckpt.params.hidden_units();
  j["l"] = ckpt.l;
  j["f"] = ckpt.f;
  j["scaler"] = ckpt.scaler;
  j["layer1"] = cell_to_json(ckpt.params.layer1);
  j["layer2"] = cell_to_json(ckpt.params.layer2);
  j["dense_w"] = ckpt.params.dense_w.data;
  j["dense_b"] = ckpt.params.dense_b;
  j["train_config"] = ckpt.train_config;
  j["history"] = ckpt.history;
  j["meta"] = ckpt.meta;
  return j;
}

Checkpoint load_checkpoint(const json& doc) {
  if (!doc.is_object()) throw FormatError("checkpoint: document is not an object");
  Checkpoint c;
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kFormatVersion)
      throw FormatError("checkpoint: unsupported format_version " + std::to_string(version));
    const auto hidden = doc.at("hidden_units").get<std::size_t>();
    if (hidden == 0) throw FormatError("checkpoint: hidden_units must be positive");
    c.l = doc.at("l").get<int>();
    c.f = doc.at("f").get<int>();
    if (c.l < 1 || c.f < 1) throw FormatError("checkpoint: l and f must be positive");
    c.scaler = doc.at("scaler").get<dataset::ScalerParams>();
    c.params.layer1 = cell_from_json(doc.at("layer1"), hidden, lstm::kInputWidth);
    c.params.layer2 = cell_from_json(doc.at("layer2"), hidden, hidden);
    c.params.dense_w = read_matrix(doc, lstm::kOutputWidth, hidden, "dense_w");
    c.params.dense_b = read_vector(doc, lstm::kOutputWidth, "dense_b");
    c.train_config = doc.at("train_config").get<train::TrainConfig>();
    c.history = doc.at("history").get<train::TrainHistory>();
    c.meta = doc.value("meta", json::object());
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

std::string dump(const Checkpoint& ckpt) { return save_checkpoint(ckpt).dump() + "\n"; }

Checkpoint parse(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return load_checkpoint(doc);
}

void write(const std::filesystem::path& path, const Checkpoint& ckpt) { csv::write_file(path, dump(ckpt)); }

Checkpoint read(const std::filesystem::path& path) { return parse(csv::read_file(path)); }

}  // namespace dwc::checkpoint
