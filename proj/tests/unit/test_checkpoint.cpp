#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "dwc/checkpoint.hpp"
#include "dwc/error.hpp"
#include "oracles.hpp"

using namespace dwc;
using namespace dwc::checkpoint;

namespace {

Checkpoint sample() {
  std::mt19937_64 eng(21);
  Checkpoint c;
  c.params = oracle::random_params(5, 4, eng);
  // Awkward doubles that only survive a shortest-round-trip encoding.
  c.params.dense_b = {0.1 + 0.2, 1.0 / 3.0};
  c.scaler = {{0, 0.5, -0.13, -0.12}, {5999, 123.456, 0.13, 0.125}};
  c.l = 10;
  c.f = 1;
  c.train_config.hidden_units = 5;
  c.history.epochs = {{0, 0.3, 0.4, 0.1, 0.2}};
  c.history.initial_val_loss = 0.9;
  c.meta = {{"train_rows", 4851}};
  return c;
}

}  // namespace

TEST(Checkpoint, BitExactRoundTrip) {
  const auto c = sample();
  const auto back = parse(dump(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(dump(back), dump(c));
}

TEST(Checkpoint, FileRoundTripGivesIdenticalPredictions) {
  const auto c = sample();
  const auto path = std::filesystem::temp_directory_path() / "dwc_ckpt_test" / "c.json";
  write(path, c);
  const auto back = read(path);
  std::mt19937_64 eng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    Vector w(40);
    for (double& v : w) v = u(eng);
    EXPECT_EQ(lstm::network_forward(back.params, w), lstm::network_forward(c.params, w));
  }
  std::filesystem::remove_all(path.parent_path());
}

TEST(Checkpoint, MalformedDocuments) {
  const std::string text = dump(sample());
  EXPECT_THROW(parse(text.substr(0, text.size() / 2)), FormatError);
  auto doc = save_checkpoint(sample());
  doc["format_version"] = 2;
  EXPECT_THROW(load_checkpoint(doc), FormatError);
  doc = save_checkpoint(sample());
  doc["dense_w"].erase(0);
  EXPECT_THROW(load_checkpoint(doc), FormatError);
  doc = save_checkpoint(sample());
  doc.erase("layer2");
  EXPECT_THROW(load_checkpoint(doc), FormatError);
  EXPECT_THROW(read("/nonexistent/dir/ckpt.json"), IoError);
}
