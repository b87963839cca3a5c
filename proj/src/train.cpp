#include "dwc/train.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dwc/csv.hpp"
#include "dwc/error.hpp"
#include "dwc/kernels.hpp"
#include "dwc/rng.hpp"

namespace dwc::train {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5eed;
constexpr std::uint64_t kGridStream = 0x96d;

struct AdamState {
  std::vector<Vector> m;
  std::vector<Vector> v;
  long step = 0;
};

double global_norm(const lstm::NetworkParams& g) {
  double sq = 0.0;
  for (auto t : lstm::tensors(g))
    for (double x : t) sq += x * x;
  return std::sqrt(sq);
}

void apply_update(lstm::NetworkParams& params, lstm::NetworkParams& grad, const TrainConfig& cfg,
                  AdamState& adam) {
  if (cfg.clip_norm > 0.0) {
    const double norm = global_norm(grad);
    if (norm > cfg.clip_norm) {
      const double s = cfg.clip_norm / norm;
      for (auto t : lstm::tensors(grad))
        for (double& x : t) x *= s;
    }
  }
  auto p = lstm::tensors(params);
  const auto g = lstm::tensors(std::as_const(grad));
  if (cfg.optimizer == Optimizer::Sgd) {
    for (std::size_t t = 0; t < p.size(); ++t)
      for (std::size_t k = 0; k < p[t].size(); ++k) p[t][k] -= cfg.learning_rate * g[t][k];
    return;
  }
  if (adam.m.empty()) {
    for (auto t : p) {
      adam.m.emplace_back(t.size(), 0.0);
      adam.v.emplace_back(t.size(), 0.0);
    }
  }
  ++adam.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step));
  for (std::size_t t = 0; t < p.size(); ++t) {
    Vector& m = adam.m[t];
    Vector& v = adam.v[t];
    for (std::size_t k = 0; k < p[t].size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[t][k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[t][k] * g[t][k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[t][k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

void shuffle(std::vector<std::size_t>& idx, std::mt19937_64& eng) {
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng::below(eng, i)]);
}

const char* optimizer_name(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be a finite non-negative number");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (hidden_units < 1) throw ConfigError("hidden_units must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
    throw ConfigError("invalid Adam hyperparameters");
  if (patience < 0) throw ConfigError("patience must be non-negative");
}

double hit_rate(const Matrix& predictions, const Matrix& labels, const HitMetric& metric) {
  if (predictions.rows != labels.rows) throw ArgumentError("hit_rate: row mismatch");
  if (labels.rows == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < labels.rows; ++r) {
    const auto p = dataset::invert_scaler(metric.scaler, {0.0, 0.0, predictions(r, 0), predictions(r, 1)});
    const auto y = dataset::invert_scaler(metric.scaler, {0.0, 0.0, labels(r, 0), labels(r, 1)});
    if (std::hypot(p[2] - y[2], p[3] - y[3]) <= metric.threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.rows);
}

Matrix predict_rows(const lstm::NetworkParams& params, const Matrix& features) {
  params.check_shapes();
  Matrix out(features.rows, lstm::kOutputWidth);
  const auto n = static_cast<std::ptrdiff_t>(features.rows);
#pragma omp parallel num_threads(kernels::max_threads())
  {
    lstm::ForwardTrace tr;
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
      lstm::forward_trace(params, features.row(static_cast<std::size_t>(r)), tr);
      out(r, 0) = tr.output[0];
      out(r, 1) = tr.output[1];
    }
  }
  return out;
}

TrainResult train(const dataset::WindowedDataset& train_set, const dataset::WindowedDataset& val_set,
                  const TrainConfig& cfg, const std::optional<HitMetric>& metric) {
  cfg.validate();
  if (train_set.size() == 0) throw ArgumentError("train: empty training set");
  const std::size_t width = static_cast<std::size_t>(train_set.l) * lstm::kInputWidth;
  if (train_set.features.cols != width || (val_set.size() > 0 && val_set.features.cols != width))
    throw ArgumentError("train: feature width does not match l * 4");

  TrainResult result{lstm::initialize(static_cast<std::size_t>(cfg.hidden_units), cfg.rng_seed), {}};
  lstm::NetworkParams params = result.params;
  AdamState adam;
  std::mt19937_64 eng(rng::derive(cfg.rng_seed, kShuffleStream));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const bool has_val = val_set.size() > 0;
  auto evaluate_val = [&](const lstm::NetworkParams& p, double& loss, double& acc) {
    const Matrix pred = predict_rows(p, val_set.features);
    loss = lstm::mse(val_set.labels, pred);
    acc = metric ? hit_rate(pred, val_set.labels, *metric) : 0.0;
  };

  double best = std::numeric_limits<double>::infinity();
  if (has_val) {
    double acc = 0.0;
    evaluate_val(params, result.history.initial_val_loss, acc);
  } else {
    result.history.initial_val_loss = lstm::mse(train_set.labels, predict_rows(params, train_set.features));
  }

  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  int since_best = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle(order, eng);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      const std::span<const std::size_t> rows(order.data() + start, n);
      auto lg = lstm::loss_and_gradient(params, train_set.features, train_set.labels, rows, cfg.parallel);
      if (!std::isfinite(lg.loss)) throw TrainingError("training diverged (non-finite loss)", epoch);
      loss_sum += lg.loss * static_cast<double>(n);
      if (metric) {
        Matrix labels(n, lstm::kOutputWidth);
        for (std::size_t k = 0; k < n; ++k) {
          labels(k, 0) = train_set.labels(rows[k], 0);
          labels(k, 1) = train_set.labels(rows[k], 1);
        }
        hits += static_cast<std::size_t>(std::llround(hit_rate(lg.predictions, labels, *metric) * static_cast<double>(n)));
      }
      apply_update(params, lg.grad, cfg, adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(hits) / static_cast<double>(order.size());
    if (has_val) {
      evaluate_val(params, rec.val_loss, rec.val_accuracy);
    } else {
      rec.val_loss = lstm::mse(train_set.labels, predict_rows(params, train_set.features));
      rec.val_accuracy = rec.train_accuracy;
    }
    if (!std::isfinite(rec.val_loss)) throw TrainingError("training diverged (non-finite validation loss)", epoch);
    result.history.epochs.push_back(rec);

    if (rec.val_loss < best) {
      best = rec.val_loss;
      result.history.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

Grid Grid::standard() {
  Grid g;
  for (int h = 40; h <= 180; h += 20) g.hidden_units.push_back(h);
  g.batch_sizes = {16, 32, 64, 128, 256};
  g.learning_rates = {0.01, 0.001, 0.0001, 0.00001, 0.000001};
  return g;
}

GridResult grid_search(const dataset::WindowedDataset& train_set, const dataset::WindowedDataset& val_set,
                       const Grid& grid, const TrainConfig& base) {
  if (grid.size() == 0) throw ArgumentError("grid_search: empty grid");
  GridResult result;
  for (int h : grid.hidden_units)
    for (int b : grid.batch_sizes)
      for (double lr : grid.learning_rates) result.rows.push_back({h, b, lr, 0.0, 0, false, {}});

  const auto n = static_cast<std::ptrdiff_t>(result.rows.size());
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    GridRow& row = result.rows[static_cast<std::size_t>(k)];
    TrainConfig cfg = base;
    cfg.hidden_units = row.hidden_units;
    cfg.batch_size = row.batch_size;
    cfg.learning_rate = row.learning_rate;
    cfg.rng_seed = rng::derive(base.rng_seed, kGridStream, static_cast<std::uint64_t>(k));
    cfg.parallel = false;
    try {
      const TrainResult tr = train(train_set, val_set, cfg);
      const auto& best = tr.history.epochs[static_cast<std::size_t>(tr.history.best_epoch)];
      row.val_mse = best.val_loss;
      row.epochs_run = static_cast<int>(tr.history.epochs.size());
    } catch (const TrainingError& e) {
      row.diverged = true;
      row.val_mse = std::numeric_limits<double>::quiet_NaN();
      row.epochs_run = e.epoch() + 1;
      row.error = e.what();
    }
  }

  bool found = false;
  for (std::size_t k = 0; k < result.rows.size(); ++k) {
    const GridRow& r = result.rows[k];
    if (r.diverged) continue;
    if (!found || r.val_mse < result.rows[result.best].val_mse) {
      result.best = k;
      found = true;
    }
  }
  if (!found) throw TrainingError("grid_search: every cell diverged", 0);
  result.best_config = base;
  result.best_config.hidden_units = result.rows[result.best].hidden_units;
  result.best_config.batch_size = result.rows[result.best].batch_size;
  result.best_config.learning_rate = result.rows[result.best].learning_rate;
  return result;
}

std::string grid_csv(const GridResult& result) {
  std::ostringstream out;
  out << "hidden_units,batch_size,learning_rate,val_mse,epochs_run\n";
  for (const GridRow& r : result.rows)
    out << r.hidden_units << ',' << r.batch_size << ',' << csv::num(r.learning_rate) << ','
        << (r.diverged ? std::string("nan") : csv::num(r.val_mse)) << ',' << r.epochs_run << '\n';
  return out.str();
}

std::string history_csv(const TrainHistory& history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,train_accuracy,val_accuracy\n";
  for (const EpochRecord& e : history.epochs)
    out << e.epoch << ',' << csv::num(e.train_loss) << ',' << csv::num(e.val_loss) << ','
        << csv::num(e.train_accuracy) << ',' << csv::num(e.val_accuracy) << '\n';
  return out.str();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
                     {"max_epochs", c.max_epochs},       {"hidden_units", c.hidden_units},
                     {"rng_seed", c.rng_seed},           {"optimizer", optimizer_name(c.optimizer)},
                     {"beta1", c.beta1},                 {"beta2", c.beta2},
                     {"epsilon", c.epsilon},             {"clip_norm", c.clip_norm},
                     {"patience", c.patience}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.hidden_units = j.value("hidden_units", c.hidden_units);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    const std::string opt = j.value("optimizer", std::string(optimizer_name(c.optimizer)));
    if (opt == "adam")
      c.optimizer = Optimizer::Adam;
    else if (opt == "sgd")
      c.optimizer = Optimizer::Sgd;
    else
      throw ConfigError("unknown optimizer '" + opt + "'");
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.patience = j.value("patience", c.patience);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const TrainHistory& h) {
  auto epochs = nlohmann::json::array();
  for (const EpochRecord& e : h.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_loss", e.val_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"val_accuracy", e.val_accuracy}});
  j = nlohmann::json{{"best_epoch", h.best_epoch}, {"initial_val_loss", h.initial_val_loss}, {"epochs", epochs}};
}

void from_json(const nlohmann::json& j, TrainHistory& h) {
  h.best_epoch = j.at("best_epoch").get<int>();
  h.initial_val_loss = j.at("initial_val_loss").get<double>();
  h.epochs.clear();
  for (const auto& e : j.at("epochs"))
    h.epochs.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(), e.at("val_loss").get<double>(),
                        e.at("train_accuracy").get<double>(), e.at("val_accuracy").get<double>()});
}

void to_json(nlohmann::json& j, const Grid& g) {
  j = nlohmann::json{{"hidden_units", g.hidden_units}, {"batch_sizes", g.batch_sizes},
                     {"learning_rates", g.learning_rates}};
}

void from_json(const nlohmann::json& j, Grid& g) {
  try {
    g.hidden_units = j.value("hidden_units", g.hidden_units);
    g.batch_sizes = j.value("batch_sizes", g.batch_sizes);
    g.learning_rates = j.value("learning_rates", g.learning_rates);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

}  // namespace dwc::train
