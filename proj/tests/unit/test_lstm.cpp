#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "dwc/error.hpp"
#include "dwc/lstm.hpp"
#include "oracles.hpp"

using namespace dwc;
using namespace dwc::lstm;

namespace {

LstmCellParams random_cell(std::size_t H, std::size_t D, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto p = LstmCellParams::zeros(H, D);
  for (Gate* g : {&p.forget, &p.input, &p.candidate, &p.output}) {
    for (double& v : g->w_h.data) v = u(eng);
    for (double& v : g->w_i.data) v = u(eng);
    for (double& v : g->b) v = u(eng);
  }
  return p;
}

Vector random_vec(std::size_t n, std::mt19937_64& eng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (double& x : v) x = u(eng);
  return v;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

}  // namespace

TEST(Cell, ZeroParamsZeroState) {
  const auto p = LstmCellParams::zeros(3, 4);
  const auto [s, cache] = cell_forward(p, Vector(4, 0.7), LstmState::zeros(3));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(cache.f[k], 0.5);
    EXPECT_EQ(cache.i[k], 0.5);
    EXPECT_EQ(cache.o[k], 0.5);
    EXPECT_EQ(cache.cand[k], 0.0);
    EXPECT_EQ(s.c[k], 0.0);
    EXPECT_EQ(s.h[k], 0.0);
  }
}

TEST(Cell, ZeroParamsUnitCell) {
  const auto p = LstmCellParams::zeros(2, 4);
  const auto [s, cache] = cell_forward(p, Vector(4, 0.0), LstmState{Vector(2, 0.0), Vector(2, 1.0)});
  EXPECT_EQ(s.c[0], 0.5);
  EXPECT_NEAR(s.h[0], 0.5 * std::tanh(0.5), 1e-15);
  EXPECT_NEAR(s.h[1], 0.23106, 1e-5);
}

TEST(Cell, MatchesScalarOracle) {
  std::mt19937_64 eng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t H = 1 + static_cast<std::size_t>(trial % 7);
    const std::size_t D = 1 + static_cast<std::size_t>(trial % 5);
    const auto p = random_cell(H, D, eng);
    const auto x = random_vec(D, eng), h = random_vec(H, eng), c = random_vec(H, eng, -2.0, 2.0);
    const auto [s, cache] = cell_forward(p, x, LstmState{h, c});
    const auto o = oracle::cell(p, x, h, c);
    for (std::size_t k = 0; k < H; ++k) {
      EXPECT_NEAR(cache.f[k], o.f[k], 1e-12);
      EXPECT_NEAR(cache.i[k], o.i[k], 1e-12);
      EXPECT_NEAR(cache.o[k], o.o[k], 1e-12);
      EXPECT_NEAR(cache.cand[k], o.cand[k], 1e-12);
      EXPECT_NEAR(s.c[k], o.c[k], 1e-12);
      EXPECT_NEAR(s.h[k], o.h[k], 1e-12);
    }
  }
}

TEST(Cell, GateRanges) {
  std::mt19937_64 eng(12);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_cell(5, 4, eng);
    for (double& v : p.forget.b) v *= 20.0;
    const auto c = random_vec(5, eng, -3.0, 3.0);
    const auto [s, cache] = cell_forward(p, random_vec(4, eng, -10, 10), LstmState{random_vec(5, eng), c});
    for (std::size_t k = 0; k < 5; ++k) {
      for (double g : {cache.f[k], cache.i[k], cache.o[k]}) {
        EXPECT_GE(g, 0.0);
        EXPECT_LE(g, 1.0);
      }
      EXPECT_LE(std::abs(cache.cand[k]), 1.0);
      EXPECT_LE(std::abs(s.h[k]), 1.0);
      EXPECT_LE(std::abs(s.c[k]), std::abs(c[k]) + 1.0);
    }
  }
}

TEST(Cell, SigmoidIsStable) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_NEAR(sigmoid(-745.0), 0.0, 1e-300);
}

TEST(Cell, Errors) {
  const auto p = LstmCellParams::zeros(2, 4);
  EXPECT_THROW(cell_forward(p, Vector(3, 0.0), LstmState::zeros(2)), ArgumentError);
  EXPECT_THROW(cell_forward(p, Vector(4, 0.0), LstmState::zeros(3)), ArgumentError);
  Vector bad(4, 0.0);
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(cell_forward(p, bad, LstmState::zeros(2)), NumericError);
  EXPECT_THROW(LstmCellParams::zeros(0, 4).check_shapes(), ArgumentError);
}

TEST(Network, ZeroParamsReturnDenseBias) {
  auto p = NetworkParams::zeros(6);
  p.dense_b = {0.25, -0.75};
  const auto y = network_forward(p, Vector(40, 0.3));
  EXPECT_EQ(y[0], 0.25);
  EXPECT_EQ(y[1], -0.75);
}

TEST(Network, MatchesUnrolledOracle) {
  std::mt19937_64 eng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t H = 1 + static_cast<std::size_t>(trial % 6);
    const std::size_t L = 1 + static_cast<std::size_t>(trial % 10);
    const auto p = oracle::random_params(H, 4, eng);
    const auto w = random_vec(L * 4, eng, 0.0, 1.0);
    const auto y = network_forward(p, w);
    const auto o = oracle::network(p, w);
    EXPECT_NEAR(y[0], o[0], 1e-12);
    EXPECT_NEAR(y[1], o[1], 1e-12);
    ForwardTrace tr;
    forward_trace(p, w, tr);
    EXPECT_EQ(tr.output, y);
    EXPECT_EQ(tr.layer1.size(), L);
    EXPECT_EQ(tr.layer2.size(), L);
  }
  const auto p = NetworkParams::zeros(2);
  EXPECT_THROW(network_forward(p, Vector(7, 0.0)), ArgumentError);
}

TEST(Network, SingleStepWindow) {
  std::mt19937_64 eng(14);
  const auto p = oracle::random_params(3, 4, eng);
  const auto w = random_vec(4, eng);
  const auto s1 = oracle::cell(p.layer1, w, Vector(3, 0.0), Vector(3, 0.0));
  const auto s2 = oracle::cell(p.layer2, s1.h, Vector(3, 0.0), Vector(3, 0.0));
  const auto y = network_forward(p, w);
  for (std::size_t r = 0; r < 2; ++r) {
    double e = p.dense_b[r];
    for (std::size_t k = 0; k < 3; ++k) e += p.dense_w(r, k) * s2.h[k];
    EXPECT_NEAR(y[r], e, 1e-12);
  }
}

TEST(Initialize, RangesAndDeterminism) {
  const auto a = initialize(16, 5);
  const auto b = initialize(16, 5);
  const auto c = initialize(16, 6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  const double bound = 1.0 / std::sqrt(16.0);
  for (const auto& g : {a.layer1.forget, a.layer2.output}) {
    for (double v : g.w_h.data) EXPECT_LE(std::abs(v), bound);
    for (double v : g.b) EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(tensors(a).size(), tensor_names().size());
  EXPECT_EQ(tensor_names().front(), "layer1.w_h_f");
  // 4 gates x (H*H + H*D + H) per layer, plus the head.
  EXPECT_EQ(parameter_count(a), 4 * (256 + 64 + 16) + 4 * (256 + 256 + 16) + 32 + 2);
  EXPECT_THROW(initialize(0, 1), ArgumentError);
}

TEST(Mse, Cases) {
  Matrix y(3, 2);
  y.data = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  EXPECT_EQ(mse(y, y), 0.0);
  Matrix a(1, 2, 0.0), b(1, 2, 1.0);
  EXPECT_EQ(mse(a, b), 2.0);
  std::mt19937_64 eng(15);
  Matrix p(50, 2), q(50, 2);
  p.data = random_vec(100, eng);
  q.data = random_vec(100, eng);
  double naive = 0.0;
  for (std::size_t r = 0; r < 50; ++r)
    for (std::size_t c = 0; c < 2; ++c) naive += (p(r, c) - q(r, c)) * (p(r, c) - q(r, c));
  EXPECT_NEAR(mse(p, q), naive / 50.0, 1e-14);
  EXPECT_THROW(mse(a, Matrix(2, 2)), ArgumentError);
  EXPECT_THROW(mse(Matrix(0, 2), Matrix(0, 2)), ArgumentError);
}

TEST(Backward, ZeroErrorGivesZeroHeadBiasGradient) {
  std::mt19937_64 eng(16);
  const auto p = oracle::random_params(3, 4, eng);
  Matrix f(1, 8);
  f.data = random_vec(8, eng);
  const auto y = network_forward(p, f.row(0));
  Matrix labels(1, 2);
  labels.data = {y[0], y[1]};
  const std::vector<std::size_t> rows{0};
  const auto lg = loss_and_gradient(p, f, labels, rows, false);
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_EQ(lg.grad.dense_b[0], 0.0);
  EXPECT_EQ(lg.grad.dense_b[1], 0.0);
}

TEST(Backward, ClosedFormSingleUnit) {
  const double beta = 0.7;
  auto p = NetworkParams::zeros(1);
  p.layer2.candidate.b[0] = beta;
  p.dense_w(0, 0) = 1.0;
  Matrix f(1, 4, 0.0), labels(1, 2, 0.0);
  const std::vector<std::size_t> rows{0};
  const auto lg = loss_and_gradient(p, f, labels, rows, false);
  const double c = 0.5 * std::tanh(beta);
  const double y0 = 0.5 * std::tanh(c);
  EXPECT_NEAR(lg.predictions(0, 0), y0, 1e-15);
  EXPECT_NEAR(lg.loss, y0 * y0, 1e-15);
  const double expected = 2.0 * y0 * 0.5 * (1.0 - std::tanh(c) * std::tanh(c)) * 0.5 * (1.0 - std::tanh(beta) * std::tanh(beta));
  EXPECT_NEAR(lg.grad.layer2.candidate.b[0], expected, 1e-14);
}

TEST(Backward, FiniteDifferences) {
  std::mt19937_64 eng(17);
  const double eps = 1e-5;
  int networks = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t H = 1 + static_cast<std::size_t>(trial % 4);
    const std::size_t L = 1 + static_cast<std::size_t>((trial / 4) % 3);
    const std::size_t B = 1 + static_cast<std::size_t>(trial % 3);
    auto p = oracle::random_params(H, 4, eng);
    Matrix feats(B, L * 4), labels(B, 2);
    feats.data = random_vec(B * L * 4, eng, 0.0, 1.0);
    labels.data = random_vec(B * 2, eng, 0.0, 1.0);
    std::vector<std::vector<double>> wins, labs;
    for (std::size_t r = 0; r < B; ++r) {
      wins.emplace_back(feats.row(r).begin(), feats.row(r).end());
      labs.emplace_back(labels.row(r).begin(), labels.row(r).end());
    }
    std::vector<std::size_t> rows(B);
    std::iota(rows.begin(), rows.end(), 0);
    const auto lg = loss_and_gradient(p, feats, labels, rows, false);
    EXPECT_NEAR(lg.loss, oracle::batch_loss(p, wins, labs), 1e-12);
    auto params = tensors(p);
    const auto grads = tensors(lg.grad);
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t k = 0; k < params[t].size(); ++k) {
        const double keep = params[t][k];
        params[t][k] = keep + eps;
        const double up = oracle::batch_loss(p, wins, labs);
        params[t][k] = keep - eps;
        const double down = oracle::batch_loss(p, wins, labs);
        params[t][k] = keep;
        const double numeric = (up - down) / (2.0 * eps);
        const double e = rel_err(grads[t][k], numeric);
        worst = std::max(worst, e);
        ASSERT_LE(e, 1e-4) << tensor_names()[t] << "[" << k << "] analytic " << grads[t][k] << " numeric "
                           << numeric;
      }
    }
    ++networks;
  }
  EXPECT_EQ(networks, 100);
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Backward, ParallelMatchesSerialBitwise) {
  std::mt19937_64 eng(18);
  const auto p = oracle::random_params(12, 4, eng, 0.3);
  Matrix feats(64, 40), labels(64, 2);
  feats.data = random_vec(feats.data.size(), eng, 0.0, 1.0);
  labels.data = random_vec(labels.data.size(), eng, 0.0, 1.0);
  std::vector<std::size_t> rows{5, 3, 60, 1, 17, 17, 40, 22, 9, 0, 63, 31, 12, 44, 50, 2};
  const auto a = loss_and_gradient(p, feats, labels, rows, false);
  const auto b = loss_and_gradient(p, feats, labels, rows, true);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.grad, b.grad);
  EXPECT_EQ(a.predictions, b.predictions);
}

TEST(Backward, Errors) {
  const auto p = NetworkParams::zeros(2);
  Matrix f(2, 8), l(2, 2);
  EXPECT_THROW(loss_and_gradient(p, f, l, std::vector<std::size_t>{}), ArgumentError);
  EXPECT_THROW(loss_and_gradient(p, f, Matrix(3, 2), std::vector<std::size_t>{0}), ArgumentError);
}
