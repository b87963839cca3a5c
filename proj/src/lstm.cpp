#include "dwc/lstm.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dwc/error.hpp"
#include "dwc/kernels.hpp"
#include "dwc/rng.hpp"

namespace dwc::lstm {

namespace {

Gate zero_gate(std::size_t hidden, std::size_t input_width) {
  return {Matrix(hidden, hidden), Matrix(hidden, input_width), Vector(hidden, 0.0)};
}

void check_gate(const Gate& g, std::size_t hidden, std::size_t input_width) {
  if (g.w_h.rows != hidden || g.w_h.cols != hidden || g.w_i.rows != hidden || g.w_i.cols != input_width ||
      g.b.size() != hidden)
    throw ArgumentError("LSTM gate shape mismatch");
}

template <typename Cell, typename Fn>
void for_each_gate(Cell& cell, Fn&& fn) {
  fn(cell.forget);
  fn(cell.input);
  fn(cell.candidate);
  fn(cell.output);
}

// z = W_h h + W_i x + b
void preactivation(const Gate& g, std::span<const double> x, std::span<const double> h, std::span<double> z) {
  kernels::gemv(g.w_h, h, z);
  kernels::gemv(g.w_i, x, z, true);
  for (std::size_t k = 0; k < z.size(); ++k) z[k] += g.b[k];
}

void resize_cache(GateCache& c, std::size_t hidden, std::size_t input_width) {
  c.x.resize(input_width);
  c.f.resize(hidden);
  c.i.resize(hidden);
  c.o.resize(hidden);
  c.cand.resize(hidden);
  c.c.resize(hidden);
  c.h.resize(hidden);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

void add_into(NetworkParams& total, const NetworkParams& part) {
  auto dst = tensors(total);
  const auto src = tensors(part);
  for (std::size_t t = 0; t < dst.size(); ++t)
    for (std::size_t k = 0; k < dst[t].size(); ++k) dst[t][k] += src[t][k];
}

void zero_fill(NetworkParams& p) {
  for (auto t : tensors(p)) std::fill(t.begin(), t.end(), 0.0);
}

// Backpropagation through one layer. dh_ext holds the gradient arriving at each
// h_t from above (one row per step); dx, when non-null, receives dL/dx_t per step.
void layer_backward(const LstmCellParams& p, std::span<const GateCache> steps, const Matrix& dh_ext,
                    LstmCellParams& g, Matrix* dx) {
  const std::size_t hidden = p.hidden();
  Vector dh(hidden), dc(hidden), dh_next(hidden, 0.0), dc_next(hidden, 0.0);
  Vector a_f(hidden), a_i(hidden), a_c(hidden), a_o(hidden);
  const Vector zeros(hidden, 0.0);
  if (dx) std::fill(dx->data.begin(), dx->data.end(), 0.0);

  for (std::size_t t = steps.size(); t-- > 0;) {
    const GateCache& s = steps[t];
    const Vector& c_prev = t > 0 ? steps[t - 1].c : zeros;
    const Vector& h_prev = t > 0 ? steps[t - 1].h : zeros;
    for (std::size_t k = 0; k < hidden; ++k) {
      dh[k] = dh_ext(t, k) + dh_next[k];
      const double tc = std::tanh(s.c[k]);
      const double d_o = dh[k] * tc;
      dc[k] = dc_next[k] + dh[k] * s.o[k] * (1.0 - tc * tc);
      a_f[k] = dc[k] * c_prev[k] * s.f[k] * (1.0 - s.f[k]);
      a_i[k] = dc[k] * s.cand[k] * s.i[k] * (1.0 - s.i[k]);
      a_c[k] = dc[k] * s.i[k] * (1.0 - s.cand[k] * s.cand[k]);
      a_o[k] = d_o * s.o[k] * (1.0 - s.o[k]);
      dc_next[k] = dc[k] * s.f[k];
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    const std::pair<const Gate*, Gate*> gates[] = {
        {&p.forget, &g.forget}, {&p.input, &g.input}, {&p.candidate, &g.candidate}, {&p.output, &g.output}};
    const Vector* deltas[] = {&a_f, &a_i, &a_c, &a_o};
    for (std::size_t q = 0; q < 4; ++q) {
      const Gate& w = *gates[q].first;
      Gate& gw = *gates[q].second;
      const Vector& a = *deltas[q];
      kernels::outer_acc(gw.w_h, a, h_prev);
      kernels::outer_acc(gw.w_i, a, s.x);
      for (std::size_t k = 0; k < hidden; ++k) gw.b[k] += a[k];
      kernels::gemv_t_acc(w.w_h, a, dh_next);
      if (dx) kernels::gemv_t_acc(w.w_i, a, dx->row(t));
    }
  }
}

// Backward for one sample given the upstream gradient on the network output.
void sample_backward(const NetworkParams& params, const ForwardTrace& tr,
                     std::span<const double> d_out, NetworkParams& g) {
  const std::size_t hidden = params.hidden_units();
  const std::size_t steps = tr.layer2.size();
  const Vector& h_last = tr.layer2.back().h;

  kernels::outer_acc(g.dense_w, d_out, h_last);
  for (std::size_t k = 0; k < kOutputWidth; ++k) g.dense_b[k] += d_out[k];

  Matrix dh2(steps, hidden);
  kernels::gemv_t_acc(params.dense_w, d_out, dh2.row(steps - 1));
  Matrix dh1(steps, hidden);
  layer_backward(params.layer2, tr.layer2, dh2, g.layer2, &dh1);
  layer_backward(params.layer1, tr.layer1, dh1, g.layer1, nullptr);
}

}  // namespace

LstmCellParams LstmCellParams::zeros(std::size_t hidden, std::size_t input_width) {
  return {zero_gate(hidden, input_width), zero_gate(hidden, input_width), zero_gate(hidden, input_width),
          zero_gate(hidden, input_width)};
}

void LstmCellParams::check_shapes() const {
  const std::size_t h = hidden();
  const std::size_t d = input_width();
  if (h == 0) throw ArgumentError("LSTM cell with zero hidden units");
  for_each_gate(*this, [&](const Gate& g) { check_gate(g, h, d); });
}

NetworkParams NetworkParams::zeros(std::size_t hidden, std::size_t input_width) {
  return {LstmCellParams::zeros(hidden, input_width), LstmCellParams::zeros(hidden, hidden),
          Matrix(kOutputWidth, hidden), Vector(kOutputWidth, 0.0)};
}

void NetworkParams::check_shapes() const {
  layer1.check_shapes();
  layer2.check_shapes();
  const std::size_t h = layer1.hidden();
  if (layer2.input_width() != h || layer2.hidden() != h)
    throw ArgumentError("layer 2 must read layer 1's hidden width");
  if (dense_w.rows != kOutputWidth || dense_w.cols != h || dense_b.size() != kOutputWidth)
    throw ArgumentError("dense head shape mismatch");
}

NetworkParams initialize(std::size_t hidden, std::uint64_t seed, std::size_t input_width) {
  if (hidden == 0) throw ArgumentError("initialize: hidden units must be positive");
  NetworkParams p = NetworkParams::zeros(hidden, input_width);
  std::mt19937_64 eng(rng::derive(seed, 0x1157));
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto fill = [&](Matrix& m) {
    for (double& v : m.data) v = rng::uniform(eng, -bound, bound);
  };
  for (LstmCellParams* cell : {&p.layer1, &p.layer2})
    for_each_gate(*cell, [&](Gate& g) {
      fill(g.w_h);
      fill(g.w_i);
    });
  fill(p.dense_w);
  return p;
}

std::vector<std::span<double>> tensors(NetworkParams& p) {
  std::vector<std::span<double>> out;
  for (LstmCellParams* cell : {&p.layer1, &p.layer2})
    for_each_gate(*cell, [&](Gate& g) {
      out.emplace_back(g.w_h.data);
      out.emplace_back(g.w_i.data);
      out.emplace_back(g.b);
    });
  out.emplace_back(p.dense_w.data);
  out.emplace_back(p.dense_b);
  return out;
}

std::vector<std::span<const double>> tensors(const NetworkParams& p) {
  auto mutable_spans = tensors(const_cast<NetworkParams&>(p));
  return {mutable_spans.begin(), mutable_spans.end()};
}

std::vector<std::string> tensor_names() {
  std::vector<std::string> out;
  for (const char* layer : {"layer1", "layer2"})
    for (const char* gate : {"f", "i", "c", "o"}) {
      out.push_back(std::string(layer) + ".w_h_" + gate);
      out.push_back(std::string(layer) + ".w_i_" + gate);
      out.push_back(std::string(layer) + ".b_" + gate);
    }
  out.emplace_back("dense_w");
  out.emplace_back("dense_b");
  return out;
}

std::size_t parameter_count(const NetworkParams& p) {
  std::size_t n = 0;
  for (auto t : tensors(p)) n += t.size();
  return n;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void cell_step(const LstmCellParams& params, std::span<const double> x, std::span<const double> h_prev,
               std::span<const double> c_prev, GateCache& out) {
  const std::size_t hidden = params.hidden();
  resize_cache(out, hidden, x.size());
  std::copy(x.begin(), x.end(), out.x.begin());
  preactivation(params.forget, x, h_prev, out.f);
  preactivation(params.input, x, h_prev, out.i);
  preactivation(params.candidate, x, h_prev, out.cand);
  preactivation(params.output, x, h_prev, out.o);
  for (std::size_t k = 0; k < hidden; ++k) {
    out.f[k] = sigmoid(out.f[k]);
    out.i[k] = sigmoid(out.i[k]);
    out.cand[k] = std::tanh(out.cand[k]);
    out.o[k] = sigmoid(out.o[k]);
    out.c[k] = out.f[k] * c_prev[k] + out.i[k] * out.cand[k];
    out.h[k] = std::tanh(out.c[k]) * out.o[k];
  }
}

std::pair<LstmState, GateCache> cell_forward(const LstmCellParams& params, std::span<const double> x,
                                             const LstmState& prev) {
  params.check_shapes();
  if (x.size() != params.input_width()) throw ArgumentError("cell_forward: input width mismatch");
  if (prev.h.size() != params.hidden() || prev.c.size() != params.hidden())
    throw ArgumentError("cell_forward: state width mismatch");
  if (!all_finite(x) || !all_finite(prev.h) || !all_finite(prev.c))
    throw NumericError("cell_forward: non-finite input");
  GateCache cache;
  cell_step(params, x, prev.h, prev.c, cache);
  return {LstmState{cache.h, cache.c}, std::move(cache)};
}

void forward_trace(const NetworkParams& params, std::span<const double> window, ForwardTrace& trace) {
  const std::size_t width = params.layer1.input_width();
  if (window.empty() || window.size() % width != 0)
    throw ArgumentError("network_forward: window is not a whole number of feature rows");
  const std::size_t steps = window.size() / width;
  const std::size_t hidden = params.hidden_units();
  trace.layer1.resize(steps);
  trace.layer2.resize(steps);
  const Vector zeros(hidden, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    const GateCache* prev = t > 0 ? &trace.layer1[t - 1] : nullptr;
    cell_step(params.layer1, window.subspan(t * width, width), prev ? prev->h : zeros, prev ? prev->c : zeros,
              trace.layer1[t]);
  }
  for (std::size_t t = 0; t < steps; ++t) {
    const GateCache* prev = t > 0 ? &trace.layer2[t - 1] : nullptr;
    cell_step(params.layer2, trace.layer1[t].h, prev ? prev->h : zeros, prev ? prev->c : zeros,
              trace.layer2[t]);
  }
  kernels::gemv(params.dense_w, trace.layer2.back().h, trace.output);
  for (std::size_t k = 0; k < kOutputWidth; ++k) trace.output[k] += params.dense_b[k];
}

std::array<double, kOutputWidth> network_forward(const NetworkParams& params, std::span<const double> window) {
  params.check_shapes();
  ForwardTrace trace;
  forward_trace(params, window, trace);
  return trace.output;
}

double mse(const Matrix& y, const Matrix& y_hat) {
  if (y.rows != y_hat.rows || y.cols != y_hat.cols) throw ArgumentError("mse: shape mismatch");
  if (y.rows == 0) throw ArgumentError("mse: empty input");
  double total = 0.0;
  for (std::size_t r = 0; r < y.rows; ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < y.cols; ++c) {
      const double d = y(r, c) - y_hat(r, c);
      row += d * d;
    }
    total += row;
  }
  return total / static_cast<double>(y.rows);
}

NetworkParams backward(const NetworkParams& params, std::span<const ForwardTrace> traces, const Matrix& labels) {
  if (traces.size() != labels.rows || labels.cols != kOutputWidth || traces.empty())
    throw InternalError("backward: traces and labels disagree");
  const std::size_t hidden = params.hidden_units();
  NetworkParams grad = NetworkParams::zeros(hidden, params.layer1.input_width());
  NetworkParams part = grad;
  const double scale = 2.0 / static_cast<double>(traces.size());
  for (std::size_t r = 0; r < traces.size(); ++r) {
    const ForwardTrace& tr = traces[r];
    if (tr.layer1.empty() || tr.layer1.size() != tr.layer2.size() || tr.layer2.back().h.size() != hidden)
      throw InternalError("backward: trace does not match parameters");
    const std::array<double, kOutputWidth> d_out{scale * (tr.output[0] - labels(r, 0)),
                                                 scale * (tr.output[1] - labels(r, 1))};
    zero_fill(part);
    sample_backward(params, tr, d_out, part);
    add_into(grad, part);
  }
  return grad;
}

LossAndGradient loss_and_gradient(const NetworkParams& params, const Matrix& features, const Matrix& labels,
                                  std::span<const std::size_t> rows, bool parallel) {
  if (rows.empty()) throw ArgumentError("loss_and_gradient: empty batch");
  if (features.rows != labels.rows || labels.cols != kOutputWidth)
    throw ArgumentError("loss_and_gradient: features and labels disagree");
  const std::size_t n = rows.size();
  const std::size_t hidden = params.hidden_units();
  const double scale = 2.0 / static_cast<double>(n);

  LossAndGradient out{0.0, NetworkParams::zeros(hidden, params.layer1.input_width()), Matrix(n, kOutputWidth)};
  std::vector<double> losses(n);

  auto run_row = [&](std::size_t k, ForwardTrace& tr, NetworkParams& g) {
    const std::size_t r = rows[k];
    forward_trace(params, features.row(r), tr);
    const std::array<double, kOutputWidth> d_out{scale * (tr.output[0] - labels(r, 0)),
                                                 scale * (tr.output[1] - labels(r, 1))};
    losses[k] = (tr.output[0] - labels(r, 0)) * (tr.output[0] - labels(r, 0)) +
                (tr.output[1] - labels(r, 1)) * (tr.output[1] - labels(r, 1));
    out.predictions(k, 0) = tr.output[0];
    out.predictions(k, 1) = tr.output[1];
    zero_fill(g);
    sample_backward(params, tr, d_out, g);
  };

  const int threads = parallel ? std::min<int>(kernels::max_threads(), static_cast<int>(n)) : 1;
  if (threads <= 1) {
    ForwardTrace tr;
    NetworkParams g = out.grad;
    for (std::size_t k = 0; k < n; ++k) {
      run_row(k, tr, g);
      add_into(out.grad, g);
    }
  } else {
    std::vector<NetworkParams> per_row(n, out.grad);
    const auto ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel num_threads(threads)
    {
      ForwardTrace tr;
#pragma omp for schedule(static)
      for (std::ptrdiff_t k = 0; k < ni; ++k) run_row(static_cast<std::size_t>(k), tr, per_row[k]);
    }
    for (const auto& g : per_row) add_into(out.grad, g);
  }
  double total = 0.0;
  for (double l : losses) total += l;
  out.loss = total / static_cast<double>(n);
  return out;
}

}  // namespace dwc::lstm
