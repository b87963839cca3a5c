#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dwc/matrix.hpp"

namespace dwc::lstm {

/// Weights of one gate: recurrent (H x H), input (H x D) and bias (H).
struct Gate {
  Matrix w_h;
  Matrix w_i;
  Vector b;
  bool operator==(const Gate&) const = default;
};

struct LstmCellParams {
  Gate forget;
  Gate input;
  Gate candidate;
  Gate output;

  static LstmCellParams zeros(std::size_t hidden, std::size_t input_width);
  std::size_t hidden() const { return forget.b.size(); }
  std::size_t input_width() const { return forget.w_i.cols; }
  /// Throws ArgumentError if any gate has inconsistent shapes.
  void check_shapes() const;
  bool operator==(const LstmCellParams&) const = default;
};

struct LstmState {
  Vector h;
  Vector c;
  static LstmState zeros(std::size_t hidden) { return {Vector(hidden, 0.0), Vector(hidden, 0.0)}; }
};

/// Activations of one consumed time step, kept for backpropagation.
struct GateCache {
  Vector x;
  Vector f;
  Vector i;
  Vector o;
  Vector cand;
  Vector c;
  Vector h;
};

inline constexpr std::size_t kInputWidth = 4;
inline constexpr std::size_t kOutputWidth = 2;

/// Two stacked LSTM layers feeding a linear head on the last hidden state.
struct NetworkParams {
  LstmCellParams layer1;  // D = 4
  LstmCellParams layer2;  // D = H
  Matrix dense_w;         // 2 x H
  Vector dense_b;         // 2

  std::size_t hidden_units() const { return layer1.hidden(); }
  static NetworkParams zeros(std::size_t hidden, std::size_t input_width = kInputWidth);
  void check_shapes() const;
  bool operator==(const NetworkParams&) const = default;
};

/// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, zero biases, from a portable seeded stream.
NetworkParams initialize(std::size_t hidden, std::uint64_t seed, std::size_t input_width = kInputWidth);

/// Every tensor of the parameter set, in a fixed order, as flat mutable spans.
std::vector<std::span<double>> tensors(NetworkParams& p);
std::vector<std::span<const double>> tensors(const NetworkParams& p);
/// Names matching tensors() order, e.g. "layer1.w_h_f".
std::vector<std::string> tensor_names();
std::size_t parameter_count(const NetworkParams& p);

double sigmoid(double z);

/// One step of the LSTM cell.
std::pair<LstmState, GateCache> cell_forward(const LstmCellParams& params, std::span<const double> x,
                                             const LstmState& prev);

/// Allocation-free variant used on the hot path; writes the step into `out`.
void cell_step(const LstmCellParams& params, std::span<const double> x, std::span<const double> h_prev,
               std::span<const double> c_prev, GateCache& out);

/// Per-sample forward activations for both layers.
struct ForwardTrace {
  std::vector<GateCache> layer1;
  std::vector<GateCache> layer2;
  std::array<double, kOutputWidth> output{};
};

/// Runs a window of l rows x D features (row-major) from zero state.
std::array<double, kOutputWidth> network_forward(const NetworkParams& params, std::span<const double> window);
void forward_trace(const NetworkParams& params, std::span<const double> window, ForwardTrace& trace);

/// Mean over rows of the summed squared error per row (divisor = number of rows).
double mse(const Matrix& y, const Matrix& y_hat);

/// Exact gradients of the batch MSE via backpropagation through time.
/// `traces[k]` must come from forward_trace on row k of the batch.
NetworkParams backward(const NetworkParams& params, std::span<const ForwardTrace> traces, const Matrix& labels);

struct LossAndGradient {
  double loss = 0.0;
  NetworkParams grad;
  Matrix predictions;
};

/// Forward + backward over a batch of rows. The parallel variant splits rows across
/// threads, gives each row its own gradient buffer and reduces them in row order, so
/// the result is bit-identical to the serial variant for any thread count.
LossAndGradient loss_and_gradient(const NetworkParams& params, const Matrix& features, const Matrix& labels,
                                  std::span<const std::size_t> rows, bool parallel = true);

}  // namespace dwc::lstm
