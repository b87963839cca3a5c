#include "dwc/kernels.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

#include "dwc/error.hpp"

namespace dwc::kernels {

namespace {

void check_gemv(const Matrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.cols || y.size() != a.rows) throw ArgumentError("gemv: shape mismatch");
}

void check_gemv_t(const Matrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.rows || y.size() != a.cols) throw ArgumentError("gemv_t: shape mismatch");
}

void check_outer(const Matrix& g, std::span<const double> u, std::span<const double> v) {
  if (u.size() != g.rows || v.size() != g.cols) throw ArgumentError("outer: shape mismatch");
}

}  // namespace

void gemv(const Matrix& a, std::span<const double> x, std::span<double> y, bool accumulate) {
  check_gemv(a, x, y);
  if (a.rows < kParallelThreshold) {
    reference::gemv(a, x, y, accumulate);
    return;
  }
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
  const std::size_t cols = a.cols;
  const double* w = a.data.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    double acc = accumulate ? y[r] : 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

void gemv_t_acc(const Matrix& a, std::span<const double> x, std::span<double> y) {
  check_gemv_t(a, x, y);
  if (a.cols < kParallelThreshold) {
    reference::gemv_t_acc(a, x, y);
    return;
  }
  const std::size_t rows = a.rows;
  const std::size_t cols = a.cols;
  const double* w = a.data.data();
  // Each thread owns a contiguous column block and walks the rows in order.
#pragma omp parallel
  {
    const auto nt = static_cast<std::size_t>(omp_get_num_threads());
    const auto t = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t begin = cols * t / nt;
    const std::size_t end = cols * (t + 1) / nt;
    for (std::size_t r = 0; r < rows; ++r) {
      const double xr = x[r];
      const double* ar = w + r * cols;
      for (std::size_t c = begin; c < end; ++c) y[c] += ar[c] * xr;
    }
  }
}

void outer_acc(Matrix& g, std::span<const double> u, std::span<const double> v) {
  check_outer(g, u, v);
  if (g.rows < kParallelThreshold) {
    reference::outer_acc(g, u, v);
    return;
  }
  const auto rows = static_cast<std::ptrdiff_t>(g.rows);
  const std::size_t cols = g.cols;
  double* d = g.data.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const double ur = u[r];
    double* gr = d + r * cols;
    for (std::size_t c = 0; c < cols; ++c) gr[c] += ur * v[c];
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw ArgumentError("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

namespace reference {

void gemv(const Matrix& a, std::span<const double> x, std::span<double> y, bool accumulate) {
  check_gemv(a, x, y);
  const double* w = a.data.data();
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* wr = w + r * a.cols;
    double acc = accumulate ? y[r] : 0.0;
    for (std::size_t c = 0; c < a.cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

// For each y[c] the additions happen in increasing r, as in the parallel version.
void gemv_t_acc(const Matrix& a, std::span<const double> x, std::span<double> y) {
  check_gemv_t(a, x, y);
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double xr = x[r];
    const double* ar = a.data.data() + r * a.cols;
    for (std::size_t c = 0; c < a.cols; ++c) y[c] += ar[c] * xr;
  }
}

void outer_acc(Matrix& g, std::span<const double> u, std::span<const double> v) {
  check_outer(g, u, v);
  for (std::size_t r = 0; r < g.rows; ++r) {
    const double ur = u[r];
    double* gr = g.data.data() + r * g.cols;
    for (std::size_t c = 0; c < g.cols; ++c) gr[c] += ur * v[c];
  }
}

}  // namespace reference

int max_threads() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("DWC_SIM_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1 && cap < n) n = cap;
    } catch (const std::exception&) {
      throw ConfigError(std::string("DWC_SIM_THREADS is not an integer: ") + env);
    }
  }
  return n;
}

}  // namespace dwc::kernels
