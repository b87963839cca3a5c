#pragma once

#include <span>

#include "dwc/matrix.hpp"

// Dense kernels used by the LSTM and the field sampler. The default entry points
// are OpenMP-parallel over independent output elements; each output element is
// accumulated in the same order as the serial reference, so both variants are
// bit-identical. `reference` holds the plain serial loops kept for testing and
// benchmarking.
namespace dwc::kernels {

/// y = A x when accumulate is false, y += A x otherwise.
void gemv(const Matrix& a, std::span<const double> x, std::span<double> y, bool accumulate = false);

/// y += A^T x
void gemv_t_acc(const Matrix& a, std::span<const double> x, std::span<double> y);

/// G += u v^T
void outer_acc(Matrix& g, std::span<const double> u, std::span<const double> v);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> a, std::span<const double> b);

/// Below this many output elements the parallel kernels run serially.
inline constexpr std::size_t kParallelThreshold = 256;

namespace reference {
void gemv(const Matrix& a, std::span<const double> x, std::span<double> y, bool accumulate = false);
void gemv_t_acc(const Matrix& a, std::span<const double> x, std::span<double> y);
void outer_acc(Matrix& g, std::span<const double> u, std::span<const double> v);
}  // namespace reference

/// Number of worker threads honoring the DWC_SIM_THREADS cap.
int max_threads();

}  // namespace dwc::kernels
