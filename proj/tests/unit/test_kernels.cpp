#include <gtest/gtest.h>

#include <random>

#include "dwc/error.hpp"
#include "dwc/kernels.hpp"

using dwc::Matrix;
namespace k = dwc::kernels;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data) v = u(eng);
  return m;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(eng);
  return v;
}

}  // namespace

// Sizes straddle the parallel threshold so both code paths are exercised.
class KernelShapes : public ::testing::TestWithParam<std::pair<std::size_t, std::size_t>> {};

TEST_P(KernelShapes, ParallelMatchesReferenceBitwise) {
  const auto [rows, cols] = GetParam();
  std::mt19937_64 eng(rows * 1000 + cols);
  const Matrix a = random_matrix(rows, cols, eng);
  const auto x = random_vector(cols, eng);
  const auto xr = random_vector(rows, eng);

  std::vector<double> y1(rows, 0.5), y2(rows, 0.5);
  k::gemv(a, x, y1, true);
  k::reference::gemv(a, x, y2, true);
  EXPECT_EQ(y1, y2);

  std::vector<double> z1(cols, -0.25), z2(cols, -0.25);
  k::gemv_t_acc(a, xr, z1);
  k::reference::gemv_t_acc(a, xr, z2);
  EXPECT_EQ(z1, z2);

  Matrix g1 = a, g2 = a;
  k::outer_acc(g1, xr, x);
  k::reference::outer_acc(g2, xr, x);
  EXPECT_EQ(g1, g2);
}

INSTANTIATE_TEST_SUITE_P(Sizes, KernelShapes,
                         ::testing::Values(std::make_pair(3, 5), std::make_pair(40, 44), std::make_pair(300, 7),
                                           std::make_pair(7, 300), std::make_pair(480, 241)));

TEST(Kernels, GemvMatchesNaiveSum) {
  std::mt19937_64 eng(3);
  const Matrix a = random_matrix(6, 4, eng);
  const auto x = random_vector(4, eng);
  std::vector<double> y(6);
  k::gemv(a, x, y);
  for (std::size_t r = 0; r < 6; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 4; ++c) s += a(r, c) * x[c];
    EXPECT_NEAR(y[r], s, 1e-15);
  }
}

TEST(Kernels, ShapeMismatchThrows) {
  Matrix a(3, 2);
  std::vector<double> x(3), y(3);
  EXPECT_THROW(k::gemv(a, x, y), dwc::ArgumentError);
  EXPECT_THROW(k::outer_acc(a, x, x), dwc::ArgumentError);
}

TEST(Kernels, ThreadCapFromEnvironment) {
  ::setenv("DWC_SIM_THREADS", "1", 1);
  EXPECT_EQ(k::max_threads(), 1);
  ::setenv("DWC_SIM_THREADS", "lots", 1);
  EXPECT_THROW(k::max_threads(), dwc::ConfigError);
  ::unsetenv("DWC_SIM_THREADS");
  EXPECT_GE(k::max_threads(), 1);
}
