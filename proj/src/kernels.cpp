// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/kernels.hpp"

#include <Eigen/Core>
#include <omp.h>

#include "vipnerf/error.hpp"

namespace vipnerf::kernels {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

void check_sizes(GemmDims d, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  if (a.size() != d.m * d.k || b.size() != d.k * d.n || c.size() != d.m * d.n) {
    throw ShapeError("gemm: buffer sizes do not match dimensions");
  }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, GemmDims d, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
  check_sizes(d, a, b, c);
  if (d.m == 0 || d.n == 0) return;
  Map out(c.data(), d.m, d.n);
  if (!accumulate) out.setZero();
  if (d.k == 0) return;
  const auto lhs = trans_a ? ConstMap(a.data(), d.k, d.m) : ConstMap(a.data(), d.m, d.k);
  const auto rhs = trans_b ? ConstMap(b.data(), d.n, d.k) : ConstMap(b.data(), d.k, d.n);
  if (trans_a && trans_b) {
    out.noalias() += lhs.transpose() * rhs.transpose();
  } else if (trans_a) {
    out.noalias() += lhs.transpose() * rhs;
  } else if (trans_b) {
    out.noalias() += lhs * rhs.transpose();
  } else {
    out.noalias() += lhs * rhs;
  }
}

void gemm_reference(bool trans_a, bool trans_b, GemmDims d, std::span<const double> a,
                    std::span<const double> b, std::span<double> c, bool accumulate) {
  check_sizes(d, a, b, c);
  for (size_t i = 0; i < d.m; ++i) {
    for (size_t j = 0; j < d.n; ++j) {
      double acc = 0.0;
      for (size_t p = 0; p < d.k; ++p) {
        const double av = trans_a ? a[p * d.m + i] : a[i * d.k + p];
        const double bv = trans_b ? b[j * d.k + p] : b[p * d.n + j];
        acc += av * bv;
      }
      c[i * d.n + j] = accumulate ? c[i * d.n + j] + acc : acc;
    }
  }
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace vipnerf::kernels
