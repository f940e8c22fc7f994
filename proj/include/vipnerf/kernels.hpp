// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

namespace vipnerf::kernels {

struct GemmDims {
  size_t m = 0;  // rows of op(A) and C
  size_t n = 0;  // cols of op(B) and C
  size_t k = 0;  // inner dimension
};

/// C (m x n, row-major) = op(A) * op(B), or C += op(A) * op(B) when accumulate.
/// op(A) is m x k; A is stored row-major as m x k, or as k x m when trans_a.
/// Multithreaded through Eigen's OpenMP backend. Results are bitwise
/// reproducible for a fixed thread count.
void gemm(bool trans_a, bool trans_b, GemmDims dims, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate);

/// Serial triple loop with the same contract, kept as the test reference.
void gemm_reference(bool trans_a, bool trans_b, GemmDims dims, std::span<const double> a,
                    std::span<const double> b, std::span<double> c, bool accumulate);

/// Number of OpenMP threads available to the parallel kernels.
int max_threads();

}  // namespace vipnerf::kernels
