// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Internal dense kernels shared by the forward ops and the adjoints.

#pragma once

#include <cstdint>
#include <vector>

namespace pcflow::ad::detail {

// C (m x n) = opA(A) * opB(B), K the inner dimension. A is stored row-major
// with physical shape (ta ? K x m : m x K), B with (tb ? n x K : K x n).
// Accumulation order is fixed, so results are bit-reproducible.
inline void gemm(std::int64_t m, std::int64_t n, std::int64_t k, const double* a, const double* b,
                 double* c, bool ta, bool tb) {
    for (std::int64_t i = 0; i < m * n; ++i) c[i] = 0.0;
    for (std::int64_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::int64_t l = 0; l < k; ++l) {
            const double av = ta ? a[l * m + i] : a[i * k + l];
            if (!tb) {
                const double* brow = b + l * n;
                for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            } else {
                for (std::int64_t j = 0; j < n; ++j) crow[j] += av * b[j * k + l];
            }
        }
    }
}

// dst += src * scale, elementwise.
inline void axpy(std::vector<double>& dst, const std::vector<double>& src, double scale) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i] * scale;
}

} // namespace pcflow::ad::detail
