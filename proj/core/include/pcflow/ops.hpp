// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Every learnable computation in the repo is
// composed from these; each call records one node on the graph.

#pragma once

#include <initializer_list>
#include <span>
#include <vector>

#include "pcflow/graph.hpp"
#include "pcflow/tensor.hpp"

namespace pcflow::ad {

Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor sub(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b); // elementwise
Tensor scalar_mul(Graph& g, const Tensor& a, double c);
Tensor add_scalar(Graph& g, const Tensor& a, double c);

// C = opA(a) * opB(b); 2-d operands only.
Tensor matmul(Graph& g, const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);

// x: N x C, bias: {C}; adds bias to every row.
Tensor add_bias(Graph& g, const Tensor& x, const Tensor& bias);

// Concatenate 2-d tensors with equal row counts along the last axis.
Tensor concat_cols(Graph& g, std::span<const Tensor> parts);
Tensor concat_cols(Graph& g, std::initializer_list<Tensor> parts);

Tensor leaky_relu(Graph& g, const Tensor& x, double slope);

Tensor sum_all(Graph& g, const Tensor& x);  // -> {1}
Tensor mean_all(Graph& g, const Tensor& x); // -> {1}
Tensor row_sum(Graph& g, const Tensor& x);  // N x C -> {N}

Tensor square(Graph& g, const Tensor& x);

// Elementwise square root; negative input is a ValueError.
Tensor sqrt_elem(Graph& g, const Tensor& x);

// out[r] = x[idx[r]]; repeated indices are allowed (the adjoint accumulates).
Tensor gather_rows(Graph& g, const Tensor& x, std::span<const std::int64_t> idx);

// out[idx[r]] += x[r] over rows, output has `out_rows` rows.
Tensor scatter_add_rows(Graph& g, const Tensor& x, std::span<const std::int64_t> idx,
                        std::int64_t out_rows);

// Row-wise minimum with the argmin column per row; the adjoint routes the
// gradient to the argmin element only (ties -> lowest index).
struct MinRowsOut {
    Tensor values; // {N}
    std::vector<std::int64_t> argmin;
};
MinRowsOut min_rows(Graph& g, const Tensor& x);

// out[i][j] = squared Euclidean distance between rows a[i] and b[j].
Tensor pairwise_sqdist(Graph& g, const Tensor& a, const Tensor& b);

// Rows come in consecutive groups of `group`; for each group n,
// out[n] = sum_j outer(a[n*group+j], b[n*group+j]) flattened row-major
// (a-channel major). a: R x A, b: R x B -> R/group x (A*B).
Tensor grouped_outer_sum(Graph& g, const Tensor& a, const Tensor& b, std::int64_t group);

// Inverse-distance-weighted gather: out[i] = sum_j w_ij * values[idx[i][j]]
// / sum_j w_ij with w = 1/(d + eps), d the Euclidean distance between
// fine_pos[i] and coarse_pos[idx[i][j]]. A row whose nearest neighbor lies
// within eps_snap copies that value exactly. Differentiable w.r.t. all
// three tensor inputs; `idx` (N*k, row-major) is static.
Tensor idw_interpolate(Graph& g, const Tensor& fine_pos, const Tensor& coarse_pos,
                       const Tensor& values, std::span<const std::int64_t> idx, std::int64_t k,
                       double eps, double eps_snap);

} // namespace pcflow::ad
