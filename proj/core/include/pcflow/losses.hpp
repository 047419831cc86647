// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Training objectives: the multi-scale supervised loss and the
// self-supervised Chamfer + smoothness + Laplacian objective. All terms are
// differentiable through the graph.

#pragma once

#include <array>

#include "pcflow/geom.hpp"
#include "pcflow/network.hpp"

namespace pcflow::loss {

using ad::Graph;
using ad::Tensor;

struct LossWeights {
    std::vector<double> alpha = {0.02, 0.04, 0.08, 0.16}; // per level, finest first
    std::array<double, 3> beta = {1.0, 1.0, 0.3};         // chamfer, smoothness, laplacian

    void validate(std::int64_t levels) const;
};

// Sum over levels of alpha_l * sum over points of the (un-squared) L2 norm
// of the flow error. The norm is smoothed as sqrt(|r|^2 + 1e-12) so the
// gradient stays defined at exact matches.
Tensor supervised_loss(Graph& g, const net::FlowPyramid& pred, const std::vector<Tensor>& gt_levels,
                       std::span<const double> alpha);

// Two-sided squared-distance Chamfer; the gradient routes through the
// argmin matches (ties -> lowest index).
Tensor chamfer_loss(Graph& g, const Tensor& warped, const Tensor& target);

// sum_i 1/|N(i)| sum_{j in N(i)} |flow_j - flow_i|^2 over self-excluded
// neighborhoods of the cloud the flow lives on.
Tensor smoothness_loss(Graph& g, const Tensor& flow, const geom::NeighborIndex& nbrs);

// delta_i = 1/|N(i)| sum_{j in N(i)} (p_j - p_i), self excluded.
Tensor laplacian_coords(Graph& g, const Tensor& positions, const geom::NeighborIndex& nbrs);

// Numeric variant for constant clouds.
Tensor laplacian_coords_values(const geom::PointCloud& cloud, std::int64_t k);

// sum over warped points of |delta(p_w) - delta(q_inter)|^2 where the
// target is delta on Q inverse-distance-interpolated to the warped
// positions. The interpolation weights' dependence on the warped positions
// is differentiated.
Tensor laplacian_reg(Graph& g, const Tensor& warped_pos, const geom::PointCloud& Q,
                     std::int64_t k_nbr, std::int64_t k_inter);

// Same with a caller-supplied Laplacian field on Q.
Tensor laplacian_reg_with_target(Graph& g, const Tensor& warped_pos, const geom::PointCloud& Q,
                                 const Tensor& delta_q, std::int64_t k_nbr, std::int64_t k_inter);

// Per level: warp P by the level flow, then alpha_l * (b1*chamfer +
// b2*smoothness + b3*laplacian).
Tensor self_supervised_loss(Graph& g, const net::ForwardResult& fw, const LossWeights& w,
                            std::int64_t k_loss, std::int64_t k_inter);

} // namespace pcflow::loss
