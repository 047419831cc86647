// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Learnable matching costs between two point clouds and their two-stage,
// direction-weighted patch-to-patch aggregation.

#pragma once

#include "pcflow/geom.hpp"
#include "pcflow/mlp.hpp"
#include "pcflow/pointconv.hpp"

namespace pcflow::cost {

using ad::Graph;
using ad::Tensor;

struct CostVolumeParams {
    ad::MlpParams cost_mlp; // (2C+3) -> D
    ad::MlpParams wp_net;   // 3 -> D
    ad::MlpParams wq_net;   // 3 -> D
    std::int64_t k = 16;

    std::int64_t dim() const { return cost_mlp.out_width(); }
};

CostVolumeParams make_cost_volume(std::int64_t c_in, std::int64_t dim,
                                  const std::vector<std::int64_t>& cost_hidden,
                                  const std::vector<std::int64_t>& w_hidden, std::int64_t k,
                                  Rng& rng, double slope = 0.1);

CostVolumeParams attach(Graph& g, const CostVolumeParams& p);

// n1 x D tensor aligned with the first cloud.
struct CostVolume {
    Tensor values;
};

struct CostVolumeStats {
    std::int64_t pair_evals = 0; // matching-cost rows evaluated
};

// Row-aligned pairwise cost: row a = cost_mlp(concat(f_a, g_a, q_a - p_a)).
Tensor matching_cost(Graph& g, const Tensor& p_feats, const Tensor& q_feats, const Tensor& p_pos,
                     const Tensor& q_pos, const ad::MlpParams& cost_mlp);

// Patch-to-patch aggregation: inner sum over each neighbor's patch in Q
// weighted by wq_net(q_j - p_i), outer sum over the patch in P weighted by
// wp_net(p_i - p_c). Exactly k^2 cost rows per output point.
CostVolume cost_volume(Graph& g, const pconv::FeatureCloud& P, const pconv::FeatureCloud& Q,
                       const CostVolumeParams& params, CostVolumeStats* stats = nullptr);

} // namespace pcflow::cost
