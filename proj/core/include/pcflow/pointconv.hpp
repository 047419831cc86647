// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Continuous convolution on point sets: per-neighbor weights come from an
// MLP of the direction vector and aggregate neighbor features through an
// outer-product accumulate followed by a linear projection.

#pragma once

#include "pcflow/geom.hpp"
#include "pcflow/graph.hpp"
#include "pcflow/mlp.hpp"
#include "pcflow/tensor.hpp"

namespace pcflow::pconv {

using ad::Graph;
using ad::Tensor;

struct FeatureCloud {
    Tensor positions; // N x 3, may be graph-attached (e.g. warped)
    Tensor features;  // N x C, graph-attached during forward passes

    std::int64_t size() const { return positions.ndim() == 0 ? 0 : positions.shape[0]; }
    std::int64_t width() const { return features.ndim() < 2 ? 0 : features.shape[1]; }
};

struct PointConvParams {
    ad::MlpParams weight_net; // 3 -> c_mid
    ad::MlpLayer projection;  // (c_in * c_mid) -> c_out
    std::int64_t k = 16;
    double slope = 0.1;

    std::int64_t c_mid() const { return weight_net.out_width(); }
    std::int64_t c_out() const { return projection.w.shape[0]; }
};

PointConvParams make_pointconv(std::int64_t c_in, std::int64_t c_mid, std::int64_t c_out,
                               const std::vector<std::int64_t>& weightnet_hidden, Rng& rng,
                               double slope = 0.1);

PointConvParams attach(Graph& g, const PointConvParams& p);

// For each center: gather k neighbor features and direction vectors from
// `source`, weight by weight_net(direction), accumulate outer products,
// project, activate. Output positions are the centers.
FeatureCloud pointconv(Graph& g, const Tensor& centers_pos, const FeatureCloud& source,
                       const geom::NeighborIndex& nbrs, const PointConvParams& params);

// Same linear map applied to every row, then activation (a 1x1 conv).
Tensor per_point_linear(Graph& g, const Tensor& feats, const ad::MlpLayer& layer, double slope);

} // namespace pcflow::pconv
