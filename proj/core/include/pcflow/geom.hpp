// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Non-learnable geometric kernels: furthest point sampling, exact k-nearest
// neighbors, inverse-distance interpolation, and warping.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pcflow/graph.hpp"
#include "pcflow/ops.hpp"
#include "pcflow/tensor.hpp"

namespace pcflow::geom {

using ad::Graph;
using ad::Tensor;

// Distance epsilon added to IDW weights and the coincidence snap threshold.
inline constexpr double kIdwEps = 1e-8;
inline constexpr double kIdwSnapEps = 1e-10;

struct PointCloud {
    Tensor positions; // N x 3, detached

    std::int64_t size() const { return positions.ndim() == 0 ? 0 : positions.shape[0]; }
    std::array<double, 3> point(std::int64_t i) const {
        return {positions.data[static_cast<std::size_t>(3 * i)],
                positions.data[static_cast<std::size_t>(3 * i + 1)],
                positions.data[static_cast<std::size_t>(3 * i + 2)]};
    }
};

// Validates N >= 1, shape N x 3, finite coordinates.
PointCloud make_cloud(Tensor positions);

struct SceneFlow {
    Tensor vectors; // N x 3, aligned with the owning cloud
    std::int64_t size() const { return vectors.ndim() == 0 ? 0 : vectors.shape[0]; }
};

// N x k table of row indices into a reference cloud; each row is sorted by
// ascending distance, ties by ascending index.
struct NeighborIndex {
    std::vector<std::int64_t> indices; // row-major N x k
    std::int64_t k = 0;

    std::int64_t n() const { return k == 0 ? 0 : static_cast<std::int64_t>(indices.size()) / k; }
    std::int64_t at(std::int64_t i, std::int64_t j) const {
        return indices[static_cast<std::size_t>(i * k + j)];
    }
    std::span<const std::int64_t> flat() const { return indices; }
};

// Greedy max-min subsampling. The first selected index is `start`; each
// following pick maximizes the minimum distance to the already selected
// set, ties broken by lowest index.
std::vector<std::int64_t> furthest_point_sample(const PointCloud& cloud, std::int64_t m,
                                                std::int64_t start = 0);

// Exact brute-force KNN; the reference implementation.
NeighborIndex knn(const PointCloud& queries, const PointCloud& refs, std::int64_t k);

// Uniform-grid accelerated KNN; produces index rows bit-identical to knn().
NeighborIndex knn_grid(const PointCloud& queries, const PointCloud& refs, std::int64_t k);

// KNN of a cloud against itself with the query's own row removed.
NeighborIndex knn_excluding_self(const PointCloud& cloud, std::int64_t k);

// Inverse-distance-weighted interpolation of per-point values from a coarse
// cloud onto a fine cloud; differentiable w.r.t. coarse_vals.
Tensor interpolate_idw(Graph& g, const PointCloud& coarse, const Tensor& coarse_vals,
                       const PointCloud& fine, std::int64_t k);

// positions + flow, elementwise; differentiable.
Tensor warp(Graph& g, const Tensor& positions, const Tensor& flow);
PointCloud warp(const PointCloud& cloud, const SceneFlow& flow);

PointCloud gather_cloud(const PointCloud& cloud, std::span<const std::int64_t> idx);

double sqdist(const PointCloud& a, std::int64_t i, const PointCloud& b, std::int64_t j);

} // namespace pcflow::geom
