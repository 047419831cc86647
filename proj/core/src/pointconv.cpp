// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/pointconv.hpp"

#include "pcflow/error.hpp"

namespace pcflow::pconv {

PointConvParams make_pointconv(std::int64_t c_in, std::int64_t c_mid, std::int64_t c_out,
                               const std::vector<std::int64_t>& weightnet_hidden, Rng& rng,
                               double slope) {
    PointConvParams p;
    std::vector<std::int64_t> widths{3};
    widths.insert(widths.end(), weightnet_hidden.begin(), weightnet_hidden.end());
    widths.push_back(c_mid);
    p.weight_net = ad::make_mlp(widths, rng, slope);
    p.projection = ad::make_layer(c_out, c_in * c_mid, rng);
    p.slope = slope;
    return p;
}

PointConvParams attach(Graph& g, const PointConvParams& p) {
    PointConvParams out;
    out.weight_net = ad::attach(g, p.weight_net);
    out.projection = {g.leaf(p.projection.w), g.leaf(p.projection.b)};
    out.k = p.k;
    out.slope = p.slope;
    return out;
}

FeatureCloud pointconv(Graph& g, const Tensor& centers_pos, const FeatureCloud& source,
                       const geom::NeighborIndex& nbrs, const PointConvParams& params) {
    const std::int64_t n = centers_pos.shape[0];
    const std::int64_t k = nbrs.k;
    if (nbrs.n() != n) {
        throw ShapeError("pointconv: " + std::to_string(nbrs.n()) + " neighbor rows for " +
                         std::to_string(n) + " centers");
    }
    if (source.features.shape[0] != source.positions.shape[0]) {
        throw ShapeError("pointconv: source positions/features row mismatch " +
                         ad::shape_str(source.positions.shape) + " vs " +
                         ad::shape_str(source.features.shape));
    }
    if (params.projection.w.shape[1] != source.width() * params.c_mid()) {
        throw ShapeError("pointconv: projection input width " +
                         std::to_string(params.projection.w.shape[1]) + " != c_in*c_mid = " +
                         std::to_string(source.width() * params.c_mid()));
    }

    std::vector<std::int64_t> center_rep(static_cast<std::size_t>(n * k));
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < k; ++j) center_rep[static_cast<std::size_t>(i * k + j)] = i;

    const Tensor nbr_pos = ad::gather_rows(g, source.positions, nbrs.flat());
    const Tensor ctr_pos = ad::gather_rows(g, centers_pos, center_rep);
    const Tensor dirs = ad::sub(g, nbr_pos, ctr_pos);
    const Tensor w = ad::mlp_forward(g, params.weight_net, dirs); // (n*k) x c_mid
    const Tensor f = ad::gather_rows(g, source.features, nbrs.flat());
    const Tensor agg = ad::grouped_outer_sum(g, w, f, k); // n x (c_mid * c_in)
    const Tensor proj =
        ad::add_bias(g, ad::matmul(g, agg, params.projection.w, false, true), params.projection.b);
    FeatureCloud out;
    out.positions = centers_pos;
    out.features = ad::leaky_relu(g, proj, params.slope);
    return out;
}

Tensor per_point_linear(Graph& g, const Tensor& feats, const ad::MlpLayer& layer, double slope) {
    if (feats.ndim() != 2 || feats.shape[1] != layer.w.shape[1]) {
        throw ShapeError("per-point-linear: input " + ad::shape_str(feats.shape) +
                         " does not match weight " + ad::shape_str(layer.w.shape));
    }
    return ad::leaky_relu(g, ad::add_bias(g, ad::matmul(g, feats, layer.w, false, true), layer.b),
                          slope);
}

} // namespace pcflow::pconv
