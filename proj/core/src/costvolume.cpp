// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/costvolume.hpp"

#include "pcflow/error.hpp"

namespace pcflow::cost {

CostVolumeParams make_cost_volume(std::int64_t c_in, std::int64_t dim,
                                  const std::vector<std::int64_t>& cost_hidden,
                                  const std::vector<std::int64_t>& w_hidden, std::int64_t k,
                                  Rng& rng, double slope) {
    CostVolumeParams p;
    std::vector<std::int64_t> cw{2 * c_in + 3};
    cw.insert(cw.end(), cost_hidden.begin(), cost_hidden.end());
    cw.push_back(dim);
    p.cost_mlp = ad::make_mlp(cw, rng, slope);
    std::vector<std::int64_t> ww{3};
    ww.insert(ww.end(), w_hidden.begin(), w_hidden.end());
    ww.push_back(dim);
    p.wp_net = ad::make_mlp(ww, rng, slope);
    p.wq_net = ad::make_mlp(ww, rng, slope);
    p.k = k;
    return p;
}

CostVolumeParams attach(Graph& g, const CostVolumeParams& p) {
    CostVolumeParams out;
    out.cost_mlp = ad::attach(g, p.cost_mlp);
    out.wp_net = ad::attach(g, p.wp_net);
    out.wq_net = ad::attach(g, p.wq_net);
    out.k = p.k;
    return out;
}

Tensor matching_cost(Graph& g, const Tensor& p_feats, const Tensor& q_feats, const Tensor& p_pos,
                     const Tensor& q_pos, const ad::MlpParams& cost_mlp) {
    if (p_feats.shape != q_feats.shape || p_pos.shape != q_pos.shape ||
        p_feats.shape[0] != p_pos.shape[0]) {
        throw ShapeError("matching-cost: misaligned inputs " + ad::shape_str(p_feats.shape) + ", " +
                         ad::shape_str(q_feats.shape) + ", " + ad::shape_str(p_pos.shape) + ", " +
                         ad::shape_str(q_pos.shape));
    }
    const Tensor dir = ad::sub(g, q_pos, p_pos);
    return ad::mlp_forward(g, cost_mlp, ad::concat_cols(g, {p_feats, q_feats, dir}));
}

CostVolume cost_volume(Graph& g, const pconv::FeatureCloud& P, const pconv::FeatureCloud& Q,
                       const CostVolumeParams& params, CostVolumeStats* stats) {
    const std::int64_t n1 = P.size(), n2 = Q.size();
    const std::int64_t k = params.k;
    if (n1 < 1 || n2 < 1) throw ValueError("cost-volume: empty cloud");
    if (k < 1 || k > n1 || k > n2) {
        throw ValueError("cost-volume: k=" + std::to_string(k) + " exceeds cloud sizes " +
                         std::to_string(n1) + "/" + std::to_string(n2));
    }
    if (P.width() != Q.width()) {
        throw ShapeError("cost-volume: feature widths differ, " + ad::shape_str(P.features.shape) +
                         " vs " + ad::shape_str(Q.features.shape));
    }

    // Neighborhoods on the current numeric positions; indices are constants
    // of this forward pass.
    const geom::PointCloud p_cloud{P.positions.detached()};
    const geom::PointCloud q_cloud{Q.positions.detached()};
    const geom::NeighborIndex np = geom::knn(p_cloud, p_cloud, k); // includes self
    const geom::NeighborIndex nq = geom::knn(p_cloud, q_cloud, k);

    // Row (c, i, j) pairs P point np[c,i] with Q point nq[np[c,i], j].
    const std::int64_t rows = n1 * k * k;
    std::vector<std::int64_t> p_of_row(static_cast<std::size_t>(rows));
    std::vector<std::int64_t> q_of_row(static_cast<std::size_t>(rows));
    std::vector<std::int64_t> inner_group(static_cast<std::size_t>(rows));
    std::vector<std::int64_t> p_of_pair(static_cast<std::size_t>(n1 * k));
    std::vector<std::int64_t> c_of_pair(static_cast<std::size_t>(n1 * k));
    std::vector<std::int64_t> outer_group(static_cast<std::size_t>(n1 * k));
    for (std::int64_t c = 0; c < n1; ++c) {
        for (std::int64_t i = 0; i < k; ++i) {
            const std::int64_t pi = np.at(c, i);
            const std::int64_t pair = c * k + i;
            p_of_pair[static_cast<std::size_t>(pair)] = pi;
            c_of_pair[static_cast<std::size_t>(pair)] = c;
            outer_group[static_cast<std::size_t>(pair)] = c;
            for (std::int64_t j = 0; j < k; ++j) {
                const std::int64_t r = pair * k + j;
                p_of_row[static_cast<std::size_t>(r)] = pi;
                q_of_row[static_cast<std::size_t>(r)] = nq.at(pi, j);
                inner_group[static_cast<std::size_t>(r)] = pair;
            }
        }
    }

    const Tensor qp = ad::gather_rows(g, Q.positions, q_of_row);
    const Tensor pp = ad::gather_rows(g, P.positions, p_of_row);
    const Tensor dir = ad::sub(g, qp, pp); // q_j - p_i
    const Tensor f = ad::gather_rows(g, P.features, p_of_row);
    const Tensor qf = ad::gather_rows(g, Q.features, q_of_row);
    const Tensor cost_rows = ad::mlp_forward(g, params.cost_mlp, ad::concat_cols(g, {f, qf, dir}));
    const Tensor wq = ad::mlp_forward(g, params.wq_net, dir);
    const Tensor inner =
        ad::scatter_add_rows(g, ad::mul(g, cost_rows, wq), inner_group, n1 * k);

    const Tensor pair_pos = ad::gather_rows(g, P.positions, p_of_pair);
    const Tensor center_pos = ad::gather_rows(g, P.positions, c_of_pair);
    const Tensor pdir = ad::sub(g, pair_pos, center_pos); // p_i - p_c
    const Tensor wp = ad::mlp_forward(g, params.wp_net, pdir);
    const Tensor values = ad::scatter_add_rows(g, ad::mul(g, inner, wp), outer_group, n1);

    if (stats) stats->pair_evals += rows;
    return CostVolume{values};
}

} // namespace pcflow::cost
