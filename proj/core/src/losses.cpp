// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/losses.hpp"

#include <algorithm>

#include "pcflow/error.hpp"

namespace pcflow::loss {

namespace {

constexpr double kNormSmoothing = 1e-12;

std::vector<std::int64_t> center_repeat(std::int64_t n, std::int64_t k) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n * k));
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < k; ++j) idx[static_cast<std::size_t>(i * k + j)] = i;
    return idx;
}

} // namespace

void LossWeights::validate(std::int64_t levels) const {
    if (static_cast<std::int64_t>(alpha.size()) < levels) {
        throw ConfigError("loss: alpha lists " + std::to_string(alpha.size()) +
                          " levels, network has " + std::to_string(levels));
    }
    bool any = false;
    for (std::size_t l = 0; l < alpha.size(); ++l) {
        if (alpha[l] < 0) throw ConfigError("loss: alpha entries must be >= 0");
        any = any || (static_cast<std::int64_t>(l) < levels && alpha[l] > 0);
    }
    if (!any) throw ConfigError("loss: at least one alpha entry must be > 0");
    for (double b : beta) {
        if (b < 0) throw ConfigError("loss: beta entries must be >= 0");
    }
}

Tensor supervised_loss(Graph& g, const net::FlowPyramid& pred, const std::vector<Tensor>& gt_levels,
                       std::span<const double> alpha) {
    if (pred.flows.size() != gt_levels.size()) {
        throw ShapeError("supervised-loss: " + std::to_string(pred.flows.size()) +
                         " predicted levels vs " + std::to_string(gt_levels.size()) + " gt levels");
    }
    if (alpha.size() < pred.flows.size()) {
        throw ShapeError("supervised-loss: alpha lists " + std::to_string(alpha.size()) +
                         " levels for " + std::to_string(pred.flows.size()) + " flow levels");
    }
    ad::ScopeGuard scope(g, "loss.supervised");
    Tensor total = ad::Tensor::scalar_value(0.0);
    bool first = true;
    for (std::size_t l = 0; l < pred.flows.size(); ++l) {
        if (!same_shape(pred.flows[l], gt_levels[l])) {
            throw ShapeError("supervised-loss: level " + std::to_string(l) + " shapes " +
                             ad::shape_str(pred.flows[l].shape) + " vs " +
                             ad::shape_str(gt_levels[l].shape));
        }
        const Tensor r = ad::sub(g, pred.flows[l], gt_levels[l]);
        const Tensor norms =
            ad::sqrt_elem(g, ad::add_scalar(g, ad::row_sum(g, ad::square(g, r)), kNormSmoothing));
        const Tensor level = ad::scalar_mul(g, ad::sum_all(g, norms), alpha[l]);
        total = first ? level : ad::add(g, total, level);
        first = false;
    }
    return total;
}

Tensor chamfer_loss(Graph& g, const Tensor& warped, const Tensor& target) {
    if (warped.ndim() != 2 || target.ndim() != 2 || warped.shape[1] != target.shape[1] ||
        warped.shape[0] < 1 || target.shape[0] < 1) {
        throw ShapeError("chamfer: bad clouds " + ad::shape_str(warped.shape) + " vs " +
                         ad::shape_str(target.shape));
    }
    ad::ScopeGuard scope(g, "loss.chamfer");
    const Tensor fwd = ad::pairwise_sqdist(g, warped, target);
    const Tensor bwd = ad::pairwise_sqdist(g, target, warped);
    return ad::add(g, ad::sum_all(g, ad::min_rows(g, fwd).values),
                   ad::sum_all(g, ad::min_rows(g, bwd).values));
}

Tensor smoothness_loss(Graph& g, const Tensor& flow, const geom::NeighborIndex& nbrs) {
    if (flow.ndim() != 2 || nbrs.n() != flow.shape[0]) {
        throw ShapeError("smoothness: flow " + ad::shape_str(flow.shape) + " vs " +
                         std::to_string(nbrs.n()) + " neighbor rows");
    }
    ad::ScopeGuard scope(g, "loss.smoothness");
    const std::int64_t n = flow.shape[0], k = nbrs.k;
    const Tensor nb = ad::gather_rows(g, flow, nbrs.flat());
    const Tensor ctr = ad::gather_rows(g, flow, center_repeat(n, k));
    const Tensor sq = ad::row_sum(g, ad::square(g, ad::sub(g, nb, ctr)));
    return ad::scalar_mul(g, ad::sum_all(g, sq), 1.0 / static_cast<double>(k));
}

Tensor laplacian_coords(Graph& g, const Tensor& positions, const geom::NeighborIndex& nbrs) {
    if (positions.ndim() != 2 || nbrs.n() != positions.shape[0]) {
        throw ShapeError("laplacian: positions " + ad::shape_str(positions.shape) + " vs " +
                         std::to_string(nbrs.n()) + " neighbor rows");
    }
    const std::int64_t n = positions.shape[0], k = nbrs.k;
    const Tensor nb = ad::gather_rows(g, positions, nbrs.flat());
    std::vector<std::int64_t> group(static_cast<std::size_t>(n * k));
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < k; ++j) group[static_cast<std::size_t>(i * k + j)] = i;
    const Tensor sums = ad::scatter_add_rows(g, nb, group, n);
    return ad::sub(g, ad::scalar_mul(g, sums, 1.0 / static_cast<double>(k)), positions);
}

Tensor laplacian_coords_values(const geom::PointCloud& cloud, std::int64_t k) {
    Graph g;
    const geom::NeighborIndex nbrs = geom::knn_excluding_self(cloud, k);
    return laplacian_coords(g, g.leaf(cloud.positions), nbrs).detached();
}

Tensor laplacian_reg_with_target(Graph& g, const Tensor& warped_pos, const geom::PointCloud& Q,
                                 const Tensor& delta_q, std::int64_t k_nbr, std::int64_t k_inter) {
    ad::ScopeGuard scope(g, "loss.laplacian");
    // Laplacian of the warped cloud, neighborhoods on current positions.
    const geom::PointCloud warped_cloud{warped_pos.detached()};
    const geom::NeighborIndex nbrs = geom::knn_excluding_self(warped_cloud, k_nbr);
    const Tensor delta_w = laplacian_coords(g, warped_pos, nbrs);
    // Interpolated target at the warped positions; weights differentiate
    // through warped_pos.
    const geom::NeighborIndex inter = geom::knn(warped_cloud, Q, k_inter);
    const Tensor target = ad::idw_interpolate(g, warped_pos, Q.positions, delta_q, inter.flat(),
                                              k_inter, geom::kIdwEps, geom::kIdwSnapEps);
    return ad::sum_all(g, ad::row_sum(g, ad::square(g, ad::sub(g, delta_w, target))));
}

Tensor laplacian_reg(Graph& g, const Tensor& warped_pos, const geom::PointCloud& Q,
                     std::int64_t k_nbr, std::int64_t k_inter) {
    const Tensor delta_q = laplacian_coords_values(Q, k_nbr);
    return laplacian_reg_with_target(g, warped_pos, Q, delta_q, k_nbr, k_inter);
}

Tensor self_supervised_loss(Graph& g, const net::ForwardResult& fw, const LossWeights& w,
                            std::int64_t k_loss, std::int64_t k_inter) {
    const std::int64_t L = fw.pyr_p.level_count();
    w.validate(L);
    if (static_cast<std::int64_t>(fw.flows.flows.size()) != L) {
        throw ShapeError("self-supervised: " + std::to_string(fw.flows.flows.size()) +
                         " flow levels for " + std::to_string(L) + " pyramid levels");
    }
    Tensor total = ad::Tensor::scalar_value(0.0);
    bool first = true;
    for (std::int64_t l = 0; l < L; ++l) {
        const double a = w.alpha[static_cast<std::size_t>(l)];
        if (a == 0.0) continue;
        ad::ScopeGuard scope(g, "loss.self_supervised.lv" + std::to_string(l));
        const pconv::FeatureCloud& pl = fw.pyr_p.levels[static_cast<std::size_t>(l)];
        const pconv::FeatureCloud& ql = fw.pyr_q.levels[static_cast<std::size_t>(l)];
        const geom::PointCloud p_cloud{pl.positions.detached()};
        const geom::PointCloud q_cloud{ql.positions.detached()};
        const std::int64_t n_l = p_cloud.size();

        const Tensor warped = geom::warp(g, pl.positions, fw.flows.flows[static_cast<std::size_t>(l)]);

        Tensor level = ad::scalar_mul(g, chamfer_loss(g, warped, ql.positions), w.beta[0]);
        if (w.beta[1] > 0.0 && n_l >= 2) {
            const geom::NeighborIndex nbrs =
                geom::knn_excluding_self(p_cloud, std::min(k_loss, n_l - 1));
            level = ad::add(g, level,
                            ad::scalar_mul(g,
                                           smoothness_loss(
                                               g, fw.flows.flows[static_cast<std::size_t>(l)], nbrs),
                                           w.beta[1]));
        }
        if (w.beta[2] > 0.0 && n_l >= 2 && q_cloud.size() >= 2) {
            const std::int64_t kn = std::min({k_loss, n_l - 1, q_cloud.size() - 1});
            const std::int64_t ki = std::min(k_inter, q_cloud.size());
            level = ad::add(
                g, level,
                ad::scalar_mul(g, laplacian_reg(g, warped, q_cloud, kn, ki), w.beta[2]));
        }
        const Tensor weighted = ad::scalar_mul(g, level, a);
        total = first ? weighted : ad::add(g, total, weighted);
        first = false;
    }
    return total;
}

} // namespace pcflow::loss
