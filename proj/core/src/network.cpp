// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/network.hpp"

#include <chrono>

#include "pcflow/error.hpp"

namespace pcflow::net {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::int64_t ceil_div4(std::int64_t n) { return (n + 3) / 4; }

} // namespace

void NetworkConfig::validate() const {
    if (levels < 2) throw ConfigError("network: levels must be >= 2");
    if (static_cast<std::int64_t>(widths.size()) != levels - 1) {
        throw ConfigError("network: widths must list " + std::to_string(levels - 1) + " entries");
    }
    if (static_cast<std::int64_t>(cv_dim.size()) != levels - 1) {
        throw ConfigError("network: cv_dim must list " + std::to_string(levels - 1) + " entries");
    }
    for (auto w : widths)
        if (w < 1) throw ConfigError("network: widths entries must be >= 1");
    for (auto d : cv_dim)
        if (d < 1) throw ConfigError("network: cv_dim entries must be >= 1");
    if (k_cv < 1 || k_conv < 1 || k_up < 1 || k_loss < 1) {
        throw ConfigError("network: neighborhood sizes must be >= 1");
    }
    if (weightnet_out < 1) throw ConfigError("network: weightnet_out must be >= 1");
    if (pred_conv_widths.empty()) throw ConfigError("network: pred_conv_widths must be non-empty");
    if (head_hidden.empty()) throw ConfigError("network: head_hidden must be non-empty");
}

NetworkParams init_params(const NetworkConfig& cfg, Rng& rng) {
    cfg.validate();
    NetworkParams p;
    p.cfg = cfg;
    const std::int64_t L = cfg.levels;
    for (std::int64_t l = 1; l < L; ++l) {
        LevelParams lp;
        lp.conv = pconv::make_pointconv(cfg.bu_width(l - 1), cfg.weightnet_out, cfg.widths[static_cast<std::size_t>(l - 1)],
                                        cfg.weightnet_hidden, rng, cfg.act_slope);
        lp.lin = ad::make_layer(cfg.bu_width(l), cfg.bu_width(l), rng);
        lp.cv = cost::make_cost_volume(cfg.final_width(l), cfg.cv_dim[static_cast<std::size_t>(l - 1)],
                                       cfg.cost_hidden, cfg.w_hidden, cfg.k_cv, rng, cfg.act_slope);
        std::int64_t in_w = cfg.pred_in_width(l);
        for (std::int64_t pw : cfg.pred_conv_widths) {
            lp.pred_convs.push_back(pconv::make_pointconv(in_w, cfg.weightnet_out, pw,
                                                          cfg.weightnet_hidden, rng, cfg.act_slope));
            in_w = pw;
        }
        std::vector<std::int64_t> head_widths{in_w};
        head_widths.insert(head_widths.end(), cfg.head_hidden.begin(), cfg.head_hidden.end());
        head_widths.push_back(3);
        lp.head = ad::make_mlp(head_widths, rng, cfg.act_slope);
        ad::zero_last_layer(lp.head); // training starts from zero flow
        p.levels.push_back(std::move(lp));
    }
    if (cfg.use_upsampled_feature) {
        for (std::int64_t l = 0; l < L - 1; ++l) {
            p.merge.push_back(ad::make_layer(cfg.bu_width(l), cfg.final_width(l + 1), rng));
        }
    }
    return p;
}

namespace {

void walk_mlp(const std::string& prefix, ad::MlpParams& m,
              std::vector<std::pair<std::string, Tensor*>>& out) {
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        out.emplace_back(prefix + ".l" + std::to_string(i) + ".w", &m.layers[i].w);
        out.emplace_back(prefix + ".l" + std::to_string(i) + ".b", &m.layers[i].b);
    }
}

void walk_pointconv(const std::string& prefix, pconv::PointConvParams& c,
                    std::vector<std::pair<std::string, Tensor*>>& out) {
    walk_mlp(prefix + ".wnet", c.weight_net, out);
    out.emplace_back(prefix + ".proj.w", &c.projection.w);
    out.emplace_back(prefix + ".proj.b", &c.projection.b);
}

} // namespace

std::vector<std::pair<std::string, Tensor*>> param_list(NetworkParams& p) {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (std::size_t i = 0; i < p.levels.size(); ++i) {
        const std::string lv = "lv" + std::to_string(i + 1);
        LevelParams& lp = p.levels[i];
        walk_pointconv("pyramid." + lv + ".conv", lp.conv, out);
        out.emplace_back("pyramid." + lv + ".lin.w", &lp.lin.w);
        out.emplace_back("pyramid." + lv + ".lin.b", &lp.lin.b);
        walk_mlp("cv." + lv + ".cost", lp.cv.cost_mlp, out);
        walk_mlp("cv." + lv + ".wp", lp.cv.wp_net, out);
        walk_mlp("cv." + lv + ".wq", lp.cv.wq_net, out);
        for (std::size_t j = 0; j < lp.pred_convs.size(); ++j) {
            walk_pointconv("pred." + lv + ".pc" + std::to_string(j + 1), lp.pred_convs[j], out);
        }
        walk_mlp("pred." + lv + ".head", lp.head, out);
    }
    for (std::size_t l = 0; l < p.merge.size(); ++l) {
        out.emplace_back("pyramid.lv" + std::to_string(l) + ".merge.w", &p.merge[l].w);
        out.emplace_back("pyramid.lv" + std::to_string(l) + ".merge.b", &p.merge[l].b);
    }
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> param_list(const NetworkParams& p) {
    auto rows = param_list(const_cast<NetworkParams&>(p));
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(rows.size());
    for (auto& [n, t] : rows) out.emplace_back(n, t);
    return out;
}

NetworkParams attach(Graph& g, const NetworkParams& p) {
    NetworkParams out = p;
    for (auto& [name, t] : param_list(out)) {
        // Tensors already attached to this graph are kept, so callers can
        // pre-attach individual parameters (the gradient checker does).
        if (!(t->attached() && t->graph == &g)) *t = g.leaf(*t);
    }
    return out;
}

Pyramid build_pyramid(Graph& g, const geom::PointCloud& cloud, const NetworkParams& params) {
    const NetworkConfig& cfg = params.cfg;
    const std::int64_t L = cfg.levels;
    if (cloud.size() < cfg.min_points()) {
        throw ValueError("pyramid: need at least " + std::to_string(cfg.min_points()) +
                         " points for " + std::to_string(L) + " levels, got " +
                         std::to_string(cloud.size()));
    }
    ad::ScopeGuard scope(g, "feature_pyramid");

    Pyramid pyr;
    pyr.levels.resize(static_cast<std::size_t>(L));
    pyr.sample_maps.resize(static_cast<std::size_t>(L));

    // Bottom-up: sample, convolve, 1x1 conv.
    std::vector<Tensor> bu(static_cast<std::size_t>(L));
    std::vector<geom::PointCloud> clouds(static_cast<std::size_t>(L));
    clouds[0] = cloud;
    bu[0] = g.leaf(cloud.positions); // raw coordinates as level-0 features
    pyr.levels[0].positions = cloud.positions;
    for (std::int64_t l = 1; l < L; ++l) {
        const geom::PointCloud& prev = clouds[static_cast<std::size_t>(l - 1)];
        const std::int64_t m = ceil_div4(prev.size());
        pyr.sample_maps[static_cast<std::size_t>(l)] = geom::furthest_point_sample(prev, m);
        clouds[static_cast<std::size_t>(l)] =
            geom::gather_cloud(prev, pyr.sample_maps[static_cast<std::size_t>(l)]);
        const geom::PointCloud& cur = clouds[static_cast<std::size_t>(l)];
        const geom::NeighborIndex nbrs =
            geom::knn(cur, prev, std::min(cfg.k_conv, prev.size()));
        const LevelParams& lp = params.levels[static_cast<std::size_t>(l - 1)];
        pconv::FeatureCloud src{prev.positions, bu[static_cast<std::size_t>(l - 1)]};
        pconv::FeatureCloud conv = pconv::pointconv(g, cur.positions, src, nbrs, lp.conv);
        bu[static_cast<std::size_t>(l)] =
            pconv::per_point_linear(g, conv.features, lp.lin, cfg.act_slope);
        pyr.levels[static_cast<std::size_t>(l)].positions = cur.positions;
    }

    // Top-down: concatenate upsampled coarser features through a 1x1 conv.
    pyr.levels[static_cast<std::size_t>(L - 1)].features = bu[static_cast<std::size_t>(L - 1)];
    for (std::int64_t l = L - 2; l >= 0; --l) {
        if (!cfg.use_upsampled_feature) {
            pyr.levels[static_cast<std::size_t>(l)].features = bu[static_cast<std::size_t>(l)];
            continue;
        }
        const Tensor up = geom::interpolate_idw(
            g, clouds[static_cast<std::size_t>(l + 1)],
            pyr.levels[static_cast<std::size_t>(l + 1)].features, clouds[static_cast<std::size_t>(l)],
            std::min(cfg.k_up, clouds[static_cast<std::size_t>(l + 1)].size()));
        const Tensor merged =
            pconv::per_point_linear(g, up, params.merge[static_cast<std::size_t>(l)], cfg.act_slope);
        pyr.levels[static_cast<std::size_t>(l)].features =
            ad::concat_cols(g, {bu[static_cast<std::size_t>(l)], merged});
    }
    return pyr;
}

std::vector<Tensor> subsample_to_levels(const Pyramid& pyr, const Tensor& full_res_rows) {
    std::vector<Tensor> out;
    out.reserve(pyr.levels.size());
    out.push_back(full_res_rows.detached());
    std::vector<std::int64_t> comp; // composed map into level 0
    for (std::size_t l = 1; l < pyr.levels.size(); ++l) {
        const auto& map = pyr.sample_maps[l];
        std::vector<std::int64_t> next(map.size());
        for (std::size_t i = 0; i < map.size(); ++i)
            next[i] = l == 1 ? map[i] : comp[static_cast<std::size_t>(map[i])];
        comp = std::move(next);
        Tensor t({static_cast<std::int64_t>(comp.size()), full_res_rows.shape[1]});
        const std::int64_t c = full_res_rows.shape[1];
        for (std::size_t i = 0; i < comp.size(); ++i)
            for (std::int64_t j = 0; j < c; ++j)
                t.data[static_cast<std::size_t>(static_cast<std::int64_t>(i) * c + j)] =
                    full_res_rows.data[static_cast<std::size_t>(comp[i] * c + j)];
        out.push_back(std::move(t));
    }
    return out;
}

PredictorOut predict_flow_level(Graph& g, const Tensor& level_pos,
                                const geom::NeighborIndex& self_nbrs, const Tensor& p_feats,
                                const Tensor& cost_vals, const Tensor* up_flow,
                                const Tensor* up_pred_feat, const LevelParams& lp,
                                const NetworkConfig& cfg) {
    std::vector<Tensor> parts{p_feats, cost_vals};
    if (up_flow) parts.push_back(*up_flow);
    if (up_pred_feat) parts.push_back(*up_pred_feat);
    Tensor h = ad::concat_cols(g, parts);
    const std::int64_t expect =
        lp.pred_convs.front().projection.w.shape[1] / lp.pred_convs.front().c_mid();
    if (h.shape[1] != expect) {
        throw ShapeError("predictor: input width " + std::to_string(h.shape[1]) +
                         " does not match level config (expected " + std::to_string(expect) + ")");
    }
    (void)cfg;
    pconv::FeatureCloud fc{level_pos, h};
    for (const auto& pc : lp.pred_convs) fc = pconv::pointconv(g, level_pos, fc, self_nbrs, pc);
    std::vector<Tensor> outs = ad::mlp_forward_all(g, lp.head, fc.features);
    PredictorOut out;
    out.residual = outs.back();
    out.feat = outs[outs.size() - 2];
    return out;
}

ForwardResult forward(Graph& g, const geom::PointCloud& P, const geom::PointCloud& Q,
                      const NetworkParams& params, ForwardStats* stats) {
    const NetworkConfig& cfg = params.cfg;
    const std::int64_t L = cfg.levels;

    auto t0 = Clock::now();
    ForwardResult res;
    res.pyr_p = build_pyramid(g, P, params);
    res.pyr_q = build_pyramid(g, Q, params);
    if (stats) stats->timings.pyramid_ms += ms_since(t0);

    res.flows.flows.resize(static_cast<std::size_t>(L));
    Tensor pred_feat; // second-last layer activations of the coarser level

    for (std::int64_t l = L - 1; l >= 1; --l) {
        const pconv::FeatureCloud& plevel = res.pyr_p.levels[static_cast<std::size_t>(l)];
        const pconv::FeatureCloud& qlevel = res.pyr_q.levels[static_cast<std::size_t>(l)];
        const geom::PointCloud p_cloud{plevel.positions.detached()};
        const geom::PointCloud q_cloud{qlevel.positions.detached()};
        const std::int64_t n_l = p_cloud.size();

        Tensor up_flow, up_pf;
        bool has_up = l < L - 1;
        Tensor cv_positions = plevel.positions;
        if (has_up) {
            // Upsample coarser flow and predictor feature, then warp.
            auto tu = Clock::now();
            ad::ScopeGuard scope(g, "upsample_warp.lv" + std::to_string(l));
            const geom::PointCloud coarse{
                res.pyr_p.levels[static_cast<std::size_t>(l + 1)].positions.detached()};
            const std::int64_t k_up = std::min(cfg.k_up, coarse.size());
            up_flow = geom::interpolate_idw(
                g, coarse, res.flows.flows[static_cast<std::size_t>(l + 1)], p_cloud, k_up);
            if (cfg.use_predictor_feature) {
                up_pf = geom::interpolate_idw(g, coarse, pred_feat, p_cloud, k_up);
            }
            cv_positions = geom::warp(g, plevel.positions, up_flow);
            if (stats) stats->timings.upsample_warp_ms += ms_since(tu);
        }

        auto tc = Clock::now();
        cost::CostVolume cv;
        {
            ad::ScopeGuard scope(g, "cost_volume.lv" + std::to_string(l));
            cost::CostVolumeParams cvp = params.levels[static_cast<std::size_t>(l - 1)].cv;
            cvp.k = std::min({cfg.k_cv, n_l, q_cloud.size()});
            cost::CostVolumeStats cvstats;
            pconv::FeatureCloud p_in{cv_positions, plevel.features};
            cv = cost::cost_volume(g, p_in, qlevel, cvp, &cvstats);
            if (stats) stats->cv_pair_evals += cvstats.pair_evals;
        }
        if (stats) stats->timings.costvolume_ms += ms_since(tc);

        auto tp = Clock::now();
        {
            ad::ScopeGuard scope(g, "predictor.lv" + std::to_string(l));
            const geom::NeighborIndex self_nbrs =
                geom::knn(p_cloud, p_cloud, std::min(cfg.k_conv, n_l));
            PredictorOut po = predict_flow_level(
                g, plevel.positions, self_nbrs, plevel.features, cv.values,
                has_up ? &up_flow : nullptr,
                (has_up && cfg.use_predictor_feature) ? &up_pf : nullptr,
                params.levels[static_cast<std::size_t>(l - 1)], cfg);
            // Total flow: the residual on top of the upsampled baseline.
            res.flows.flows[static_cast<std::size_t>(l)] =
                has_up ? ad::add(g, up_flow, po.residual) : po.residual;
            pred_feat = po.feat;
        }
        if (stats) stats->timings.predictor_ms += ms_since(tp);
    }

    // Full-resolution flow: one extra upsample, no predictor at level 0.
    auto tu = Clock::now();
    {
        ad::ScopeGuard scope(g, "upsample_warp.lv0");
        const geom::PointCloud coarse{res.pyr_p.levels[1].positions.detached()};
        res.flows.flows[0] = geom::interpolate_idw(g, coarse, res.flows.flows[1], P,
                                                   std::min(cfg.k_up, coarse.size()));
    }
    if (stats) stats->timings.upsample_warp_ms += ms_since(tu);

    return res;
}

ComponentTimings component_timings(const geom::PointCloud& P, const geom::PointCloud& Q,
                                   const NetworkParams& params) {
    Graph g;
    NetworkParams attached = attach(g, params);
    ForwardStats stats;
    forward(g, P, Q, attached, &stats);
    return stats.timings;
}

} // namespace pcflow::net
