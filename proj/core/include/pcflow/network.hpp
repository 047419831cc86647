// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Coarse-to-fine scene flow network: shared-weight feature pyramids for
// both clouds, then per level warping, cost volume, and flow prediction,
// with inverse-distance upsampling between levels.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pcflow/costvolume.hpp"
#include "pcflow/geom.hpp"
#include "pcflow/mlp.hpp"
#include "pcflow/pointconv.hpp"

namespace pcflow::net {

using ad::Graph;
using ad::Tensor;

// Level 0 is the input (finest) level; each coarser level has
// ceil(N_prev / 4) points.
struct NetworkConfig {
    std::int64_t levels = 4;
    std::vector<std::int64_t> widths = {32, 64, 128}; // conv output width, levels 1..L-1
    std::vector<std::int64_t> cv_dim = {64, 64, 64};  // cost volume D, levels 1..L-1
    std::int64_t k_cv = 16;   // cost volume neighborhoods
    std::int64_t k_conv = 16; // pyramid / predictor convolutions
    std::int64_t k_up = 3;    // inverse-distance upsampling
    std::int64_t k_loss = 8;  // smoothness / Laplacian neighborhoods
    std::int64_t weightnet_out = 8;
    std::vector<std::int64_t> weightnet_hidden = {8};
    std::vector<std::int64_t> cost_hidden = {32};
    std::vector<std::int64_t> w_hidden = {8};
    std::vector<std::int64_t> pred_conv_widths = {64, 64};
    std::vector<std::int64_t> head_hidden = {64, 32};
    bool use_upsampled_feature = true;
    bool use_predictor_feature = true;
    double act_slope = 0.1;

    // Width of the conv output entering level l bottom-up (coords at 0).
    std::int64_t bu_width(std::int64_t l) const { return l == 0 ? 3 : widths[static_cast<std::size_t>(l - 1)]; }
    // Width of level-l features after the top-down merge.
    std::int64_t final_width(std::int64_t l) const {
        if (!use_upsampled_feature || l == levels - 1) return bu_width(l);
        return 2 * bu_width(l);
    }
    std::int64_t pf_width() const { return head_hidden.back(); }
    std::int64_t pred_in_width(std::int64_t l) const {
        std::int64_t w = final_width(l) + cv_dim[static_cast<std::size_t>(l - 1)];
        if (l < levels - 1) w += 3 + (use_predictor_feature ? pf_width() : 0);
        return w;
    }
    std::int64_t min_points() const {
        std::int64_t p = 1;
        for (std::int64_t l = 1; l < levels; ++l) p *= 4;
        return p;
    }

    void validate() const;
};

// Learnables of one pyramid level (index l-1 for level l in 1..L-1).
struct LevelParams {
    pconv::PointConvParams conv; // pyramid downsampling conv
    ad::MlpLayer lin;            // pyramid 1x1 conv
    cost::CostVolumeParams cv;
    std::vector<pconv::PointConvParams> pred_convs;
    ad::MlpParams head; // ... -> 3, final layer zero-initialized
};

struct NetworkParams {
    NetworkConfig cfg;
    std::vector<LevelParams> levels;  // size L-1
    std::vector<ad::MlpLayer> merge;  // top-down merge conv per level 0..L-2
};

NetworkParams init_params(const NetworkConfig& cfg, Rng& rng);
NetworkParams attach(Graph& g, const NetworkParams& p);

// Stable (name, tensor) enumeration; iteration order is the registration
// order and is identical between a params object and its attached copy.
std::vector<std::pair<std::string, Tensor*>> param_list(NetworkParams& p);
std::vector<std::pair<std::string, const Tensor*>> param_list(const NetworkParams& p);

struct Pyramid {
    std::vector<pconv::FeatureCloud> levels;            // finest -> coarsest
    std::vector<std::vector<std::int64_t>> sample_maps; // [l]: indices into level l-1; [0] empty

    std::int64_t level_count() const { return static_cast<std::int64_t>(levels.size()); }
};

Pyramid build_pyramid(Graph& g, const geom::PointCloud& cloud, const NetworkParams& attached);

// Ground-truth flow restricted to each pyramid level via the sample maps.
std::vector<Tensor> subsample_to_levels(const Pyramid& pyr, const Tensor& full_res_rows);

struct FlowPyramid {
    std::vector<Tensor> flows; // finest first, one N_l x 3 tensor per level
};

struct PredictorOut {
    Tensor residual; // N x 3; zero when the head is zeroed
    Tensor feat;     // second-last layer activations
};

// Residual flow at one level. At the coarsest level `up_flow` and
// `up_pred_feat` are null and the residual is the total flow.
PredictorOut predict_flow_level(Graph& g, const Tensor& level_pos,
                                const geom::NeighborIndex& self_nbrs, const Tensor& p_feats,
                                const Tensor& cost_vals, const Tensor* up_flow,
                                const Tensor* up_pred_feat, const LevelParams& lp,
                                const NetworkConfig& cfg);

struct ComponentTimings {
    double pyramid_ms = 0.0;
    double costvolume_ms = 0.0;
    double upsample_warp_ms = 0.0;
    double predictor_ms = 0.0;

    std::vector<std::pair<std::string, double>> rows() const {
        return {{"feature_pyramid", pyramid_ms},
                {"cost_volume", costvolume_ms},
                {"upsample_warp", upsample_warp_ms},
                {"predictor", predictor_ms}};
    }
};

struct ForwardStats {
    ComponentTimings timings;
    std::int64_t cv_pair_evals = 0;
};

struct ForwardResult {
    FlowPyramid flows;
    Pyramid pyr_p;
    Pyramid pyr_q;
};

ForwardResult forward(Graph& g, const geom::PointCloud& P, const geom::PointCloud& Q,
                      const NetworkParams& attached, ForwardStats* stats = nullptr);

// Wall-clock per component of one forward pass with fresh params.
ComponentTimings component_timings(const geom::PointCloud& P, const geom::PointCloud& Q,
                                   const NetworkParams& params);

} // namespace pcflow::net
