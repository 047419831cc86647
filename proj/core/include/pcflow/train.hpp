// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Adaptive-moment gradient descent over either objective, with periodic
// checkpointing and an append-only loss log. (seed, config) fully
// determines the trajectory.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcflow/config.hpp"
#include "pcflow/geom.hpp"
#include "pcflow/io.hpp"
#include "pcflow/network.hpp"

namespace pcflow::harness {

struct TrainPair {
    geom::PointCloud p;
    geom::PointCloud q;
    std::optional<geom::SceneFlow> gt;
};

// Materializes the data section: synthetic pairs or files.
std::vector<TrainPair> make_training_data(const RunConfig& cfg);

struct TrainOptions {
    std::string out_dir;  // when set: checkpoints + loss log are written there
    bool resume = true;   // continue from the newest checkpoint in out_dir
    bool verbose = false; // per-step stderr lines
};

struct TrainResult {
    net::NetworkParams params;
    std::vector<io::LossLogRow> log; // one row per executed step
    std::int64_t start_step = 0;     // > 0 when resumed
};

TrainResult train(const RunConfig& cfg, const std::vector<TrainPair>& pairs,
                  const TrainOptions& opts = {});

// Adam state stored alongside parameters so resumed runs continue exactly.
struct AdamState {
    std::vector<ad::Tensor> m;
    std::vector<ad::Tensor> v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

std::string checkpoint_path(const std::string& out_dir, std::int64_t step);
std::optional<std::pair<std::string, std::int64_t>> latest_checkpoint(const std::string& out_dir);

// Inference convenience: full-resolution flow for one pair.
geom::SceneFlow infer(const net::NetworkParams& params, const geom::PointCloud& p,
                      const geom::PointCloud& q);

} // namespace pcflow::harness
