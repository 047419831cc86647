// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: network, loss, training, and data sections. JSON on
// disk; unknown keys are errors so typos cannot silently change a run.

#pragma once

#include <cstdint>
#include <string>

#include "pcflow/losses.hpp"
#include "pcflow/network.hpp"
#include "pcflow/synth.hpp"

namespace pcflow {

struct LossConfig {
    enum class Mode { kSupervised, kSelfSupervised };
    Mode mode = Mode::kSupervised;
    loss::LossWeights weights;
    std::int64_t k_inter = 3; // Laplacian target interpolation neighbors
};

struct TrainConfig {
    double lr = 1e-3;
    std::int64_t steps = 200;
    std::uint64_t seed = 1;
    std::int64_t checkpoint_every = 100;
};

struct DataConfig {
    enum class Kind { kSynthetic, kFiles };
    Kind kind = Kind::kSynthetic;
    harness::SynthSpec spec;
    std::int64_t num_pairs = 1; // synthetic pairs cycled during training
    std::string p_file, q_file, gt_file;
};

struct RunConfig {
    net::NetworkConfig network;
    LossConfig loss;
    TrainConfig train;
    DataConfig data;

    void validate() const; // throws ConfigError; checks referenced files exist
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string to_json(const RunConfig& cfg);

} // namespace pcflow
