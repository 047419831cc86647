// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "pcflow/graph.hpp"
#include "pcflow/ops.hpp"
#include "pcflow/random.hpp"
#include "pcflow/tensor.hpp"

namespace pcflow::ad {

struct MlpLayer {
    Tensor w; // out x in
    Tensor b; // {out}
};

// Per-point multi-layer perceptron. Hidden layers use a leaky rectifier;
// the final layer is linear.
struct MlpParams {
    std::vector<MlpLayer> layers;
    double slope = 0.1;

    std::int64_t in_width() const { return layers.front().w.shape[1]; }
    std::int64_t out_width() const { return layers.back().w.shape[0]; }
    void validate() const; // layer widths must chain
};

// widths = {in, hidden..., out}; weights uniform in +-sqrt(6/(fan_in+fan_out)),
// biases zero.
MlpParams make_mlp(const std::vector<std::int64_t>& widths, Rng& rng, double slope = 0.1);

// Zeroes the final layer so the map's output starts at exactly zero.
void zero_last_layer(MlpParams& p);

MlpParams attach(Graph& g, const MlpParams& p);

// x: N x in -> N x out.
Tensor mlp_forward(Graph& g, const MlpParams& p, const Tensor& x);

// Post-activation output of every layer, final entry identical to
// mlp_forward's result.
std::vector<Tensor> mlp_forward_all(Graph& g, const MlpParams& p, const Tensor& x);

// Xavier-initialized single linear layer.
MlpLayer make_layer(std::int64_t out, std::int64_t in, Rng& rng);

} // namespace pcflow::ad
