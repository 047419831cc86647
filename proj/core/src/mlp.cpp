// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/mlp.hpp"

#include <cmath>

#include "pcflow/error.hpp"

namespace pcflow::ad {

void MlpParams::validate() const {
    if (layers.empty()) throw ShapeError("mlp: no layers");
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
        if (layers[i].w.shape[0] != layers[i + 1].w.shape[1]) {
            throw ShapeError("mlp: layer " + std::to_string(i) + " output width " +
                             std::to_string(layers[i].w.shape[0]) + " does not chain into layer " +
                             std::to_string(i + 1) + " input width " +
                             std::to_string(layers[i + 1].w.shape[1]));
        }
    }
}

MlpLayer make_layer(std::int64_t out, std::int64_t in, Rng& rng) {
    MlpLayer l;
    l.w = Tensor({out, in});
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (auto& v : l.w.data) v = rng.uniform(-bound, bound);
    l.b = Tensor({out});
    return l;
}

MlpParams make_mlp(const std::vector<std::int64_t>& widths, Rng& rng, double slope) {
    if (widths.size() < 2) throw ShapeError("mlp: need at least an input and an output width");
    MlpParams p;
    p.slope = slope;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        p.layers.push_back(make_layer(widths[i + 1], widths[i], rng));
    return p;
}

void zero_last_layer(MlpParams& p) {
    for (auto& v : p.layers.back().w.data) v = 0.0;
    for (auto& v : p.layers.back().b.data) v = 0.0;
}

MlpParams attach(Graph& g, const MlpParams& p) {
    MlpParams out;
    out.slope = p.slope;
    out.layers.reserve(p.layers.size());
    for (const auto& l : p.layers) out.layers.push_back({g.leaf(l.w), g.leaf(l.b)});
    return out;
}

Tensor mlp_forward(Graph& g, const MlpParams& p, const Tensor& x) {
    return mlp_forward_all(g, p, x).back();
}

std::vector<Tensor> mlp_forward_all(Graph& g, const MlpParams& p, const Tensor& x) {
    p.validate();
    if (x.ndim() != 2 || x.shape[1] != p.in_width()) {
        throw ShapeError("mlp: input " + shape_str(x.shape) + " does not match first layer width " +
                         std::to_string(p.in_width()));
    }
    std::vector<Tensor> outs;
    outs.reserve(p.layers.size());
    Tensor h = x;
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        h = add_bias(g, matmul(g, h, p.layers[i].w, false, true), p.layers[i].b);
        if (i + 1 < p.layers.size()) h = leaky_relu(g, h, p.slope);
        outs.push_back(h);
    }
    return outs;
}

} // namespace pcflow::ad
