// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Independently coded brute-force oracles. These deliberately avoid the
// library's kernels: plain loops, naive data structures, no shared helper
// code beyond the tensor container.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pcflow/geom.hpp"
#include "pcflow/mlp.hpp"

namespace oracles {

using pcflow::ad::Tensor;
using pcflow::geom::PointCloud;

inline double dist2(const PointCloud& a, std::int64_t i, const PointCloud& b, std::int64_t j) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double d = a.positions.at(i, c) - b.positions.at(j, c);
        s += d * d;
    }
    return s;
}

// Full-sort KNN over every (distance, index) pair.
inline std::vector<std::int64_t> knn_oracle(const PointCloud& queries, const PointCloud& refs,
                                            std::int64_t k) {
    std::vector<std::int64_t> out;
    for (std::int64_t i = 0; i < queries.size(); ++i) {
        std::vector<std::pair<double, std::int64_t>> all;
        for (std::int64_t j = 0; j < refs.size(); ++j) all.emplace_back(dist2(queries, i, refs, j), j);
        std::sort(all.begin(), all.end());
        for (std::int64_t j = 0; j < k; ++j) out.push_back(all[static_cast<std::size_t>(j)].second);
    }
    return out;
}

// Greedy max-min selection, recomputing every candidate's distance to the
// whole selected set each round.
inline std::vector<std::int64_t> fps_oracle(const PointCloud& cloud, std::int64_t m,
                                            std::int64_t start) {
    std::vector<std::int64_t> sel{start};
    while (static_cast<std::int64_t>(sel.size()) < m) {
        std::int64_t best = -1;
        double best_d = -1.0;
        for (std::int64_t i = 0; i < cloud.size(); ++i) {
            double mind = std::numeric_limits<double>::infinity();
            for (std::int64_t s : sel) mind = std::min(mind, dist2(cloud, i, cloud, s));
            if (mind > best_d) {
                best_d = mind;
                best = i;
            }
        }
        sel.push_back(best);
    }
    return sel;
}

inline double chamfer_oracle(const PointCloud& a, const PointCloud& b) {
    double total = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::int64_t j = 0; j < b.size(); ++j) best = std::min(best, dist2(a, i, b, j));
        total += best;
    }
    for (std::int64_t j = 0; j < b.size(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::int64_t i = 0; i < a.size(); ++i) best = std::min(best, dist2(a, i, b, j));
        total += best;
    }
    return total;
}

// Plain-loop MLP evaluation (leaky rectifier between layers, linear last).
inline std::vector<double> mlp_eval_oracle(const pcflow::ad::MlpParams& p,
                                           const std::vector<double>& x) {
    std::vector<double> h = x;
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        const auto& l = p.layers[li];
        const std::int64_t out_w = l.w.shape[0], in_w = l.w.shape[1];
        std::vector<double> y(static_cast<std::size_t>(out_w));
        for (std::int64_t o = 0; o < out_w; ++o) {
            double s = l.b.data[static_cast<std::size_t>(o)];
            for (std::int64_t i = 0; i < in_w; ++i)
                s += l.w.at(o, i) * h[static_cast<std::size_t>(i)];
            y[static_cast<std::size_t>(o)] = s;
        }
        if (li + 1 < p.layers.size()) {
            for (auto& v : y) v = v >= 0.0 ? v : p.slope * v;
        }
        h = std::move(y);
    }
    return h;
}

} // namespace oracles
