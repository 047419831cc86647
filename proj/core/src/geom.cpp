// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "pcflow/error.hpp"

namespace pcflow::geom {

PointCloud make_cloud(Tensor positions) {
    if (positions.ndim() != 2 || positions.shape[1] != 3 || positions.shape[0] < 1) {
        throw ShapeError("point cloud: expected N x 3 positions with N >= 1, got " +
                         ad::shape_str(positions.shape));
    }
    for (double v : positions.data) {
        if (!std::isfinite(v)) throw ValueError("point cloud: non-finite coordinate");
    }
    return PointCloud{positions.detached()};
}

double sqdist(const PointCloud& a, std::int64_t i, const PointCloud& b, std::int64_t j) {
    const double* pa = a.positions.data.data() + 3 * i;
    const double* pb = b.positions.data.data() + 3 * j;
    const double dx = pa[0] - pb[0], dy = pa[1] - pb[1], dz = pa[2] - pb[2];
    return dx * dx + dy * dy + dz * dz;
}

std::vector<std::int64_t> furthest_point_sample(const PointCloud& cloud, std::int64_t m,
                                                std::int64_t start) {
    const std::int64_t n = cloud.size();
    if (m < 1 || m > n) {
        throw ValueError("furthest-point-sample: m=" + std::to_string(m) +
                         " out of range for cloud of " + std::to_string(n) + " points");
    }
    if (start < 0 || start >= n) {
        throw ValueError("furthest-point-sample: start index " + std::to_string(start) +
                         " out of range");
    }
    std::vector<std::int64_t> selected;
    selected.reserve(static_cast<std::size_t>(m));
    selected.push_back(start);
    std::vector<double> min_sq(static_cast<std::size_t>(n),
                               std::numeric_limits<double>::infinity());
    for (std::int64_t round = 1; round < m; ++round) {
        const std::int64_t last = selected.back();
        for (std::int64_t i = 0; i < n; ++i) {
            const double d = sqdist(cloud, i, cloud, last);
            if (d < min_sq[static_cast<std::size_t>(i)]) min_sq[static_cast<std::size_t>(i)] = d;
        }
        std::int64_t best = -1;
        double best_d = -1.0;
        for (std::int64_t i = 0; i < n; ++i) {
            if (min_sq[static_cast<std::size_t>(i)] > best_d) {
                best_d = min_sq[static_cast<std::size_t>(i)];
                best = i;
            }
        }
        selected.push_back(best);
    }
    return selected;
}

namespace {

// Shared tail of both KNN backends: pick the k smallest (d^2, index) pairs.
void select_k(std::vector<std::pair<double, std::int64_t>>& cand, std::int64_t k,
              std::int64_t* out_row) {
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::int64_t j = 0; j < k; ++j) out_row[j] = cand[static_cast<std::size_t>(j)].second;
}

} // namespace

NeighborIndex knn(const PointCloud& queries, const PointCloud& refs, std::int64_t k) {
    const std::int64_t n = queries.size(), m = refs.size();
    if (k < 1 || k > m) {
        throw ValueError("knn: k=" + std::to_string(k) + " out of range for " + std::to_string(m) +
                         " reference points");
    }
    NeighborIndex out;
    out.k = k;
    out.indices.resize(static_cast<std::size_t>(n * k));
    std::vector<std::pair<double, std::int64_t>> cand(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < m; ++j)
            cand[static_cast<std::size_t>(j)] = {sqdist(queries, i, refs, j), j};
        select_k(cand, k, out.indices.data() + i * k);
    }
    return out;
}

namespace {

struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
};

struct CellHash {
    std::size_t operator()(const CellKey& c) const {
        std::size_t h = static_cast<std::size_t>(c.x) * 0x9e3779b97f4a7c15ull;
        h ^= static_cast<std::size_t>(c.y) * 0xff51afd7ed558ccdull;
        h ^= static_cast<std::size_t>(c.z) * 0xc4ceb9fe1a85ec53ull;
        return h;
    }
};

} // namespace

NeighborIndex knn_grid(const PointCloud& queries, const PointCloud& refs, std::int64_t k) {
    const std::int64_t n = queries.size(), m = refs.size();
    if (k < 1 || k > m) {
        throw ValueError("knn: k=" + std::to_string(k) + " out of range for " + std::to_string(m) +
                         " reference points");
    }
    if (m < 64) return knn(queries, refs, k); // grid gives nothing at tiny sizes

    std::array<double, 3> lo{refs.point(0)}, hi{refs.point(0)};
    for (std::int64_t j = 1; j < m; ++j) {
        const auto p = refs.point(j);
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
    const double vol = std::max((hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]), 0.0);
    double h = std::cbrt(vol * 2.0 / static_cast<double>(m));
    if (!(h > 0.0)) return knn(queries, refs, k); // degenerate extent

    std::unordered_map<CellKey, std::vector<std::int64_t>, CellHash> grid;
    auto cell_of = [&](double x, double y, double z) {
        return CellKey{static_cast<std::int64_t>(std::floor((x - lo[0]) / h)),
                       static_cast<std::int64_t>(std::floor((y - lo[1]) / h)),
                       static_cast<std::int64_t>(std::floor((z - lo[2]) / h))};
    };
    for (std::int64_t j = 0; j < m; ++j) {
        const auto p = refs.point(j);
        grid[cell_of(p[0], p[1], p[2])].push_back(j); // ascending index per bucket
    }

    NeighborIndex out;
    out.k = k;
    out.indices.resize(static_cast<std::size_t>(n * k));
    std::vector<std::pair<double, std::int64_t>> cand;
    for (std::int64_t i = 0; i < n; ++i) {
        const auto q = queries.point(i);
        const CellKey c0 = cell_of(q[0], q[1], q[2]);
        cand.clear();
        for (std::int64_t ring = 0;; ++ring) {
            for (std::int64_t dx = -ring; dx <= ring; ++dx) {
                for (std::int64_t dy = -ring; dy <= ring; ++dy) {
                    for (std::int64_t dz = -ring; dz <= ring; ++dz) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                        auto it = grid.find(CellKey{c0.x + dx, c0.y + dy, c0.z + dz});
                        if (it == grid.end()) continue;
                        for (std::int64_t j : it->second)
                            cand.emplace_back(sqdist(queries, i, refs, j), j);
                    }
                }
            }
            // Any point beyond ring `ring` is at least ring*h away.
            if (static_cast<std::int64_t>(cand.size()) >= k) {
                std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k - 1),
                                 cand.end());
                const double kth = cand[static_cast<std::size_t>(k - 1)].first;
                const double bound = static_cast<double>(ring) * h;
                if (kth <= bound * bound) break;
            }
            if (static_cast<std::int64_t>(cand.size()) >= m) break;
        }
        select_k(cand, k, out.indices.data() + i * k);
    }
    return out;
}

NeighborIndex knn_excluding_self(const PointCloud& cloud, std::int64_t k) {
    const std::int64_t n = cloud.size();
    if (k < 1 || k > n - 1) {
        throw ValueError("knn: k=" + std::to_string(k) + " self-excluded neighbors require " +
                         std::to_string(k + 1) + " points, have " + std::to_string(n));
    }
    NeighborIndex all = knn(cloud, cloud, k + 1);
    NeighborIndex out;
    out.k = k;
    out.indices.resize(static_cast<std::size_t>(n * k));
    for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t w = 0;
        for (std::int64_t j = 0; j <= k && w < k; ++j) {
            const std::int64_t nb = all.at(i, j);
            if (nb == i) continue;
            out.indices[static_cast<std::size_t>(i * k + w)] = nb;
            ++w;
        }
    }
    return out;
}

Tensor interpolate_idw(Graph& g, const PointCloud& coarse, const Tensor& coarse_vals,
                       const PointCloud& fine, std::int64_t k) {
    if (coarse_vals.ndim() != 2 || coarse_vals.shape[0] != coarse.size()) {
        throw ShapeError("interpolate-idw: values " + ad::shape_str(coarse_vals.shape) +
                         " do not match coarse cloud of " + std::to_string(coarse.size()) +
                         " points");
    }
    const NeighborIndex nbrs = knn(fine, coarse, k);
    return ad::idw_interpolate(g, fine.positions, coarse.positions, coarse_vals, nbrs.flat(), k,
                               kIdwEps, kIdwSnapEps);
}

Tensor warp(Graph& g, const Tensor& positions, const Tensor& flow) {
    if (!same_shape(positions, flow)) {
        throw ShapeError("warp: positions " + ad::shape_str(positions.shape) + " vs flow " +
                         ad::shape_str(flow.shape));
    }
    return ad::add(g, positions, flow);
}

PointCloud warp(const PointCloud& cloud, const SceneFlow& flow) {
    if (cloud.size() != flow.size()) {
        throw ShapeError("warp: cloud of " + std::to_string(cloud.size()) + " points vs flow of " +
                         std::to_string(flow.size()) + " vectors");
    }
    Tensor p = cloud.positions.detached();
    for (std::int64_t i = 0; i < p.numel(); ++i) p.data[i] += flow.vectors.data[i];
    return PointCloud{std::move(p)};
}

PointCloud gather_cloud(const PointCloud& cloud, std::span<const std::int64_t> idx) {
    Tensor p({static_cast<std::int64_t>(idx.size()), 3});
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (int a = 0; a < 3; ++a) p.data[3 * i + static_cast<std::size_t>(a)] =
            cloud.positions.data[static_cast<std::size_t>(3 * idx[i] + a)];
    return PointCloud{std::move(p)};
}

} // namespace pcflow::geom
