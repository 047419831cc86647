// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/ops.hpp"

#include <cmath>
#include <limits>

#include "kernels.hpp"
#include "pcflow/error.hpp"

namespace pcflow::ad {

namespace {

Tensor finish(Graph& g, Op op, std::vector<std::int64_t> parents, Tensor value, OpArgs args = {}) {
    Tensor out = value;
    const std::int64_t id = g.emit(op, std::move(parents), std::move(value), std::move(args));
    out.graph = &g;
    out.node = id;
    return out;
}

void require(bool ok, const char* op, const Tensor& a, const Tensor& b) {
    if (!ok) {
        throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape) + " and " +
                         shape_str(b.shape));
    }
}

void require_2d(const Tensor& t, const char* op) {
    if (t.ndim() != 2) {
        throw ShapeError(std::string(op) + ": expected a 2-d tensor, got " + shape_str(t.shape));
    }
}

} // namespace

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
    require(same_shape(a, b), "add", a, b);
    Tensor v(a.shape);
    for (std::int64_t i = 0; i < a.numel(); ++i) v.data[i] = a.data[i] + b.data[i];
    return finish(g, Op::kAdd, {g.ensure_node(a), g.ensure_node(b)}, std::move(v));
}

Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
    require(same_shape(a, b), "subtract", a, b);
    Tensor v(a.shape);
    for (std::int64_t i = 0; i < a.numel(); ++i) v.data[i] = a.data[i] - b.data[i];
    return finish(g, Op::kSub, {g.ensure_node(a), g.ensure_node(b)}, std::move(v));
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
    require(same_shape(a, b), "elementwise-multiply", a, b);
    Tensor v(a.shape);
    for (std::int64_t i = 0; i < a.numel(); ++i) v.data[i] = a.data[i] * b.data[i];
    return finish(g, Op::kMul, {g.ensure_node(a), g.ensure_node(b)}, std::move(v));
}

Tensor scalar_mul(Graph& g, const Tensor& a, double c) {
    Tensor v(a.shape);
    for (std::int64_t i = 0; i < a.numel(); ++i) v.data[i] = a.data[i] * c;
    OpArgs args;
    args.scalar = c;
    return finish(g, Op::kScalarMul, {g.ensure_node(a)}, std::move(v), std::move(args));
}

Tensor add_scalar(Graph& g, const Tensor& a, double c) {
    Tensor v(a.shape);
    for (std::int64_t i = 0; i < a.numel(); ++i) v.data[i] = a.data[i] + c;
    OpArgs args;
    args.scalar = c;
    return finish(g, Op::kAddScalar, {g.ensure_node(a)}, std::move(v), std::move(args));
}

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    require_2d(a, "matrix-multiply");
    require_2d(b, "matrix-multiply");
    const std::int64_t m = trans_a ? a.shape[1] : a.shape[0];
    const std::int64_t ka = trans_a ? a.shape[0] : a.shape[1];
    const std::int64_t kb = trans_b ? b.shape[1] : b.shape[0];
    const std::int64_t n = trans_b ? b.shape[0] : b.shape[1];
    require(ka == kb, "matrix-multiply", a, b);
    Tensor v({m, n});
    detail::gemm(m, n, ka, a.data.data(), b.data.data(), v.data.data(), trans_a, trans_b);
    OpArgs args;
    args.trans_a = trans_a;
    args.trans_b = trans_b;
    return finish(g, Op::kMatmul, {g.ensure_node(a), g.ensure_node(b)}, std::move(v),
                  std::move(args));
}

Tensor add_bias(Graph& g, const Tensor& x, const Tensor& bias) {
    require_2d(x, "add-bias");
    require(bias.ndim() == 1 && bias.shape[0] == x.shape[1], "add-bias", x, bias);
    Tensor v(x.shape);
    const std::int64_t n = x.shape[0], c = x.shape[1];
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < c; ++j) v.data[i * c + j] = x.data[i * c + j] + bias.data[j];
    return finish(g, Op::kAddBias, {g.ensure_node(x), g.ensure_node(bias)}, std::move(v));
}

Tensor concat_cols(Graph& g, std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const std::int64_t n = parts[0].ndim() == 2 ? parts[0].shape[0] : -1;
    std::int64_t total = 0;
    OpArgs args;
    std::vector<std::int64_t> parents;
    for (const Tensor& p : parts) {
        require_2d(p, "concat");
        require(p.shape[0] == n, "concat", parts[0], p);
        args.widths.push_back(p.shape[1]);
        total += p.shape[1];
    }
    Tensor v({n, total});
    std::int64_t off = 0;
    for (const Tensor& p : parts) {
        const std::int64_t c = p.shape[1];
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < c; ++j) v.data[i * total + off + j] = p.data[i * c + j];
        off += c;
    }
    parents.reserve(parts.size());
    for (const Tensor& p : parts) parents.push_back(g.ensure_node(p));
    return finish(g, Op::kConcatCols, std::move(parents), std::move(v), std::move(args));
}

Tensor concat_cols(Graph& g, std::initializer_list<Tensor> parts) {
    std::vector<Tensor> v(parts);
    return concat_cols(g, std::span<const Tensor>(v));
}

Tensor leaky_relu(Graph& g, const Tensor& x, double slope) {
    Tensor v(x.shape);
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        const double a = x.data[i];
        v.data[i] = a >= 0.0 ? a : slope * a;
    }
    OpArgs args;
    args.scalar = slope;
    return finish(g, Op::kLeakyRelu, {g.ensure_node(x)}, std::move(v), std::move(args));
}

Tensor sum_all(Graph& g, const Tensor& x) {
    double s = 0.0;
    for (double d : x.data) s += d;
    return finish(g, Op::kSumAll, {g.ensure_node(x)}, Tensor::scalar_value(s));
}

Tensor mean_all(Graph& g, const Tensor& x) {
    double s = 0.0;
    for (double d : x.data) s += d;
    return finish(g, Op::kMeanAll, {g.ensure_node(x)},
                  Tensor::scalar_value(s / static_cast<double>(x.numel())));
}

Tensor row_sum(Graph& g, const Tensor& x) {
    require_2d(x, "row-sum");
    const std::int64_t n = x.shape[0], c = x.shape[1];
    Tensor v({n});
    for (std::int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::int64_t j = 0; j < c; ++j) s += x.data[i * c + j];
        v.data[i] = s;
    }
    return finish(g, Op::kRowSum, {g.ensure_node(x)}, std::move(v));
}

Tensor square(Graph& g, const Tensor& x) {
    Tensor v(x.shape);
    for (std::int64_t i = 0; i < x.numel(); ++i) v.data[i] = x.data[i] * x.data[i];
    return finish(g, Op::kSquare, {g.ensure_node(x)}, std::move(v));
}

Tensor sqrt_elem(Graph& g, const Tensor& x) {
    Tensor v(x.shape);
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        if (x.data[i] < 0.0) {
            throw ValueError("square-root: negative input " + std::to_string(x.data[i]) +
                             " at flat index " + std::to_string(i));
        }
        v.data[i] = std::sqrt(x.data[i]);
    }
    return finish(g, Op::kSqrt, {g.ensure_node(x)}, std::move(v));
}

Tensor gather_rows(Graph& g, const Tensor& x, std::span<const std::int64_t> idx) {
    require_2d(x, "gather-rows");
    const std::int64_t n = x.shape[0], c = x.shape[1];
    const auto r = static_cast<std::int64_t>(idx.size());
    Tensor v({r, c});
    for (std::int64_t i = 0; i < r; ++i) {
        const std::int64_t src = idx[static_cast<std::size_t>(i)];
        if (src < 0 || src >= n) {
            throw ValueError("gather-rows: index " + std::to_string(src) + " out of range [0," +
                             std::to_string(n) + ")");
        }
        for (std::int64_t j = 0; j < c; ++j) v.data[i * c + j] = x.data[src * c + j];
    }
    OpArgs args;
    args.indices = std::make_shared<const std::vector<std::int64_t>>(idx.begin(), idx.end());
    return finish(g, Op::kGatherRows, {g.ensure_node(x)}, std::move(v), std::move(args));
}

Tensor scatter_add_rows(Graph& g, const Tensor& x, std::span<const std::int64_t> idx,
                        std::int64_t out_rows) {
    require_2d(x, "scatter-add-rows");
    const std::int64_t r = x.shape[0], c = x.shape[1];
    if (static_cast<std::int64_t>(idx.size()) != r) {
        throw ShapeError("scatter-add-rows: " + std::to_string(idx.size()) + " indices for " +
                         std::to_string(r) + " rows");
    }
    Tensor v({out_rows, c});
    for (std::int64_t i = 0; i < r; ++i) {
        const std::int64_t dst = idx[static_cast<std::size_t>(i)];
        if (dst < 0 || dst >= out_rows) {
            throw ValueError("scatter-add-rows: index " + std::to_string(dst) +
                             " out of range [0," + std::to_string(out_rows) + ")");
        }
        for (std::int64_t j = 0; j < c; ++j) v.data[dst * c + j] += x.data[i * c + j];
    }
    OpArgs args;
    args.indices = std::make_shared<const std::vector<std::int64_t>>(idx.begin(), idx.end());
    args.group = out_rows;
    return finish(g, Op::kScatterAddRows, {g.ensure_node(x)}, std::move(v), std::move(args));
}

MinRowsOut min_rows(Graph& g, const Tensor& x) {
    require_2d(x, "min-rows");
    const std::int64_t n = x.shape[0], c = x.shape[1];
    if (c < 1) throw ShapeError("min-rows: empty rows " + shape_str(x.shape));
    Tensor v({n});
    auto argmin = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(n), 0);
    for (std::int64_t i = 0; i < n; ++i) {
        double best = x.data[i * c];
        std::int64_t bj = 0;
        for (std::int64_t j = 1; j < c; ++j) {
            if (x.data[i * c + j] < best) {
                best = x.data[i * c + j];
                bj = j;
            }
        }
        v.data[i] = best;
        (*argmin)[static_cast<std::size_t>(i)] = bj;
    }
    OpArgs args;
    args.indices = argmin;
    Tensor out = finish(g, Op::kMinRows, {g.ensure_node(x)}, std::move(v), std::move(args));
    return MinRowsOut{std::move(out), *argmin};
}

Tensor pairwise_sqdist(Graph& g, const Tensor& a, const Tensor& b) {
    require_2d(a, "pairwise-sqdist");
    require_2d(b, "pairwise-sqdist");
    require(a.shape[1] == b.shape[1], "pairwise-sqdist", a, b);
    const std::int64_t n = a.shape[0], m = b.shape[0], c = a.shape[1];
    Tensor v({n, m});
    for (std::int64_t i = 0; i < n; ++i) {
        const double* ar = a.data.data() + i * c;
        for (std::int64_t j = 0; j < m; ++j) {
            const double* br = b.data.data() + j * c;
            double s = 0.0;
            for (std::int64_t l = 0; l < c; ++l) {
                const double d = ar[l] - br[l];
                s += d * d;
            }
            v.data[i * m + j] = s;
        }
    }
    return finish(g, Op::kPairwiseSqDist, {g.ensure_node(a), g.ensure_node(b)}, std::move(v));
}

Tensor grouped_outer_sum(Graph& g, const Tensor& a, const Tensor& b, std::int64_t group) {
    require_2d(a, "grouped-outer-sum");
    require_2d(b, "grouped-outer-sum");
    require(a.shape[0] == b.shape[0], "grouped-outer-sum", a, b);
    if (group < 1 || a.shape[0] % group != 0) {
        throw ShapeError("grouped-outer-sum: row count " + std::to_string(a.shape[0]) +
                         " not divisible by group " + std::to_string(group));
    }
    const std::int64_t rows = a.shape[0], ca = a.shape[1], cb = b.shape[1];
    const std::int64_t n = rows / group;
    Tensor v({n, ca * cb});
    for (std::int64_t r = 0; r < rows; ++r) {
        double* out = v.data.data() + (r / group) * ca * cb;
        const double* ar = a.data.data() + r * ca;
        const double* br = b.data.data() + r * cb;
        for (std::int64_t p = 0; p < ca; ++p)
            for (std::int64_t q = 0; q < cb; ++q) out[p * cb + q] += ar[p] * br[q];
    }
    OpArgs args;
    args.group = group;
    return finish(g, Op::kGroupedOuterSum, {g.ensure_node(a), g.ensure_node(b)}, std::move(v),
                  std::move(args));
}

Tensor idw_interpolate(Graph& g, const Tensor& fine_pos, const Tensor& coarse_pos,
                       const Tensor& values, std::span<const std::int64_t> idx, std::int64_t k,
                       double eps, double eps_snap) {
    require_2d(fine_pos, "idw-interpolate");
    require_2d(coarse_pos, "idw-interpolate");
    require_2d(values, "idw-interpolate");
    require(fine_pos.shape[1] == coarse_pos.shape[1], "idw-interpolate", fine_pos, coarse_pos);
    require(values.shape[0] == coarse_pos.shape[0], "idw-interpolate", values, coarse_pos);
    const std::int64_t n = fine_pos.shape[0], p = fine_pos.shape[1], c = values.shape[1];
    if (k < 1 || static_cast<std::int64_t>(idx.size()) != n * k) {
        throw ShapeError("idw-interpolate: index table size " + std::to_string(idx.size()) +
                         " does not match " + std::to_string(n) + " rows x k=" + std::to_string(k));
    }
    Tensor v({n, c});
    for (std::int64_t i = 0; i < n; ++i) {
        const double* f = fine_pos.data.data() + i * p;
        // Nearest neighbor first: idx rows are sorted by distance.
        double d0 = 0.0;
        {
            const double* cp = coarse_pos.data.data() + idx[static_cast<std::size_t>(i * k)] * p;
            double s = 0.0;
            for (std::int64_t l = 0; l < p; ++l) {
                const double d = f[l] - cp[l];
                s += d * d;
            }
            d0 = std::sqrt(s);
        }
        if (d0 < eps_snap) {
            const double* src = values.data.data() + idx[static_cast<std::size_t>(i * k)] * c;
            for (std::int64_t j = 0; j < c; ++j) v.data[i * c + j] = src[j];
            continue;
        }
        double wsum = 0.0;
        std::vector<double> w(static_cast<std::size_t>(k));
        for (std::int64_t j = 0; j < k; ++j) {
            const std::int64_t src = idx[static_cast<std::size_t>(i * k + j)];
            const double* cp = coarse_pos.data.data() + src * p;
            double s = 0.0;
            for (std::int64_t l = 0; l < p; ++l) {
                const double d = f[l] - cp[l];
                s += d * d;
            }
            const double wj = 1.0 / (std::sqrt(s) + eps);
            w[static_cast<std::size_t>(j)] = wj;
            wsum += wj;
        }
        for (std::int64_t j = 0; j < k; ++j) {
            const std::int64_t src = idx[static_cast<std::size_t>(i * k + j)];
            const double* vr = values.data.data() + src * c;
            const double wj = w[static_cast<std::size_t>(j)] / wsum;
            for (std::int64_t l = 0; l < c; ++l) v.data[i * c + l] += wj * vr[l];
        }
    }
    OpArgs args;
    args.indices = std::make_shared<const std::vector<std::int64_t>>(idx.begin(), idx.end());
    args.k = k;
    args.eps = eps;
    args.eps_snap = eps_snap;
    return finish(g, Op::kIdwInterp,
                  {g.ensure_node(fine_pos), g.ensure_node(coarse_pos), g.ensure_node(values)},
                  std::move(v), std::move(args));
}

} // namespace pcflow::ad
