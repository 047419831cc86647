// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/graph.hpp"

#include <cmath>

#include "kernels.hpp"
#include "pcflow/error.hpp"

namespace pcflow::ad {

namespace {

struct Corruption {
    bool active = false;
    Op op = Op::kLeaf;
    double scale = 1.0;
};
Corruption g_corruption;

} // namespace

namespace testing {

void set_adjoint_corruption(Op op, double scale) { g_corruption = {true, op, scale}; }
void clear_adjoint_corruption() { g_corruption = {}; }

} // namespace testing

const char* op_name(Op op) {
    switch (op) {
        case Op::kLeaf: return "leaf";
        case Op::kAdd: return "add";
        case Op::kSub: return "subtract";
        case Op::kMul: return "elementwise-multiply";
        case Op::kScalarMul: return "scalar-multiply";
        case Op::kAddScalar: return "add-scalar";
        case Op::kMatmul: return "matrix-multiply";
        case Op::kAddBias: return "add-bias";
        case Op::kConcatCols: return "concat";
        case Op::kLeakyRelu: return "leaky-rectifier";
        case Op::kSumAll: return "sum-reduce";
        case Op::kMeanAll: return "mean-reduce";
        case Op::kRowSum: return "row-sum";
        case Op::kSquare: return "square";
        case Op::kSqrt: return "square-root";
        case Op::kGatherRows: return "gather-rows";
        case Op::kScatterAddRows: return "scatter-add-rows";
        case Op::kMinRows: return "min-rows";
        case Op::kPairwiseSqDist: return "pairwise-sqdist";
        case Op::kGroupedOuterSum: return "grouped-outer-sum";
        case Op::kIdwInterp: return "idw-interpolate";
    }
    return "?";
}

const Tensor& Gradients::at_node(std::int64_t node_id) const {
    if (node_id < 0 || node_id >= static_cast<std::int64_t>(grads_.size())) {
        throw Error("gradients: node id " + std::to_string(node_id) + " out of range");
    }
    return grads_[static_cast<std::size_t>(node_id)];
}

const Tensor& Gradients::at(const Tensor& t) const {
    if (!t.attached()) throw Error("gradients: tensor is not attached to a graph");
    return at_node(t.node);
}

Tensor Graph::leaf(const Tensor& value) {
    Tensor out = value.detached();
    Tensor stored = out;
    out.node = emit(Op::kLeaf, {}, std::move(stored), {});
    out.graph = this;
    return out;
}

const Tensor& Graph::value_at(std::int64_t id) const {
    return nodes_[static_cast<std::size_t>(id)].value;
}

std::int64_t Graph::emit(Op op, std::vector<std::int64_t> parents, Tensor value, OpArgs args) {
    Node n;
    n.op = op;
    n.parents = std::move(parents);
    n.value = std::move(value);
    n.value.graph = nullptr;
    n.value.node = -1;
    n.args = std::move(args);
    n.scope = scope_stack_.back();
    nodes_.push_back(std::move(n));
    return static_cast<std::int64_t>(nodes_.size()) - 1;
}

std::int64_t Graph::ensure_node(const Tensor& t) {
    if (t.attached()) {
        if (t.graph != this) {
            throw Error("graph: tensor belongs to a different graph");
        }
        return t.node;
    }
    Tensor v = t.detached();
    return emit(Op::kLeaf, {}, std::move(v), {});
}

void Graph::push_scope(const std::string& name) {
    const std::string& cur = scope_names_[scope_stack_.back()];
    std::string label = cur.empty() ? name : cur + "." + name;
    scope_names_.push_back(std::move(label));
    scope_stack_.push_back(static_cast<std::uint32_t>(scope_names_.size()) - 1);
}

void Graph::pop_scope() {
    if (scope_stack_.size() > 1) scope_stack_.pop_back();
}

std::optional<NanReport> Graph::first_nan() const {
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        for (double d : nodes_[id].value.data) {
            if (std::isnan(d)) {
                return NanReport{static_cast<std::int64_t>(id), op_name(nodes_[id].op),
                                 scope_names_[nodes_[id].scope]};
            }
        }
    }
    return std::nullopt;
}

Gradients Graph::backward(const Tensor& root) const {
    if (!root.attached() || root.graph != this) {
        throw Error("backward: root is not attached to this graph");
    }
    if (shape_numel(root.shape) != 1) {
        throw Error("backward: root must be scalar, got shape " + shape_str(root.shape));
    }

    const auto n_nodes = static_cast<std::int64_t>(nodes_.size());
    std::vector<std::vector<double>> grad(static_cast<std::size_t>(n_nodes));
    auto slot = [&](std::int64_t id) -> std::vector<double>& {
        auto& v = grad[static_cast<std::size_t>(id)];
        if (v.empty()) v.assign(nodes_[static_cast<std::size_t>(id)].value.data.size(), 0.0);
        return v;
    };

    slot(root.node)[0] = 1.0;

    for (std::int64_t id = root.node; id >= 0; --id) {
        const auto& g = grad[static_cast<std::size_t>(id)];
        if (g.empty()) continue;
        const Node& nd = nodes_[static_cast<std::size_t>(id)];
        const double corrupt =
            (g_corruption.active && g_corruption.op == nd.op) ? g_corruption.scale : 1.0;
        // acc: add `contrib * corrupt` into the gradient slot of parent `p`.
        auto acc = [&](std::size_t p, const std::vector<double>& contrib) {
            detail::axpy(slot(nd.parents[p]), contrib, corrupt);
        };
        auto pval = [&](std::size_t p) -> const std::vector<double>& {
            return nodes_[static_cast<std::size_t>(nd.parents[p])].value.data;
        };
        auto pshape = [&](std::size_t p) -> const Shape& {
            return nodes_[static_cast<std::size_t>(nd.parents[p])].value.shape;
        };

        switch (nd.op) {
            case Op::kLeaf: break;
            case Op::kAdd: {
                acc(0, g);
                acc(1, g);
                break;
            }
            case Op::kSub: {
                acc(0, g);
                std::vector<double> neg(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) neg[i] = -g[i];
                acc(1, neg);
                break;
            }
            case Op::kMul: {
                const auto& a = pval(0);
                const auto& b = pval(1);
                std::vector<double> da(g.size()), db(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) {
                    da[i] = g[i] * b[i];
                    db[i] = g[i] * a[i];
                }
                acc(0, da);
                acc(1, db);
                break;
            }
            case Op::kScalarMul: {
                std::vector<double> d(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] * nd.args.scalar;
                acc(0, d);
                break;
            }
            case Op::kAddScalar: {
                acc(0, g);
                break;
            }
            case Op::kMatmul: {
                const auto& a = pval(0);
                const auto& b = pval(1);
                const Shape& sa = pshape(0);
                const Shape& sb = pshape(1);
                const bool ta = nd.args.trans_a, tb = nd.args.trans_b;
                const std::int64_t m = ta ? sa[1] : sa[0];
                const std::int64_t kk = ta ? sa[0] : sa[1];
                const std::int64_t n = tb ? sb[0] : sb[1];
                std::vector<double> da(a.size()), db(b.size());
                if (!ta && !tb) {
                    detail::gemm(m, kk, n, g.data(), b.data(), da.data(), false, true);
                    detail::gemm(kk, n, m, a.data(), g.data(), db.data(), true, false);
                } else if (!ta && tb) {
                    detail::gemm(m, kk, n, g.data(), b.data(), da.data(), false, false);
                    detail::gemm(n, kk, m, g.data(), a.data(), db.data(), true, false);
                } else if (ta && !tb) {
                    detail::gemm(kk, m, n, b.data(), g.data(), da.data(), false, true);
                    detail::gemm(kk, n, m, a.data(), g.data(), db.data(), false, false);
                } else {
                    detail::gemm(kk, m, n, b.data(), g.data(), da.data(), true, true);
                    detail::gemm(n, kk, m, g.data(), a.data(), db.data(), true, true);
                }
                acc(0, da);
                acc(1, db);
                break;
            }
            case Op::kAddBias: {
                acc(0, g);
                const Shape& sx = pshape(0);
                const std::int64_t rows = sx[0], c = sx[1];
                std::vector<double> db(static_cast<std::size_t>(c), 0.0);
                for (std::int64_t i = 0; i < rows; ++i)
                    for (std::int64_t j = 0; j < c; ++j)
                        db[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(i * c + j)];
                acc(1, db);
                break;
            }
            case Op::kConcatCols: {
                const std::int64_t rows = nd.value.shape[0];
                const std::int64_t total = nd.value.shape[1];
                std::int64_t off = 0;
                for (std::size_t p = 0; p < nd.parents.size(); ++p) {
                    const std::int64_t c = nd.args.widths[p];
                    std::vector<double> dp(static_cast<std::size_t>(rows * c));
                    for (std::int64_t i = 0; i < rows; ++i)
                        for (std::int64_t j = 0; j < c; ++j)
                            dp[static_cast<std::size_t>(i * c + j)] =
                                g[static_cast<std::size_t>(i * total + off + j)];
                    acc(p, dp);
                    off += c;
                }
                break;
            }
            case Op::kLeakyRelu: {
                const auto& x = pval(0);
                std::vector<double> d(g.size());
                for (std::size_t i = 0; i < g.size(); ++i)
                    d[i] = g[i] * (x[i] >= 0.0 ? 1.0 : nd.args.scalar);
                acc(0, d);
                break;
            }
            case Op::kSumAll: {
                std::vector<double> d(pval(0).size(), g[0]);
                acc(0, d);
                break;
            }
            case Op::kMeanAll: {
                std::vector<double> d(pval(0).size(), g[0] / static_cast<double>(pval(0).size()));
                acc(0, d);
                break;
            }
            case Op::kRowSum: {
                const Shape& sx = pshape(0);
                const std::int64_t rows = sx[0], c = sx[1];
                std::vector<double> d(static_cast<std::size_t>(rows * c));
                for (std::int64_t i = 0; i < rows; ++i)
                    for (std::int64_t j = 0; j < c; ++j)
                        d[static_cast<std::size_t>(i * c + j)] = g[static_cast<std::size_t>(i)];
                acc(0, d);
                break;
            }
            case Op::kSquare: {
                const auto& x = pval(0);
                std::vector<double> d(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) d[i] = 2.0 * x[i] * g[i];
                acc(0, d);
                break;
            }
            case Op::kSqrt: {
                const auto& out = nd.value.data;
                std::vector<double> d(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) d[i] = 0.5 / out[i] * g[i];
                acc(0, d);
                break;
            }
            case Op::kGatherRows: {
                const auto& idx = *nd.args.indices;
                const Shape& sx = pshape(0);
                const std::int64_t c = sx[1];
                std::vector<double> d(pval(0).size(), 0.0);
                for (std::size_t r = 0; r < idx.size(); ++r)
                    for (std::int64_t j = 0; j < c; ++j)
                        d[static_cast<std::size_t>(idx[r] * c + j)] +=
                            g[r * static_cast<std::size_t>(c) + static_cast<std::size_t>(j)];
                acc(0, d);
                break;
            }
            case Op::kScatterAddRows: {
                const auto& idx = *nd.args.indices;
                const std::int64_t c = nd.value.shape[1];
                std::vector<double> d(pval(0).size());
                for (std::size_t r = 0; r < idx.size(); ++r)
                    for (std::int64_t j = 0; j < c; ++j)
                        d[r * static_cast<std::size_t>(c) + static_cast<std::size_t>(j)] =
                            g[static_cast<std::size_t>(idx[r] * c + j)];
                acc(0, d);
                break;
            }
            case Op::kMinRows: {
                const auto& argmin = *nd.args.indices;
                const Shape& sx = pshape(0);
                const std::int64_t c = sx[1];
                std::vector<double> d(pval(0).size(), 0.0);
                for (std::size_t i = 0; i < argmin.size(); ++i)
                    d[i * static_cast<std::size_t>(c) + static_cast<std::size_t>(argmin[i])] = g[i];
                acc(0, d);
                break;
            }
            case Op::kPairwiseSqDist: {
                const auto& a = pval(0);
                const auto& b = pval(1);
                const std::int64_t n = pshape(0)[0], m = pshape(1)[0], c = pshape(0)[1];
                std::vector<double> da(a.size(), 0.0), db(b.size(), 0.0);
                for (std::int64_t i = 0; i < n; ++i) {
                    for (std::int64_t j = 0; j < m; ++j) {
                        const double gij = g[static_cast<std::size_t>(i * m + j)];
                        if (gij == 0.0) continue;
                        for (std::int64_t l = 0; l < c; ++l) {
                            const double diff =
                                a[static_cast<std::size_t>(i * c + l)] - b[static_cast<std::size_t>(j * c + l)];
                            da[static_cast<std::size_t>(i * c + l)] += 2.0 * diff * gij;
                            db[static_cast<std::size_t>(j * c + l)] -= 2.0 * diff * gij;
                        }
                    }
                }
                acc(0, da);
                acc(1, db);
                break;
            }
            case Op::kGroupedOuterSum: {
                const auto& a = pval(0);
                const auto& b = pval(1);
                const std::int64_t rows = pshape(0)[0];
                const std::int64_t ca = pshape(0)[1], cb = pshape(1)[1];
                const std::int64_t group = nd.args.group;
                std::vector<double> da(a.size(), 0.0), db(b.size(), 0.0);
                for (std::int64_t r = 0; r < rows; ++r) {
                    const double* go = g.data() + (r / group) * ca * cb;
                    const double* ar = a.data() + r * ca;
                    const double* br = b.data() + r * cb;
                    double* dar = da.data() + r * ca;
                    double* dbr = db.data() + r * cb;
                    for (std::int64_t p = 0; p < ca; ++p) {
                        for (std::int64_t q = 0; q < cb; ++q) {
                            dar[p] += go[p * cb + q] * br[q];
                            dbr[q] += go[p * cb + q] * ar[p];
                        }
                    }
                }
                acc(0, da);
                acc(1, db);
                break;
            }
            case Op::kIdwInterp: {
                const auto& fine = pval(0);
                const auto& coarse = pval(1);
                const auto& vals = pval(2);
                const auto& idx = *nd.args.indices;
                const std::int64_t n = pshape(0)[0], p = pshape(0)[1];
                const std::int64_t c = pshape(2)[1];
                const std::int64_t k = nd.args.k;
                const double eps = nd.args.eps, eps_snap = nd.args.eps_snap;
                const auto& out = nd.value.data;
                std::vector<double> dfine(fine.size(), 0.0), dcoarse(coarse.size(), 0.0),
                    dvals(vals.size(), 0.0);
                std::vector<double> w(static_cast<std::size_t>(k)), d(static_cast<std::size_t>(k));
                for (std::int64_t i = 0; i < n; ++i) {
                    const double* f = fine.data() + i * p;
                    double wsum = 0.0;
                    for (std::int64_t j = 0; j < k; ++j) {
                        const std::int64_t src = idx[static_cast<std::size_t>(i * k + j)];
                        const double* cp = coarse.data() + src * p;
                        double s = 0.0;
                        for (std::int64_t l = 0; l < p; ++l) {
                            const double diff = f[l] - cp[l];
                            s += diff * diff;
                        }
                        d[static_cast<std::size_t>(j)] = std::sqrt(s);
                        w[static_cast<std::size_t>(j)] = 1.0 / (d[static_cast<std::size_t>(j)] + eps);
                        wsum += w[static_cast<std::size_t>(j)];
                    }
                    if (d[0] < eps_snap) {
                        // Snapped row: a plain copy of the nearest value.
                        const std::int64_t src = idx[static_cast<std::size_t>(i * k)];
                        for (std::int64_t l = 0; l < c; ++l)
                            dvals[static_cast<std::size_t>(src * c + l)] +=
                                g[static_cast<std::size_t>(i * c + l)];
                        continue;
                    }
                    for (std::int64_t j = 0; j < k; ++j) {
                        const std::int64_t src = idx[static_cast<std::size_t>(i * k + j)];
                        const double wj = w[static_cast<std::size_t>(j)];
                        const double dj = d[static_cast<std::size_t>(j)];
                        // d loss / d w_ij via the normalized combination.
                        double dl_dw = 0.0;
                        for (std::int64_t l = 0; l < c; ++l) {
                            const double gl = g[static_cast<std::size_t>(i * c + l)];
                            dvals[static_cast<std::size_t>(src * c + l)] += gl * wj / wsum;
                            dl_dw += gl * (vals[static_cast<std::size_t>(src * c + l)] -
                                           out[static_cast<std::size_t>(i * c + l)]) /
                                     wsum;
                        }
                        // dw/dd = -w^2; dd/dfine = (f - c)/d.
                        const double dl_dd = dl_dw * (-wj * wj);
                        const double* cp = coarse.data() + src * p;
                        for (std::int64_t l = 0; l < p; ++l) {
                            const double dir = (f[l] - cp[l]) / dj;
                            dfine[static_cast<std::size_t>(i * p + l)] += dl_dd * dir;
                            dcoarse[static_cast<std::size_t>(src * p + l)] -= dl_dd * dir;
                        }
                    }
                }
                acc(0, dfine);
                acc(1, dcoarse);
                acc(2, dvals);
                break;
            }
        }
    }

    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(n_nodes));
    for (std::int64_t id = 0; id < n_nodes; ++id) {
        const Node& nd = nodes_[static_cast<std::size_t>(id)];
        Tensor t(nd.value.shape);
        if (!grad[static_cast<std::size_t>(id)].empty()) t.data = std::move(grad[static_cast<std::size_t>(id)]);
        out.push_back(std::move(t));
    }
    return Gradients(std::move(out));
}

} // namespace pcflow::ad
