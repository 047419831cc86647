// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Define-by-run reverse-mode differentiation tape. Each primitive applied
// through ops.hpp appends one node holding the forward value plus whatever
// the adjoint needs; backward() walks the tape once in reverse insertion
// order. A Graph is single-writer: one forward/backward pass at a time.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pcflow/tensor.hpp"

namespace pcflow::ad {

enum class Op : std::uint8_t {
    kLeaf,
    kAdd,
    kSub,
    kMul,
    kScalarMul,
    kAddScalar,
    kMatmul,
    kAddBias,
    kConcatCols,
    kLeakyRelu,
    kSumAll,
    kMeanAll,
    kRowSum,
    kSquare,
    kSqrt,
    kGatherRows,
    kScatterAddRows,
    kMinRows,
    kPairwiseSqDist,
    kGroupedOuterSum,
    kIdwInterp,
};

const char* op_name(Op op);

// Static (non-differentiated) arguments of a node. Only the fields relevant
// to the node's op are meaningful.
struct OpArgs {
    double scalar = 0.0; // kScalarMul / kAddScalar factor, kLeakyRelu slope
    bool trans_a = false;
    bool trans_b = false;
    std::int64_t group = 0; // kGroupedOuterSum group size, kScatterAddRows out rows
    std::shared_ptr<const std::vector<std::int64_t>> indices; // gather/scatter/idw rows, min_rows argmin
    std::vector<std::int64_t> widths;                         // kConcatCols column widths
    std::int64_t k = 0;                                       // kIdwInterp neighbors per row
    double eps = 0.0;
    double eps_snap = 0.0;
};

// Gradients of one backward pass, indexed by node id. Unreached nodes get
// zero tensors of the node's shape.
class Gradients {
public:
    explicit Gradients(std::vector<Tensor> g) : grads_(std::move(g)) {}

    const Tensor& at_node(std::int64_t node_id) const;
    const Tensor& at(const Tensor& t) const; // t must be attached

private:
    std::vector<Tensor> grads_;
};

struct NanReport {
    std::int64_t node = -1;
    std::string op;
    std::string scope;
};

class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // Attaches a value as a graph input. Returns a tensor carrying the new
    // node id; gradients w.r.t. it can be queried after backward().
    Tensor leaf(const Tensor& value);

    std::size_t size() const { return nodes_.size(); }
    Op op_at(std::int64_t id) const { return nodes_[static_cast<std::size_t>(id)].op; }
    const Tensor& value_at(std::int64_t id) const;

    // Gradient of a scalar root w.r.t. every node. Inputs not reachable
    // from the root get exact zeros.
    Gradients backward(const Tensor& root) const;

    // Diagnostic scopes: labels recorded per node so numeric failures can
    // name the component that produced them.
    void push_scope(const std::string& name);
    void pop_scope();
    std::optional<NanReport> first_nan() const;

    // Internal: used by the primitive wrappers in ops.hpp.
    std::int64_t emit(Op op, std::vector<std::int64_t> parents, Tensor value, OpArgs args);
    std::int64_t ensure_node(const Tensor& t); // leaf-on-demand for constants

private:
    struct Node {
        Op op;
        std::vector<std::int64_t> parents;
        Tensor value; // detached forward value
        OpArgs args;
        std::uint32_t scope = 0;
    };

    std::vector<Node> nodes_;
    std::vector<std::string> scope_names_{""}; // interned labels; 0 = root scope
    std::vector<std::uint32_t> scope_stack_{0};

    friend class ScopeGuard;
};

class ScopeGuard {
public:
    ScopeGuard(Graph& g, const std::string& name) : g_(g) { g_.push_scope(name); }
    ~ScopeGuard() { g_.pop_scope(); }
    ScopeGuard(const ScopeGuard&) = delete;
    ScopeGuard& operator=(const ScopeGuard&) = delete;

private:
    Graph& g_;
};

namespace testing {
// Scales the adjoint contributions of one op kind; lets negative-control
// tests verify that the finite-difference checker catches a broken adjoint.
void set_adjoint_corruption(Op op, double scale);
void clear_adjoint_corruption();
} // namespace testing

} // namespace pcflow::ad
