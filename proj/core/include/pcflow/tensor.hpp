// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pcflow::ad {

class Graph;

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major array of 64-bit floats. A tensor optionally carries a
// handle (`node`) into the Graph that produced it; tensors without a node
// are plain immutable values.
struct Tensor {
    Shape shape;
    std::vector<double> data;
    Graph* graph = nullptr;
    std::int64_t node = -1;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> d);
    explicit Tensor(Shape s); // zero-filled

    bool attached() const { return node >= 0; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    std::int64_t ndim() const { return static_cast<std::int64_t>(shape.size()); }

    // 2-d accessors; 1-d tensors behave as a single column.
    std::int64_t rows() const;
    std::int64_t cols() const;
    double& at(std::int64_t r, std::int64_t c);
    double at(std::int64_t r, std::int64_t c) const;

    double scalar() const; // requires numel() == 1

    Tensor detached() const;

    static Tensor zeros(Shape s);
    static Tensor full(Shape s, double v);
    static Tensor scalar_value(double v); // shape {1}
};

bool same_shape(const Tensor& a, const Tensor& b);

} // namespace pcflow::ad
