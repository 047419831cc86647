// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference verification of every differentiable component.
// The checker only re-runs forward evaluations, so it stays independent of
// the adjoint code it validates.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pcflow/graph.hpp"
#include "pcflow/random.hpp"
#include "pcflow/tensor.hpp"

namespace pcflow::harness {

// Builds a scalar loss from the attached variables. `attached[i]` is the
// graph-attached counterpart of the i-th registered variable; the builder
// must route its computation through them.
using LossBuilder =
    std::function<ad::Tensor(ad::Graph& g, const std::vector<ad::Tensor*>& attached)>;

// Max scaled relative error |analytic - fd| / max(1, |analytic|, |fd|) over
// the checked elements. When max_elems_per_var >= 0, a deterministic random
// subset of that size is checked per variable.
double fd_max_rel_err(const std::vector<ad::Tensor*>& vars, const LossBuilder& build,
                      double step = 1e-5, std::int64_t max_elems_per_var = -1,
                      std::uint64_t subsample_seed = 0);

struct GradCheckRow {
    std::string component;
    double max_rel_err = 0.0;
    double tol = 1e-4;
    std::int64_t seeds = 0;
    bool pass = false;
};

// One row per component, each checked across n_seeds random instances of
// at most 64 points.
std::vector<GradCheckRow> run_gradcheck(std::uint64_t seed, std::int64_t n_seeds = 20);

bool gradcheck_passed(const std::vector<GradCheckRow>& rows);
std::string format_gradcheck(const std::vector<GradCheckRow>& rows);

} // namespace pcflow::harness
