// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pcflow/geom.hpp"

namespace pcflow::harness {

// Endpoint-error metrics. The accuracy/outlier thresholds (0.05/5%,
// 0.1/10%, 0.3/10%) follow scene-flow evaluation convention.
struct FlowMetrics {
    double epe3d = 0.0;      // mean |pred - gt|
    double acc_strict = 0.0; // EPE < 0.05 or relative < 5%
    double acc_relaxed = 0.0; // EPE < 0.1 or relative < 10%
    double outlier = 0.0;    // EPE > 0.3 or relative > 10%
};

FlowMetrics evaluate(const geom::SceneFlow& pred, const geom::SceneFlow& gt);

} // namespace pcflow::harness
