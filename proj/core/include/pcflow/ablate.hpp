// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Feature-concatenation ablation: trains three configurations (no coarser
// features, upsampled pyramid feature only, both features) on identical
// data and seeds and reports EPE3D per row. Only the ordering is asserted
// on the desk-scale task.

#pragma once

#include <string>
#include <vector>

#include "pcflow/config.hpp"

namespace pcflow::harness {

struct AblationRow {
    bool upsampled_feature = false;
    bool predictor_feature = false;
    double epe3d = 0.0;
};

struct AblationReport {
    std::vector<AblationRow> rows; // exactly 3: neither, upsampled, both
    bool ordering_ok = false;      // both <= upsampled <= neither, 10% slack
};

AblationReport ablate(const RunConfig& base);

std::string format_ablation(const AblationReport& report);

} // namespace pcflow::harness
