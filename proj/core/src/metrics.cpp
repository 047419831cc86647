// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/metrics.hpp"

#include <cmath>
#include <limits>

#include "pcflow/error.hpp"

namespace pcflow::harness {

FlowMetrics evaluate(const geom::SceneFlow& pred, const geom::SceneFlow& gt) {
    if (!same_shape(pred.vectors, gt.vectors)) {
        throw ShapeError("evaluate: pred " + ad::shape_str(pred.vectors.shape) + " vs gt " +
                         ad::shape_str(gt.vectors.shape));
    }
    const std::int64_t n = pred.size();
    FlowMetrics m;
    for (std::int64_t i = 0; i < n; ++i) {
        double e2 = 0.0, g2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double d = pred.vectors.at(i, a) - gt.vectors.at(i, a);
            e2 += d * d;
            g2 += gt.vectors.at(i, a) * gt.vectors.at(i, a);
        }
        const double epe = std::sqrt(e2);
        const double gnorm = std::sqrt(g2);
        const double rel = gnorm > 0.0 ? epe / gnorm
                           : (epe > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        m.epe3d += epe;
        if (epe < 0.05 || rel < 0.05) m.acc_strict += 1.0;
        if (epe < 0.1 || rel < 0.1) m.acc_relaxed += 1.0;
        if (epe > 0.3 || rel > 0.1) m.outlier += 1.0;
    }
    const auto dn = static_cast<double>(n);
    m.epe3d /= dn;
    m.acc_strict /= dn;
    m.acc_relaxed /= dn;
    m.outlier /= dn;
    return m;
}

} // namespace pcflow::harness
