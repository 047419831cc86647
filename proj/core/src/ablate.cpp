// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/ablate.hpp"

#include <sstream>

#include "pcflow/error.hpp"
#include "pcflow/metrics.hpp"
#include "pcflow/train.hpp"

namespace pcflow::harness {

AblationReport ablate(const RunConfig& base) {
    const std::vector<std::pair<bool, bool>> variants = {
        {false, false}, {true, false}, {true, true}};
    AblationReport report;
    const std::vector<TrainPair> pairs = make_training_data(base);
    for (const auto& pair : pairs) {
        if (!pair.gt) throw ValueError("ablate: needs ground-truth flow to score configurations");
    }
    for (const auto& [up, pf] : variants) {
        RunConfig cfg = base;
        cfg.network.use_upsampled_feature = up;
        cfg.network.use_predictor_feature = pf;
        TrainResult tr = train(cfg, pairs);
        // Mean EPE over the training pairs with the final parameters.
        double epe = 0.0;
        for (const auto& pair : pairs) {
            epe += evaluate(infer(tr.params, pair.p, pair.q), *pair.gt).epe3d;
        }
        epe /= static_cast<double>(pairs.size());
        report.rows.push_back({up, pf, epe});
    }
    const double slack = 1.10;
    report.ordering_ok = report.rows[2].epe3d <= report.rows[1].epe3d * slack &&
                         report.rows[1].epe3d <= report.rows[0].epe3d * slack;
    return report;
}

std::string format_ablation(const AblationReport& report) {
    std::ostringstream os;
    os << "upsampled_feature  predictor_feature  epe3d\n";
    for (const auto& r : report.rows) {
        os << (r.upsampled_feature ? "yes                " : "-                  ")
           << (r.predictor_feature ? "yes                " : "-                  ") << r.epe3d
           << "\n";
    }
    os << "ordering (both <= upsampled <= neither, 10% slack): "
       << (report.ordering_ok ? "ok" : "VIOLATED") << "\n";
    return os.str();
}

} // namespace pcflow::harness
