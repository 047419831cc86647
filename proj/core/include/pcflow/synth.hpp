// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic point cloud pairs with exact ground-truth flow; everything is
// deterministic given the seed.

#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "pcflow/geom.hpp"

namespace pcflow::harness {

struct SynthSpec {
    enum class Shape { kUniformBox, kSphereShell, kPlanarGrid, kMultiObject };
    enum class Motion { kTranslation, kRigid, kPerObjectRigid, kSmoothDeformation };

    std::int64_t n_points = 256;
    Shape shape = Shape::kUniformBox;
    Motion motion = Motion::kTranslation;
    std::array<double, 3> translation = {0.1, 0.05, -0.02};
    double rotation_deg = 5.0;     // rigid motions
    double deform_amplitude = 0.1; // smooth deformation
    double noise_sigma = 0.0;      // applied to Q only
    double extent = 1.0;
    std::int64_t objects = 2; // multi-object scenes
    std::uint64_t seed = 1;

    void validate(std::int64_t min_points) const;
};

SynthSpec::Shape shape_from_string(const std::string& s);
SynthSpec::Motion motion_from_string(const std::string& s);
std::string to_string(SynthSpec::Shape s);
std::string to_string(SynthSpec::Motion m);

struct SynthPair {
    geom::PointCloud p;
    geom::PointCloud q;
    geom::SceneFlow gt; // gt(p_i) = motion(p_i) - p_i; Q = P + gt (+ noise)
};

SynthPair synth_pair(const SynthSpec& spec);

} // namespace pcflow::harness
