// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include "pcflow/synth.hpp"

#include <cmath>
#include <numbers>

#include "pcflow/error.hpp"
#include "pcflow/random.hpp"

namespace pcflow::harness {

namespace {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;

Vec3 rotate(const Mat3& r, const Vec3& p) {
    return {r[0] * p[0] + r[1] * p[1] + r[2] * p[2], r[3] * p[0] + r[4] * p[1] + r[5] * p[2],
            r[6] * p[0] + r[7] * p[1] + r[8] * p[2]};
}

// Rodrigues rotation about a random axis.
Mat3 random_rotation(Rng& rng, double angle_deg) {
    Vec3 axis;
    double norm = 0.0;
    do {
        axis = {rng.normal(), rng.normal(), rng.normal()};
        norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    } while (norm < 1e-9);
    for (auto& a : axis) a /= norm;
    const double t = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(t), s = std::sin(t), v = 1.0 - c;
    const double x = axis[0], y = axis[1], z = axis[2];
    return {c + x * x * v,     x * y * v - z * s, x * z * v + y * s,
            y * x * v + z * s, c + y * y * v,     y * z * v - x * s,
            z * x * v - y * s, z * y * v + x * s, c + z * z * v};
}

} // namespace

void SynthSpec::validate(std::int64_t min_points) const {
    if (n_points < min_points) {
        throw ConfigError("synth: n_points=" + std::to_string(n_points) + " below minimum " +
                          std::to_string(min_points));
    }
    if (noise_sigma < 0.0) throw ConfigError("synth: noise_sigma must be >= 0");
    if (extent <= 0.0) throw ConfigError("synth: extent must be > 0");
    if (shape == Shape::kMultiObject && objects < 1) {
        throw ConfigError("synth: objects must be >= 1");
    }
}

SynthSpec::Shape shape_from_string(const std::string& s) {
    if (s == "uniform-box") return SynthSpec::Shape::kUniformBox;
    if (s == "sphere-shell") return SynthSpec::Shape::kSphereShell;
    if (s == "planar-grid") return SynthSpec::Shape::kPlanarGrid;
    if (s == "multi-object") return SynthSpec::Shape::kMultiObject;
    throw ConfigError("synth: unknown shape '" + s + "'");
}

SynthSpec::Motion motion_from_string(const std::string& s) {
    if (s == "translation") return SynthSpec::Motion::kTranslation;
    if (s == "rigid") return SynthSpec::Motion::kRigid;
    if (s == "per-object-rigid") return SynthSpec::Motion::kPerObjectRigid;
    if (s == "smooth-deformation") return SynthSpec::Motion::kSmoothDeformation;
    throw ConfigError("synth: unknown motion '" + s + "'");
}

std::string to_string(SynthSpec::Shape s) {
    switch (s) {
        case SynthSpec::Shape::kUniformBox: return "uniform-box";
        case SynthSpec::Shape::kSphereShell: return "sphere-shell";
        case SynthSpec::Shape::kPlanarGrid: return "planar-grid";
        case SynthSpec::Shape::kMultiObject: return "multi-object";
    }
    return "?";
}

std::string to_string(SynthSpec::Motion m) {
    switch (m) {
        case SynthSpec::Motion::kTranslation: return "translation";
        case SynthSpec::Motion::kRigid: return "rigid";
        case SynthSpec::Motion::kPerObjectRigid: return "per-object-rigid";
        case SynthSpec::Motion::kSmoothDeformation: return "smooth-deformation";
    }
    return "?";
}

SynthPair synth_pair(const SynthSpec& spec) {
    spec.validate(1);
    const std::int64_t n = spec.n_points;
    Rng rng(spec.seed, /*stream=*/17);

    ad::Tensor pos({n, 3});
    std::vector<std::int64_t> object_of(static_cast<std::size_t>(n), 0);
    switch (spec.shape) {
        case SynthSpec::Shape::kUniformBox: {
            for (auto& v : pos.data) v = rng.uniform(-spec.extent / 2, spec.extent / 2);
            break;
        }
        case SynthSpec::Shape::kSphereShell: {
            for (std::int64_t i = 0; i < n; ++i) {
                Vec3 d;
                double norm = 0.0;
                do {
                    d = {rng.normal(), rng.normal(), rng.normal()};
                    norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
                } while (norm < 1e-9);
                for (int a = 0; a < 3; ++a)
                    pos.data[static_cast<std::size_t>(3 * i + a)] = d[static_cast<std::size_t>(a)] / norm * spec.extent / 2;
            }
            break;
        }
        case SynthSpec::Shape::kPlanarGrid: {
            const auto side = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(n))));
            const double step = spec.extent / static_cast<double>(std::max<std::int64_t>(side - 1, 1));
            for (std::int64_t i = 0; i < n; ++i) {
                pos.at(i, 0) = static_cast<double>(i % side) * step - spec.extent / 2;
                pos.at(i, 1) = static_cast<double>(i / side) * step - spec.extent / 2;
                pos.at(i, 2) = 0.0;
            }
            break;
        }
        case SynthSpec::Shape::kMultiObject: {
            std::vector<Vec3> centers;
            for (std::int64_t o = 0; o < spec.objects; ++o) {
                centers.push_back({rng.uniform(-spec.extent, spec.extent),
                                   rng.uniform(-spec.extent, spec.extent),
                                   rng.uniform(-spec.extent, spec.extent)});
            }
            const std::int64_t per = n / spec.objects;
            for (std::int64_t i = 0; i < n; ++i) {
                const std::int64_t o = std::min(i / std::max<std::int64_t>(per, 1), spec.objects - 1);
                object_of[static_cast<std::size_t>(i)] = o;
                for (int a = 0; a < 3; ++a)
                    pos.at(i, a) = centers[static_cast<std::size_t>(o)][static_cast<std::size_t>(a)] +
                                   rng.uniform(-spec.extent / 6, spec.extent / 6);
            }
            break;
        }
    }

    // Motion field; gt(p) = motion(p) - p.
    ad::Tensor gt({n, 3});
    switch (spec.motion) {
        case SynthSpec::Motion::kTranslation: {
            for (std::int64_t i = 0; i < n; ++i)
                for (int a = 0; a < 3; ++a) gt.at(i, a) = spec.translation[static_cast<std::size_t>(a)];
            break;
        }
        case SynthSpec::Motion::kRigid: {
            const Mat3 r = random_rotation(rng, spec.rotation_deg);
            for (std::int64_t i = 0; i < n; ++i) {
                const Vec3 p = {pos.at(i, 0), pos.at(i, 1), pos.at(i, 2)};
                const Vec3 rp = rotate(r, p);
                for (int a = 0; a < 3; ++a)
                    gt.at(i, a) = rp[static_cast<std::size_t>(a)] +
                                  spec.translation[static_cast<std::size_t>(a)] - p[static_cast<std::size_t>(a)];
            }
            break;
        }
        case SynthSpec::Motion::kPerObjectRigid: {
            const std::int64_t n_obj = spec.shape == SynthSpec::Shape::kMultiObject ? spec.objects : 1;
            std::vector<Mat3> rots;
            std::vector<Vec3> trans, centroids(static_cast<std::size_t>(n_obj), {0, 0, 0});
            std::vector<std::int64_t> counts(static_cast<std::size_t>(n_obj), 0);
            for (std::int64_t i = 0; i < n; ++i) {
                const auto o = static_cast<std::size_t>(object_of[static_cast<std::size_t>(i)]);
                for (int a = 0; a < 3; ++a) centroids[o][static_cast<std::size_t>(a)] += pos.at(i, a);
                counts[o]++;
            }
            for (std::size_t o = 0; o < centroids.size(); ++o)
                for (int a = 0; a < 3; ++a)
                    centroids[o][static_cast<std::size_t>(a)] /= static_cast<double>(std::max<std::int64_t>(counts[o], 1));
            for (std::int64_t o = 0; o < n_obj; ++o) {
                rots.push_back(random_rotation(rng, spec.rotation_deg * rng.uniform(0.5, 1.5)));
                trans.push_back({spec.translation[0] * rng.uniform(-1.5, 1.5),
                                 spec.translation[1] * rng.uniform(-1.5, 1.5),
                                 spec.translation[2] * rng.uniform(-1.5, 1.5)});
            }
            for (std::int64_t i = 0; i < n; ++i) {
                const auto o = static_cast<std::size_t>(object_of[static_cast<std::size_t>(i)]);
                const Vec3 p = {pos.at(i, 0) - centroids[o][0], pos.at(i, 1) - centroids[o][1],
                                pos.at(i, 2) - centroids[o][2]};
                const Vec3 rp = rotate(rots[o], p);
                for (int a = 0; a < 3; ++a)
                    gt.at(i, a) = rp[static_cast<std::size_t>(a)] + centroids[o][static_cast<std::size_t>(a)] +
                                  trans[o][static_cast<std::size_t>(a)] - pos.at(i, a);
            }
            break;
        }
        case SynthSpec::Motion::kSmoothDeformation: {
            const double w = std::numbers::pi / spec.extent;
            for (std::int64_t i = 0; i < n; ++i) {
                gt.at(i, 0) = spec.deform_amplitude * std::sin(w * pos.at(i, 1));
                gt.at(i, 1) = spec.deform_amplitude * std::sin(w * pos.at(i, 2));
                gt.at(i, 2) = spec.deform_amplitude * std::sin(w * pos.at(i, 0));
            }
            break;
        }
    }

    ad::Tensor qpos({n, 3});
    for (std::int64_t i = 0; i < n * 3; ++i) qpos.data[i] = pos.data[i] + gt.data[i];
    if (spec.noise_sigma > 0.0) {
        Rng noise(spec.seed, /*stream=*/23);
        for (auto& v : qpos.data) v += spec.noise_sigma * noise.normal();
    }

    SynthPair out;
    out.p = geom::make_cloud(std::move(pos));
    out.q = geom::make_cloud(std::move(qpos));
    out.gt = geom::SceneFlow{std::move(gt)};
    return out;
}

} // namespace pcflow::harness
