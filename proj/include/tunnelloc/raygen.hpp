// SPDX-License-Identifier: Apache-2.0
//
// tunnelloc - single-anchor near-field vehicular localization in tunnels
// Copyright (C) 2026 The tunnelloc authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef TUNNELLOC_RAYGEN_HPP
#define TUNNELLOC_RAYGEN_HPP

#include "tunnelloc/scene.hpp"

#include <optional>
#include <random>
#include <vector>

namespace tunnelloc
{
    enum class PathKind
    {
        los,
        reflected,
        clutter
    };

    // How per-antenna offsets of reflected paths are generated.
    //  exact:            every element sees its own specular point (lengths measured to the VUE)
    //  single_reflector: all elements share the specular point of the reference element
    enum class WavefrontModel
    {
        exact,
        single_reflector
    };

    struct RaygenOptions
    {
        double carrier_hz = 5.9e9;
        double tx_power_dbm = 23.0;
        WavefrontModel wavefront = WavefrontModel::exact;
        bool include_rrm = true;
    };

    // Ground truth of a single propagation path as seen by one array.
    struct PathTruth
    {
        PathKind kind = PathKind::los;
        std::optional<int> panel_id{};
        Vec3 vue = Vec3::Zero();      // wave origin of the exact model (UE for LoS)
        Vec3 specular = Vec3::Zero(); // reflection point of the reference element (reflected only)
        cdouble gain{0.0, 0.0};       // sqrt(W)
        double delay = 0.0;           // s, includes the clock bias
        double doppler = 0.0;         // Hz
        double radial_velocity = 0.0; // m/s, = -d/dt(path length) = c f_d / f_c
        std::vector<double> delta{};  // m, per-antenna offsets, delta[0] == 0
        double distance_ref = 0.0;    // m, geometric length to the reference element
    };

    // Reflection of `p` across the infinite plane of `panel`.
    Vec3 mirror_image(const Vec3 &p, const Panel &panel);

    struct SpecularPoint
    {
        Vec3 point = Vec3::Zero();
        bool valid = false;
    };

    // Intersection of the segment anchor -> VUE(ue) with the panel plane. `valid` is set when
    // the segment crosses the plane, UE and anchor lie on the normal side, and the point is
    // inside the panel extents.
    SpecularPoint specular_point(const Vec3 &ue, const Vec3 &anchor_ref, const Panel &panel);

    // Single-bounce image-method tracer for one array. Paths arriving from behind the array
    // plane are not received. Path phases are drawn from `rng`.
    std::vector<PathTruth> trace_paths(const Scene &scene, const Pose &array_pose,
                                       const std::vector<Vec3> &layout_local,
                                       const TrajectorySample &ue, bool los_blocked,
                                       double clock_bias, std::mt19937_64 &rng,
                                       const RaygenOptions &opts = {});

    // Point-like moving scatterer with an arbitrary radial velocity (synthetic clutter).
    PathTruth make_clutter_path(const Pose &array_pose, const std::vector<Vec3> &layout_local,
                                const Vec3 &origin, double radial_velocity, double amplitude,
                                double clock_bias, std::mt19937_64 &rng,
                                const RaygenOptions &opts = {});

    // Free-space amplitude |alpha| = sqrt(P_tx) * lambda / (4 pi d) * 10^(-loss_db / 20)
    double path_amplitude(double distance, double carrier_hz, double tx_power_dbm, double loss_db);
}

#endif
