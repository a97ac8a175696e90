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

#ifndef TUNNELLOC_SCENE_HPP
#define TUNNELLOC_SCENE_HPP

#include "tunnelloc/common.hpp"

#include <optional>
#include <vector>

namespace tunnelloc
{
    // Box approximation of the tunnel: x in [-length/2, length/2] (anchor at x = 0),
    // walls at y = 0 and y = width, floor z = 0, ceiling z = height.
    struct TunnelSpec
    {
        double length = 100.0;
        double width = 10.0;
        double height = 5.0;

        void validate() const;
        bool contains(const Vec3 &p, double margin = 0.0) const;
    };

    // Array orientation in degrees.
    //
    // Convention (intrinsic): start from the reference pose whose boresight is global +y,
    // rotate by `azimuth` about global z, then by `elevation` about the rotated x axis.
    // The boresight in global coordinates is therefore
    //     b = (-sin(az) cos(el), cos(az) cos(el), sin(el)).
    // Worked example: (az, el) = (-90, -30) gives b = (0.866, 0, -0.5), i.e. the array looks
    // down the +x half of the tunnel tilted 30 deg toward the road; (90, -30) looks down -x.
    //
    // Array-local frame: elements in the local xy-plane, local z is the boresight, local y is
    // "up" on the array face and local x completes a right-handed frame.
    struct ArrayOrientation
    {
        double azimuth_deg = 0.0;
        double elevation_deg = 0.0;
    };

    // Rigid pose of an array: position of the reference element plus orientation.
    struct Pose
    {
        Vec3 position = Vec3::Zero();
        ArrayOrientation orientation{};

        // Columns are the local x, y, z axes expressed in global coordinates.
        Mat3 rotation() const;
        Vec3 boresight() const { return rotation().col(2); }

        Vec3 local_to_global(const Vec3 &p_local) const;
        Vec3 global_to_local(const Vec3 &p_global) const;
        // Directions only (no translation)
        Vec3 local_dir_to_global(const Vec3 &d_local) const;
        Vec3 global_dir_to_local(const Vec3 &d_global) const;
    };

    struct AnchorSpec
    {
        Vec3 position{0.0, 5.0, 4.8};
        std::vector<ArrayOrientation> array_orientations{{-90.0, -30.0}, {90.0, -30.0}};
        int rows = 10;
        int cols = 10;
        double spacing = 0.0254; // meters

        int num_antennas() const { return rows * cols; }
        Pose array_pose(std::size_t array_index) const;
        void validate() const;
    };

    enum class PanelKind
    {
        wall,
        ceiling,
        rrm
    };

    // Finite planar reflector. The in-plane axes are `axis_u()` (global x projected onto the
    // plane) and `axis_v()` = normal x axis_u; `half_extents` are measured along those axes.
    struct Panel
    {
        int id = 0;
        PanelKind kind = PanelKind::wall;
        Vec3 center = Vec3::Zero();
        Vec3 unit_normal = Vec3::UnitY();
        double half_u = 1.0;
        double half_v = 1.0;
        double reflection_loss_db = 3.0;

        Vec3 axis_u() const;
        Vec3 axis_v() const;
        double signed_distance(const Vec3 &p) const { return unit_normal.dot(p - center); }
        bool contains_in_plane(const Vec3 &p, double tol = 1e-9) const;
        void validate() const;
    };

    struct Scene
    {
        TunnelSpec tunnel{};
        AnchorSpec anchor{};
        std::vector<Panel> panels{};

        void validate() const;
    };

    struct TrajectorySample
    {
        double time = 0.0;
        Vec3 position = Vec3::Zero();
        double speed = 0.0;   // m/s, chord speed towards the next sample
        double heading = 0.0; // rad, atan2 of the chord towards the next sample
    };

    enum class TrajectoryKind
    {
        straight,
        slalom
    };

    struct TrajectorySpec
    {
        TrajectoryKind kind = TrajectoryKind::straight;
        double start_x = -45.0;
        double direction = 1.0;        // +1 drives towards +x, -1 towards -x
        double lateral_offset = 2.5;   // y of the lane centerline
        double height = 1.5;           // z_u, constant
        double amplitude = 1.5;        // slalom only
        double period = 40.0;          // slalom spatial period along x
        double speed = 9.0;            // m/s, 100 samples span 89.1 m
        double epoch = 0.1;            // s
        int samples = 100;
    };

    // Regular rows x cols grid in the array-local frame. Element 0 is the origin, element
    // index = row * cols + col, with col along local x and row along local y; z is exactly 0.
    std::vector<Vec3> build_ura_layout(int rows, int cols, double spacing);
    std::vector<Vec3> build_ura_layout(const AnchorSpec &anchor);

    // Arc-length parametrised trajectory: every step covers exactly speed * epoch meters.
    // Throws ConfigError when the trajectory leaves the tunnel.
    std::vector<TrajectorySample> gen_trajectory(const TrajectorySpec &spec, const TunnelSpec &tunnel);

    // Default panel set of the reference tunnel (walls, ceiling and four road markings).
    std::vector<Panel> default_panels(const TunnelSpec &tunnel, bool walls_reflective = false);
}

#endif
