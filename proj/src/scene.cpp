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

#include "tunnelloc/scene.hpp"

#include <cmath>
#include <string>

namespace tunnelloc
{
    void TunnelSpec::validate() const
    {
        if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0))
            throw ConfigError("tunnel: length, width and height must be positive");
    }

    bool TunnelSpec::contains(const Vec3 &p, double margin) const
    {
        return p.x() >= -0.5 * length - margin && p.x() <= 0.5 * length + margin &&
               p.y() >= -margin && p.y() <= width + margin &&
               p.z() >= -margin && p.z() <= height + margin;
    }

    Mat3 Pose::rotation() const
    {
        const double az = deg2rad(orientation.azimuth_deg);
        const double el = deg2rad(orientation.elevation_deg);
        const Mat3 rz = Eigen::AngleAxisd(az, Vec3::UnitZ()).toRotationMatrix();
        const Mat3 rx = Eigen::AngleAxisd(el, Vec3::UnitX()).toRotationMatrix();

        // Local axes in the reference pose: x -> -X, y -> +Z (up), z -> +Y (boresight)
        Mat3 base;
        base << -1.0, 0.0, 0.0,
            0.0, 0.0, 1.0,
            0.0, 1.0, 0.0;
        return rz * rx * base;
    }

    Vec3 Pose::local_to_global(const Vec3 &p_local) const
    {
        return position + rotation() * p_local;
    }

    Vec3 Pose::global_to_local(const Vec3 &p_global) const
    {
        return rotation().transpose() * (p_global - position);
    }

    Vec3 Pose::local_dir_to_global(const Vec3 &d_local) const
    {
        return rotation() * d_local;
    }

    Vec3 Pose::global_dir_to_local(const Vec3 &d_global) const
    {
        return rotation().transpose() * d_global;
    }

    Pose AnchorSpec::array_pose(std::size_t array_index) const
    {
        if (array_index >= array_orientations.size())
            throw std::out_of_range("anchor: array index out of range");
        return Pose{position, array_orientations[array_index]};
    }

    void AnchorSpec::validate() const
    {
        if (rows < 1 || cols < 1)
            throw ConfigError("anchor: rows and cols must be >= 1");
        if (!(spacing > 0.0))
            throw ConfigError("anchor: spacing must be positive");
        if (array_orientations.empty())
            throw ConfigError("anchor: at least one array orientation is required");
    }

    Vec3 Panel::axis_u() const
    {
        Vec3 u = Vec3::UnitX() - unit_normal.dot(Vec3::UnitX()) * unit_normal;
        if (u.norm() < 1e-6)
            u = Vec3::UnitY() - unit_normal.dot(Vec3::UnitY()) * unit_normal;
        return u.normalized();
    }

    Vec3 Panel::axis_v() const
    {
        return unit_normal.cross(axis_u());
    }

    bool Panel::contains_in_plane(const Vec3 &p, double tol) const
    {
        const Vec3 r = p - center;
        return std::abs(r.dot(axis_u())) <= half_u + tol && std::abs(r.dot(axis_v())) <= half_v + tol;
    }

    void Panel::validate() const
    {
        if (std::abs(unit_normal.norm() - 1.0) > 1e-9)
            throw ConfigError("panel " + std::to_string(id) + ": normal must have unit length");
        if (!(half_u > 0.0) || !(half_v > 0.0))
            throw ConfigError("panel " + std::to_string(id) + ": half extents must be positive");
    }

    void Scene::validate() const
    {
        tunnel.validate();
        anchor.validate();
        for (const auto &p : panels)
            p.validate();
    }

    std::vector<Vec3> build_ura_layout(int rows, int cols, double spacing)
    {
        if (rows < 1 || cols < 1)
            throw std::invalid_argument("build_ura_layout: rows and cols must be >= 1");
        std::vector<Vec3> out;
        out.reserve(static_cast<std::size_t>(rows * cols));
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                out.emplace_back(c * spacing, r * spacing, 0.0);
        return out;
    }

    std::vector<Vec3> build_ura_layout(const AnchorSpec &anchor)
    {
        return build_ura_layout(anchor.rows, anchor.cols, anchor.spacing);
    }

    namespace
    {
        double lane_offset(const TrajectorySpec &spec, double x)
        {
            if (spec.kind == TrajectoryKind::straight)
                return spec.lateral_offset;
            return spec.lateral_offset + spec.amplitude * std::sin(2.0 * pi * (x - spec.start_x) / spec.period);
        }

        // Finds the next x such that the chord from (x0, y(x0)) has length `step`.
        double next_x(const TrajectorySpec &spec, double x0, double step)
        {
            const double y0 = lane_offset(spec, x0);
            auto chord = [&](double x)
            {
                const double dy = lane_offset(spec, x) - y0;
                return std::sqrt((x - x0) * (x - x0) + dy * dy);
            };
            // chord(x0 + dir * t) grows monotonically in t for the sinusoidal lane model
            // as long as t < period / 2, which holds for realistic epoch lengths.
            double lo = 0.0, hi = step;
            for (int i = 0; i < 200; ++i)
            {
                const double mid = 0.5 * (lo + hi);
                if (chord(x0 + spec.direction * mid) < step)
                    lo = mid;
                else
                    hi = mid;
                if (hi - lo < 1e-15)
                    break;
            }
            return x0 + spec.direction * 0.5 * (lo + hi);
        }
    }

    std::vector<TrajectorySample> gen_trajectory(const TrajectorySpec &spec, const TunnelSpec &tunnel)
    {
        if (!(spec.speed > 0.0))
            throw ConfigError("trajectory: speed must be positive");
        if (!(spec.epoch > 0.0))
            throw ConfigError("trajectory: epoch must be positive");
        if (spec.samples < 0)
            throw ConfigError("trajectory: samples must be non-negative");
        if (spec.direction != 1.0 && spec.direction != -1.0)
            throw ConfigError("trajectory: direction must be +1 or -1");
        if (spec.kind == TrajectoryKind::slalom && !(spec.period > 0.0))
            throw ConfigError("trajectory: slalom period must be positive");

        const double step = spec.speed * spec.epoch;
        std::vector<TrajectorySample> out;
        out.reserve(static_cast<std::size_t>(spec.samples));

        double x = spec.start_x;
        for (int k = 0; k < spec.samples; ++k)
        {
            TrajectorySample s;
            s.time = k * spec.epoch;
            s.position = Vec3(x, lane_offset(spec, x), spec.height);
            if (!tunnel.contains(s.position))
                throw ConfigError("trajectory: sample " + std::to_string(k) + " leaves the tunnel");

            const double xn = next_x(spec, x, step);
            const Vec3 pn(xn, lane_offset(spec, xn), spec.height);
            const Vec3 d = pn - s.position;
            s.speed = d.norm() / spec.epoch;
            s.heading = std::atan2(d.y(), d.x());
            out.push_back(s);
            x = xn;
        }
        return out;
    }

    std::vector<Panel> default_panels(const TunnelSpec &tunnel, bool walls_reflective)
    {
        std::vector<Panel> panels;
        const double half_len = 0.5 * tunnel.length;
        const double incl = deg2rad(55.0);

        Panel ceiling;
        ceiling.id = 0;
        ceiling.kind = PanelKind::ceiling;
        ceiling.center = Vec3(0.0, 0.5 * tunnel.width, tunnel.height);
        ceiling.unit_normal = -Vec3::UnitZ();
        ceiling.half_u = half_len;
        ceiling.half_v = 0.5 * tunnel.width;
        ceiling.reflection_loss_db = 6.0;
        panels.push_back(ceiling);

        if (walls_reflective)
        {
            Panel w0;
            w0.id = 1;
            w0.kind = PanelKind::wall;
            w0.center = Vec3(0.0, 0.0, 0.5 * tunnel.height);
            w0.unit_normal = Vec3::UnitY();
            w0.half_u = half_len;
            w0.half_v = 0.5 * tunnel.height;
            w0.reflection_loss_db = 6.0;
            Panel w1 = w0;
            w1.id = 2;
            w1.center.y() = tunnel.width;
            w1.unit_normal = -Vec3::UnitY();
            panels.push_back(w0);
            panels.push_back(w1);
        }

        // Road markings at the sidewalk/wall junction, inclined 55 deg towards the road
        Panel j0;
        j0.id = 10;
        j0.kind = PanelKind::rrm;
        j0.center = Vec3(0.0, 0.4, 0.4);
        j0.unit_normal = Vec3(0.0, std::sin(incl), std::cos(incl));
        j0.half_u = half_len;
        j0.half_v = 0.4;
        j0.reflection_loss_db = 1.0;
        Panel j1 = j0;
        j1.id = 11;
        j1.center = Vec3(0.0, tunnel.width - 0.4, 0.4);
        j1.unit_normal = Vec3(0.0, -std::sin(incl), std::cos(incl));
        panels.push_back(j0);
        panels.push_back(j1);

        // Wall-mounted markings at 3.3 m height
        Panel m0;
        m0.id = 12;
        m0.kind = PanelKind::rrm;
        m0.center = Vec3(0.0, 0.0, 3.3);
        m0.unit_normal = Vec3::UnitY();
        m0.half_u = half_len;
        m0.half_v = 0.6;
        m0.reflection_loss_db = 1.0;
        Panel m1 = m0;
        m1.id = 13;
        m1.center.y() = tunnel.width;
        m1.unit_normal = -Vec3::UnitY();
        panels.push_back(m0);
        panels.push_back(m1);
        return panels;
    }
}
