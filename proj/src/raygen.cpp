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

#include "tunnelloc/raygen.hpp"

#include <cmath>

namespace tunnelloc
{
    Vec3 mirror_image(const Vec3 &p, const Panel &panel)
    {
        const double dist = panel.signed_distance(p);
        return p - 2.0 * dist * panel.unit_normal;
    }

    SpecularPoint specular_point(const Vec3 &ue, const Vec3 &anchor_ref, const Panel &panel)
    {
        SpecularPoint out;
        const double da = panel.signed_distance(anchor_ref);
        const double du = panel.signed_distance(ue);
        const Vec3 vue = mirror_image(ue, panel);
        const Vec3 dir = vue - anchor_ref;
        const double denom = panel.unit_normal.dot(dir);
        if (std::abs(denom) < 1e-12)
            return out;
        const double t = -da / denom;
        out.point = anchor_ref + t * dir;
        out.valid = da > 0.0 && du >= 0.0 && t > 0.0 && t <= 1.0 && panel.contains_in_plane(out.point);
        return out;
    }

    double path_amplitude(double distance, double carrier_hz, double tx_power_dbm, double loss_db)
    {
        const double lambda = speed_of_light / carrier_hz;
        const double p_tx = 1e-3 * std::pow(10.0, tx_power_dbm / 10.0);
        return std::sqrt(p_tx) * lambda / (4.0 * pi * distance) * std::pow(10.0, -loss_db / 20.0);
    }

    namespace
    {
        cdouble random_phase(std::mt19937_64 &rng, double amplitude)
        {
            std::uniform_real_distribution<double> u(0.0, 2.0 * pi);
            return std::polar(amplitude, u(rng));
        }

        std::vector<Vec3> global_elements(const Pose &pose, const std::vector<Vec3> &layout_local)
        {
            std::vector<Vec3> out;
            out.reserve(layout_local.size());
            for (const auto &p : layout_local)
                out.push_back(pose.local_to_global(p));
            return out;
        }

        // Offsets of a spherical wave from `origin` across the array
        std::vector<double> spherical_delta(const Vec3 &origin, const std::vector<Vec3> &elements)
        {
            std::vector<double> delta(elements.size());
            const double d0 = (origin - elements[0]).norm();
            for (std::size_t m = 0; m < elements.size(); ++m)
                delta[m] = (origin - elements[m]).norm() - d0;
            delta[0] = 0.0;
            return delta;
        }

        bool in_front(const Pose &pose, const Vec3 &p)
        {
            return pose.global_to_local(p).z() > 0.0;
        }

        bool same_plane(const Panel &a, const Panel &b)
        {
            return a.unit_normal.dot(b.unit_normal) > 1.0 - 1e-12 &&
                   std::abs(a.signed_distance(b.center)) < 1e-9;
        }

        void set_kinematics(PathTruth &path, const Vec3 &origin, const Vec3 &origin_velocity,
                            const Vec3 &ref, double clock_bias, double carrier_hz)
        {
            const Vec3 r = origin - ref;
            path.distance_ref = r.norm();
            path.delay = path.distance_ref / speed_of_light + clock_bias;
            path.radial_velocity = -r.dot(origin_velocity) / path.distance_ref;
            path.doppler = carrier_hz / speed_of_light * path.radial_velocity;
        }
    }

    std::vector<PathTruth> trace_paths(const Scene &scene, const Pose &array_pose,
                                       const std::vector<Vec3> &layout_local,
                                       const TrajectorySample &ue, bool los_blocked,
                                       double clock_bias, std::mt19937_64 &rng,
                                       const RaygenOptions &opts)
    {
        std::vector<PathTruth> paths;
        if (layout_local.empty())
            return paths;

        const auto elements = global_elements(array_pose, layout_local);
        const Vec3 &ref = elements[0];
        const Vec3 velocity(ue.speed * std::cos(ue.heading), ue.speed * std::sin(ue.heading), 0.0);

        // one draw per candidate path, used or not, so a path keeps its phase for a given stream
        std::uniform_real_distribution<double> u(0.0, 2.0 * pi);
        const double los_phase = u(rng);
        std::vector<double> panel_phase(scene.panels.size());
        for (double &v : panel_phase)
            v = u(rng);

        if (!los_blocked && in_front(array_pose, ue.position))
        {
            PathTruth p;
            p.kind = PathKind::los;
            p.vue = ue.position;
            p.delta = spherical_delta(ue.position, elements);
            set_kinematics(p, ue.position, velocity, ref, clock_bias, opts.carrier_hz);
            p.gain = std::polar(path_amplitude(p.distance_ref, opts.carrier_hz, opts.tx_power_dbm, 0.0), los_phase);
            paths.push_back(std::move(p));
        }

        std::vector<const Panel *> used;
        for (std::size_t i = 0; i < scene.panels.size(); ++i)
        {
            const Panel &panel = scene.panels[i];
            if (!opts.include_rrm && panel.kind == PanelKind::rrm)
                continue;
            const SpecularPoint sp = specular_point(ue.position, ref, panel);
            if (!sp.valid)
                continue;
            const Vec3 vue = mirror_image(ue.position, panel);
            if (!in_front(array_pose, vue))
                continue;

            // Coplanar panels produce the same image; keep the one with the lowest loss
            bool duplicate = false;
            for (std::size_t i = 0; i < used.size(); ++i)
            {
                if (!same_plane(*used[i], panel))
                    continue;
                duplicate = true;
                PathTruth &prev = paths[paths.size() - used.size() + i];
                if (panel.reflection_loss_db < used[i]->reflection_loss_db)
                {
                    prev.panel_id = panel.id;
                    prev.gain = std::polar(path_amplitude(prev.distance_ref, opts.carrier_hz, opts.tx_power_dbm, panel.reflection_loss_db), std::arg(prev.gain));
                    used[i] = &panel;
                }
                break;
            }
            if (duplicate)
                continue;

            PathTruth p;
            p.kind = PathKind::reflected;
            p.panel_id = panel.id;
            p.vue = vue;
            p.specular = sp.point;
            if (opts.wavefront == WavefrontModel::exact)
                p.delta = spherical_delta(vue, elements);
            else
                p.delta = spherical_delta(sp.point, elements);
            const Vec3 &n = panel.unit_normal;
            const Vec3 vue_velocity = velocity - 2.0 * n.dot(velocity) * n;
            set_kinematics(p, vue, vue_velocity, ref, clock_bias, opts.carrier_hz);
            p.gain = std::polar(path_amplitude(p.distance_ref, opts.carrier_hz, opts.tx_power_dbm, panel.reflection_loss_db), panel_phase[i]);
            paths.push_back(std::move(p));
            used.push_back(&panel);
        }
        return paths;
    }

    PathTruth make_clutter_path(const Pose &array_pose, const std::vector<Vec3> &layout_local,
                                const Vec3 &origin, double radial_velocity, double amplitude,
                                double clock_bias, std::mt19937_64 &rng, const RaygenOptions &opts)
    {
        const auto elements = global_elements(array_pose, layout_local);
        PathTruth p;
        p.kind = PathKind::clutter;
        p.vue = origin;
        p.delta = spherical_delta(origin, elements);
        p.distance_ref = (origin - elements[0]).norm();
        p.delay = p.distance_ref / speed_of_light + clock_bias;
        p.radial_velocity = radial_velocity;
        p.doppler = opts.carrier_hz / speed_of_light * radial_velocity;
        p.gain = random_phase(rng, amplitude);
        return p;
    }
}
