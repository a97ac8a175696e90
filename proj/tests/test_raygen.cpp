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

#include <doctest.h>

#include "tunnelloc/raygen.hpp"

#include <random>

using namespace tunnelloc;

namespace
{
    Panel wall_at(double y, double normal_sign, double half = 1000.0)
    {
        Panel p;
        p.id = 1;
        p.center = Vec3(0.0, y, 0.0);
        p.unit_normal = Vec3(0.0, normal_sign, 0.0);
        p.half_u = half;
        p.half_v = half;
        return p;
    }
}

TEST_CASE("mirror image")
{
    const Panel w = wall_at(3.0, -1.0);
    CHECK(mirror_image(Vec3(10.0, 1.0, 0.0), w).isApprox(Vec3(10.0, 5.0, 0.0)));

    const double R = 3.5, W = 3.0, yu = 2.5;
    CHECK(mirror_image(Vec3(R, yu, 0.7), w).isApprox(Vec3(R, 2.0 * W - yu, 0.7)));

    const Vec3 on(4.0, 3.0, 1.0);
    CHECK(mirror_image(on, w).isApprox(on));

    // midpoint lies on the plane for an arbitrary oblique panel
    Panel o;
    o.center = Vec3(1.0, 2.0, 3.0);
    o.unit_normal = Vec3(1.0, -2.0, 0.5).normalized();
    const Vec3 p(-3.0, 7.0, 2.0);
    CHECK(std::abs(o.signed_distance(0.5 * (p + mirror_image(p, o)))) < 1e-12);
}

TEST_CASE("specular point")
{
    const Panel w = wall_at(3.0, -1.0);
    const Vec3 anchor = Vec3::Zero();

    auto sp = specular_point(Vec3(3.5, 2.5, 0.0), anchor, w);
    CHECK(sp.valid);
    CHECK(sp.point.x() == doctest::Approx(3.5 * 3.0 / (2.0 * 3.0 - 2.5)));
    CHECK(sp.point.x() == doctest::Approx(3.0));

    sp = specular_point(Vec3(17.0, 0.0, 0.0), anchor, w);
    CHECK(sp.valid);
    CHECK(sp.point.x() == doctest::Approx(8.5));

    sp = specular_point(Vec3(10.0, 1.0, 0.0), anchor, w);
    CHECK(sp.point.isApprox(Vec3(6.0, 3.0, 0.0)));

    // panel too short to host the reflection
    sp = specular_point(Vec3(10.0, 1.0, 0.0), anchor, wall_at(3.0, -1.0, 2.0));
    CHECK_FALSE(sp.valid);

    // UE behind the plane
    sp = specular_point(Vec3(10.0, 4.0, 0.0), anchor, w);
    CHECK_FALSE(sp.valid);
}

TEST_CASE("trace paths")
{
    Scene s;
    s.panels = {wall_at(10.0, -1.0)};
    s.panels[0].center.x() = 0.0;
    // array at the origin looking along +x
    Pose pose{Vec3::Zero(), {-90.0, 0.0}};
    const auto layout = build_ura_layout(4, 4, 0.0254);
    std::mt19937_64 rng(3);

    TrajectorySample ue;
    ue.position = Vec3(20.0, 2.5, 1.0);
    ue.speed = 10.0;

    const auto paths = trace_paths(s, pose, layout, ue, false, 40e-9, rng);
    REQUIRE(paths.size() == 2);
    const auto &los = paths[0];
    const auto &refl = paths[1];
    CHECK(los.kind == PathKind::los);
    CHECK(los.vue.isApprox(ue.position));
    CHECK(refl.kind == PathKind::reflected);
    CHECK(refl.distance_ref == doctest::Approx(Vec3(20.0, 17.5, 1.0).norm()));
    CHECK(refl.distance_ref == doctest::Approx(26.5942).epsilon(1e-5));

    for (const auto &p : paths)
    {
        CHECK(p.delta[0] == 0.0);
        CHECK(p.delay > 0.0);
        CHECK(p.delay == doctest::Approx(p.distance_ref / speed_of_light + 40e-9).epsilon(1e-14));
        CHECK(p.doppler == doctest::Approx(5.9e9 / speed_of_light * p.radial_velocity));
    }

    // image-method identity: anchor -> specular -> UE equals anchor -> VUE
    const double via = refl.specular.norm() + (ue.position - refl.specular).norm();
    CHECK(std::abs(via - refl.distance_ref) < 1e-10);

    // receding UE: negative Doppler on every path
    for (const auto &p : paths)
        CHECK(p.doppler < 0.0);

    // the clock bias cancels in path differences
    std::mt19937_64 rng2(3);
    const auto p0 = trace_paths(s, pose, layout, ue, false, 0.0, rng2);
    CHECK(std::abs((paths[1].delay - paths[0].delay) - (p0[1].delay - p0[0].delay)) * speed_of_light < 1e-9);

    // blocked LoS
    const auto nlos = trace_paths(s, pose, layout, ue, true, 0.0, rng);
    REQUIRE(nlos.size() == 1);
    CHECK(nlos[0].kind == PathKind::reflected);

    // static UE
    ue.speed = 0.0;
    for (const auto &p : trace_paths(s, pose, layout, ue, false, 0.0, rng))
        CHECK(p.doppler == 0.0);
}

TEST_CASE("image identity on random geometries")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(2.0, 45.0), uy(0.2, 9.8), uz(0.2, 4.8);
    Scene s;
    s.panels = default_panels(s.tunnel, true);
    const Pose pose = s.anchor.array_pose(0);
    const auto layout = build_ura_layout(s.anchor);
    int checked = 0;
    for (int i = 0; i < 200; ++i)
    {
        TrajectorySample ue;
        ue.position = Vec3(ux(rng), uy(rng), uz(rng));
        const auto paths = trace_paths(s, pose, layout, ue, false, 0.0, rng);
        for (const auto &p : paths)
        {
            CHECK(p.delta.size() == layout.size());
            CHECK(p.delta[0] == 0.0);
            if (p.kind != PathKind::reflected)
                continue;
            const Vec3 ref = pose.local_to_global(layout[0]);
            const double via = (p.specular - ref).norm() + (ue.position - p.specular).norm();
            CHECK(std::abs(via - p.distance_ref) < 1e-10);
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("single reflector wavefront differs from exact")
{
    Scene s;
    s.panels = {wall_at(10.0, -1.0)};
    Pose pose{Vec3::Zero(), {-90.0, 0.0}};
    const auto layout = build_ura_layout(4, 4, 0.0254);
    TrajectorySample ue;
    ue.position = Vec3(20.0, 2.5, 1.0);
    std::mt19937_64 rng(1);
    RaygenOptions sr;
    sr.wavefront = WavefrontModel::single_reflector;
    const auto e = trace_paths(s, pose, layout, ue, false, 0.0, rng);
    const auto r = trace_paths(s, pose, layout, ue, false, 0.0, rng, sr);
    // the LoS path is unaffected
    for (std::size_t m = 0; m < layout.size(); ++m)
        CHECK(e[0].delta[m] == r[0].delta[m]);
    double diff = 0.0;
    for (std::size_t m = 0; m < layout.size(); ++m)
        diff = std::max(diff, std::abs(e[1].delta[m] - r[1].delta[m]));
    CHECK(diff > 1e-6);
}

TEST_CASE("path amplitude")
{
    // 23 dBm, 1 m, lossless
    const double lambda = speed_of_light / 5.9e9;
    CHECK(path_amplitude(1.0, 5.9e9, 23.0, 0.0) == doctest::Approx(std::sqrt(0.2) * lambda / (4.0 * pi)).epsilon(1e-3));
    CHECK(path_amplitude(2.0, 5.9e9, 23.0, 0.0) == doctest::Approx(0.5 * path_amplitude(1.0, 5.9e9, 23.0, 0.0)));
    CHECK(path_amplitude(1.0, 5.9e9, 23.0, 20.0) == doctest::Approx(0.1 * path_amplitude(1.0, 5.9e9, 23.0, 0.0)));
}
