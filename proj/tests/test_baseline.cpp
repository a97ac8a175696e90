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

#include "tunnelloc/baseline.hpp"

#include <random>

using namespace tunnelloc;

namespace
{
    PathParamEstimate tuple(double phi, double psi, double kappa, double d)
    {
        PathParamEstimate p;
        p.phi = phi;
        p.psi = psi;
        p.kappa = kappa;
        p.d = d;
        p.phi_ff = phi;
        p.psi_ff = psi;
        return p;
    }
}

TEST_CASE("perfect los tuple")
{
    const SnapshotEstimate e = tenfiloc_snapshot({tuple(0.0, 0.0, 20.0, 20.0)}, Vec3::Zero());
    REQUIRE(e.valid);
    CHECK(e.used_kappa);
    CHECK((e.position - Vec3(20.0, 0.0, 0.0)).norm() < 1e-12);

    const Vec3 anchor(0.0, 5.0, 4.8);
    const SnapshotEstimate f = tenfiloc_snapshot({tuple(pi, -0.1, 30.0, 31.0)}, anchor);
    REQUIRE(f.valid);
    CHECK((f.position - anchor - 30.0 * Vec3(-std::cos(0.1), 0.0, -std::sin(0.1))).norm() < 1e-12);
}

TEST_CASE("clock-biased fallback")
{
    PathParamEstimate p = tuple(0.0, 0.0, std::numeric_limits<double>::quiet_NaN(), 20.0 + speed_of_light * 50e-9);
    p.regime = Regime::FF;
    const SnapshotEstimate e = tenfiloc_snapshot({p}, Vec3::Zero());
    REQUIRE(e.valid);
    CHECK_FALSE(e.used_kappa);
    CHECK(e.position.x() == doctest::Approx(34.99).epsilon(1e-3));
    CHECK(e.position.x() - 20.0 == doctest::Approx(speed_of_light * 50e-9));
}

TEST_CASE("outage")
{
    CHECK_FALSE(tenfiloc_snapshot({}, Vec3::Zero()).valid);
    // NF paths that violate the ratio window
    CHECK_FALSE(tenfiloc_snapshot({tuple(0.0, 0.0, 20.0, 40.0), tuple(0.3, 0.0, 10.0, 45.0)}, Vec3::Zero()).valid);
    // only negative distances
    CHECK_FALSE(tenfiloc_snapshot({tuple(0.0, 0.0, 20.0, -1.0)}, Vec3::Zero()).valid);
}

TEST_CASE("los selection among paths")
{
    const auto e = tenfiloc_snapshot({tuple(0.4, 0.0, 35.0, 24.0), tuple(0.1, -0.2, 21.0, 21.5), tuple(-0.5, 0.0, 22.0, 26.0)},
                                     Vec3::Zero());
    REQUIRE(e.valid);
    CHECK(e.los_path == 1);
}

TEST_CASE("agrees with truth at noise level")
{
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> ux(5.0, 45.0), uy(-4.5, 4.5);
    const double sa = 1e-3, sk = 0.05;
    double se = 0.0, k2 = 0.0;
    const int n = 2000;
    for (int i = 0; i < n; ++i)
    {
        const Vec3 p(ux(rng), uy(rng), -3.3);
        const double k = p.norm();
        const double phi = std::atan2(p.y(), p.x()), psi = std::asin(p.z() / k);
        const SnapshotEstimate e =
            tenfiloc_snapshot({tuple(phi + sa * g(rng), psi + sa * g(rng), k + sk * g(rng), k)}, Vec3::Zero());
        REQUIRE(e.valid);
        se += (e.position - p).squaredNorm();
        k2 += k * k;
    }
    // one radial and two tangential components (the azimuth one shrinks by cos psi)
    const double expected = sk * sk + 2.0 * sa * sa * k2 / n;
    CHECK(se / n < 1.1 * expected);
    CHECK(se / n > 0.8 * expected);
}
