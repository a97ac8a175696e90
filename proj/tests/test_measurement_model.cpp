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

#include "tunnelloc/measurement_model.hpp"
#include "tunnelloc/raygen.hpp"

#include <random>

using namespace tunnelloc;

namespace
{
    Eigen::VectorXd make_state(const Vec3 &p_u, const std::vector<std::pair<double, double>> &vues)
    {
        Eigen::VectorXd s(3 + 2 * static_cast<Eigen::Index>(vues.size()));
        s.head<3>() = p_u;
        for (std::size_t i = 0; i < vues.size(); ++i)
        {
            s(3 + 2 * static_cast<Eigen::Index>(i)) = vues[i].first;
            s(4 + 2 * static_cast<Eigen::Index>(i)) = vues[i].second;
        }
        return s;
    }

    Eigen::VectorXd random_state(std::mt19937_64 &rng, int n_vue)
    {
        std::uniform_real_distribution<double> ux(5.0, 45.0), uy(-4.5, 4.5), uz(-4.0, -2.0), side(0.0, 1.0);
        const Vec3 p_u(ux(rng), uy(rng), uz(rng));
        std::vector<std::pair<double, double>> v;
        for (int i = 0; i < n_vue; ++i)
        {
            // images across walls at y = -5 / y = 5 or the floor at z = -4.8
            if (side(rng) < 0.4)
                v.emplace_back(-10.0 - p_u.y(), p_u.z());
            else if (side(rng) < 0.7)
                v.emplace_back(10.0 - p_u.y(), p_u.z());
            else
                v.emplace_back(p_u.y() + uy(rng) * 0.1, -9.6 - p_u.z());
        }
        return make_state(p_u, v);
    }

    // chi-square CDF for 3 degrees of freedom
    double chi2_cdf3(double x)
    {
        return std::erf(std::sqrt(x / 2.0)) - std::sqrt(2.0 * x / pi) * std::exp(-x / 2.0);
    }
}

TEST_CASE("state layout")
{
    const Eigen::VectorXd s = make_state(Vec3(1.0, 2.0, 3.0), {{4.0, 5.0}, {6.0, 7.0}});
    CHECK(num_tracks(s) == 3);
    CHECK(track_position(s, 0) == Vec3(1.0, 2.0, 3.0));
    CHECK(track_position(s, 2) == Vec3(1.0, 6.0, 7.0));
}

TEST_CASE("reflector from vue")
{
    const ReflectorResult r = reflector_from_vue(Vec3(10.0, 1.0, 0.0), Vec3(10.0, 5.0, 0.0));
    CHECK_FALSE(r.degenerate);
    CHECK((r.p_r - Vec3(6.0, 3.0, 0.0)).norm() < 1e-12);

    CHECK(reflector_from_vue(Vec3(7.0, -2.0, 0.0), Vec3(7.0, 2.0, 0.0)).degenerate);
    CHECK(reflector_from_vue(Vec3(7.0, 2.0, 1.0), Vec3(7.0, 2.0, 1.0)).degenerate);

    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i)
    {
        const Vec3 p_u(u(rng), u(rng), u(rng));
        const Vec3 p_v(p_u.x(), u(rng), u(rng));
        const ReflectorResult rr = reflector_from_vue(p_u, p_v);
        if (rr.degenerate)
            continue;
        const Vec3 n = Vec3(0.0, p_v.y() - p_u.y(), p_v.z() - p_u.z()).normalized();
        const double mid = 0.5 * (n.dot(p_u) + n.dot(p_v));
        worst = std::max(worst, std::abs(n.dot(rr.p_r) - mid) / std::max(1.0, std::abs(mid)));
        CHECK(rr.p_r.cross(p_v).norm() <= 1e-9 * p_v.squaredNorm());
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("reflector agrees with the specular point")
{
    const TunnelSpec tunnel;
    const AnchorSpec anchor;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(-45.0, 45.0), uy(0.5, 9.5), uz(0.5, 2.0);
    int checked = 0;
    for (const Panel &p : default_panels(tunnel, true))
    {
        if (p.kind != PanelKind::wall)
            continue;
        for (int i = 0; i < 50; ++i)
        {
            const Vec3 ue(ux(rng), uy(rng), uz(rng));
            const SpecularPoint sp = specular_point(ue, anchor.position, p);
            if (!sp.valid)
                continue;
            const ReflectorResult rr = reflector_from_vue(ue - anchor.position, mirror_image(ue, p) - anchor.position);
            CHECK((rr.p_r + anchor.position - sp.point).norm() < 1e-9);
            ++checked;
        }
    }
    CHECK(checked > 50);
}

TEST_CASE("h model")
{
    Eigen::VectorXd h = h_model(make_state(Vec3(10.0, 0.0, 0.0), {}));
    REQUIRE(h.size() == 3);
    CHECK(h(0) == 0.0);
    CHECK(h(1) == 0.0);
    CHECK(h(2) == doctest::Approx(10.0));

    const Eigen::VectorXd s = make_state(Vec3(10.0, 1.0, 0.0), {{5.0, 0.0}});
    h = h_model(s);
    REQUIRE(h.size() == 3 * 2 + 1);
    CHECK(h(5) == doctest::Approx(std::hypot(6.0, 3.0)).epsilon(1e-12));
    CHECK(h(6) == doctest::Approx(std::hypot(10.0, 5.0) - std::hypot(10.0, 1.0)).epsilon(1e-12));
    CHECK(h(6) == doctest::Approx(1.1305).epsilon(1e-4));
    CHECK(h(3) == doctest::Approx(std::atan2(5.0, 10.0)));

    ModelOptions vue;
    vue.reflected_range = ReflectedRange::virtual_ue;
    CHECK(h_model(s, vue)(5) == doctest::Approx(std::hypot(10.0, 5.0)));

    // coincident VUE: reflector undefined, curvature falls back to |p_u|
    const Eigen::VectorXd c = make_state(Vec3(10.0, 1.0, 0.0), {{1.0, 0.0}});
    const TrackPrediction tp = predict_track(c, 1);
    CHECK(tp.degenerate);
    CHECK(tp.h(2) == doctest::Approx(std::hypot(10.0, 1.0)));

    // elevation is measured from the horizontal plane
    const TrackPrediction up = predict_track(make_state(Vec3(3.0, 0.0, 4.0), {}), 0);
    CHECK(up.h(1) == doctest::Approx(std::atan2(4.0, 3.0)));
}

TEST_CASE("jacobian")
{
    const Vec3 p_u(12.0, -1.0, -3.3);
    const Eigen::VectorXd s = make_state(p_u, {{9.0, -3.3}, {-1.0, -6.3}});
    const Eigen::MatrixXd J = jacobian(s);
    REQUIRE(J.rows() == 3 * 3 + 2);
    REQUIRE(J.cols() == 7);
    CHECK((J.block(2, 0, 1, 3).transpose() - p_u.normalized()).norm() < 1e-14);
    CHECK(J(0, 3) == 0.0);
    CHECK(J(0, 5) == 0.0);
    CHECK(J(3, 5) == 0.0);
    CHECK(J(1, 6) == 0.0);
    // angle rows of a VUE do not depend on y_u, z_u
    CHECK(J(3, 1) == 0.0);
    CHECK(J(4, 2) == 0.0);
    CHECK((range_jacobian(s, 1) - J.row(9) - range_jacobian(s, 0)).norm() < 1e-14);

    std::mt19937_64 rng(8);
    for (const ReflectedRange rr : {ReflectedRange::reflector, ReflectedRange::virtual_ue})
    {
        ModelOptions o;
        o.reflected_range = rr;
        double worst = 0.0;
        for (int i = 0; i < 100; ++i)
        {
            const Eigen::VectorXd x = random_state(rng, 1 + i % 4);
            const Eigen::MatrixXd Ja = jacobian(x, o);
            const Eigen::MatrixXd Jn = jacobian_numeric(x, o);
            for (Eigen::Index r = 0; r < Ja.rows(); ++r)
                for (Eigen::Index c = 0; c < Ja.cols(); ++c)
                    worst = std::max(worst, std::abs(Ja(r, c) - Jn(r, c)) / std::max(1e-3, std::abs(Jn(r, c))));
        }
        CHECK(worst < 1e-5);
    }

    // independent central differences on h_model
    const Eigen::VectorXd x = random_state(rng, 2);
    Eigen::MatrixXd Jc(h_model(x).size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
    {
        const double step = 1e-6 * (1.0 + std::abs(x(i)));
        Eigen::VectorXd a = x, b = x;
        a(i) += step;
        b(i) -= step;
        Jc.col(i) = (h_model(a) - h_model(b)) / (2.0 * step);
    }
    CHECK((jacobian(x) - Jc).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("chi-square gate")
{
    CHECK(chi2_gate(3, 0.99) == doctest::Approx(11.345).epsilon(1e-4));
    CHECK(chi2_cdf3(chi2_gate(3, 0.99)) == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(chi2_gate(2, 0.99) == doctest::Approx(-2.0 * std::log(0.01)).epsilon(1e-12));
    CHECK_THROWS_AS(chi2_gate(0, 0.99), std::invalid_argument);
    CHECK_THROWS_AS(chi2_gate(3, 1.0), std::invalid_argument);
}
