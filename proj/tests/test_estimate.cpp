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

#include "tunnelloc/channel.hpp"
#include "tunnelloc/estimate.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

using namespace tunnelloc;

namespace
{
    const double lambda = speed_of_light / 5.9e9;

    Eigen::VectorXd spherical_offsets(const Vec3 &src, const std::vector<Vec3> &layout)
    {
        Eigen::VectorXd d(static_cast<Eigen::Index>(layout.size()));
        for (std::size_t m = 0; m < layout.size(); ++m)
            d(static_cast<Eigen::Index>(m)) = (src - layout[m]).norm() - src.norm();
        d(0) = 0.0;
        return d;
    }

    Eigen::VectorXcd to_steering(const Eigen::VectorXd &delta)
    {
        Eigen::VectorXcd b(delta.size());
        for (Eigen::Index m = 0; m < delta.size(); ++m)
            b(m) = std::polar(1.0, 2.0 * pi / lambda * delta(m));
        return b;
    }

    // Plain least squares on the same linear system, used as the comparison baseline
    Vec3 ls_origin(const Eigen::VectorXd &delta, const std::vector<Vec3> &layout)
    {
        const Eigen::Index n = delta.size() - 1;
        Eigen::MatrixXd A(n, 3);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const Vec3 &p = layout[static_cast<std::size_t>(i + 1)];
            A.row(i) << 2.0 * p.x(), 2.0 * p.y(), 2.0 * delta(i + 1);
            y(i) = p.squaredNorm() - delta(i + 1) * delta(i + 1);
        }
        return A.colPivHouseholderQr().solve(y);
    }

    PathParamEstimate nf_param(double d, double kappa)
    {
        PathParamEstimate p;
        p.d = d;
        p.kappa = kappa;
        p.phi = 0.1;
        p.psi = -0.2;
        p.phi_ff = 0.11;
        p.psi_ff = -0.21;
        return p;
    }
}

TEST_CASE("resolve scaling")
{
    SteeringEstimates est;
    est.B_s = Eigen::MatrixXcd::Ones(4, 2);
    est.B_f = Eigen::MatrixXcd::Ones(3, 2);
    est.B_t = Eigen::MatrixXcd::Ones(2, 2);
    est.B_s(2, 1) = cdouble(0.0, 1.0);
    const auto g1 = resolve_scaling(est);
    CHECK(std::abs(g1[0] - 1.0) < 1e-15);
    CHECK(std::abs(g1[1] - 1.0) < 1e-15);
    const Eigen::MatrixXcd before = est.B_s;

    est.B_s.col(1) *= cdouble(0.0, 2.0);
    const auto g2 = resolve_scaling(est);
    CHECK(std::abs(g2[1] - cdouble(0.0, 2.0)) < 1e-15);
    CHECK((est.B_s - before).norm() < 1e-15);
    CHECK(est.column_valid[1]);

    est.B_f(0, 0) = 0.0;
    resolve_scaling(est);
    CHECK_FALSE(est.column_valid[0]);
}

TEST_CASE("gain recovered through cpd")
{
    GridSpec g;
    g.M = 16;
    g.N_f = 20;
    g.N_t = 4;
    PathTruth p;
    p.gain = std::polar(0.5, pi / 3.0);
    p.delay = 70e-9;
    p.doppler = 30.0;
    p.delta.assign(16, 0.0);
    for (int m = 0; m < 16; ++m)
        p.delta[static_cast<std::size_t>(m)] = 0.004 * (m % 4) - 0.002 * (m / 4);
    SteeringEstimates est = cpd(synth_channel({p}, g), 1);
    const auto gains = resolve_scaling(est);
    CHECK(std::abs(gains[0] - p.gain) < 1e-6);
    for (int r = 0; r < 1; ++r)
    {
        CHECK(std::abs(est.B_s(0, r) - 1.0) < 1e-9);
        CHECK(std::abs(est.B_f(0, r) - 1.0) < 1e-9);
        CHECK(std::abs(est.B_t(0, r) - 1.0) < 1e-9);
    }
}

TEST_CASE("vandermonde roots")
{
    Eigen::MatrixXcd B(128, 3);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    const double sd = std::sqrt(0.5 * 0.01); // 20 dB
    for (int r = 0; r < 128; ++r)
    {
        B(r, 0) = 1.0;
        B(r, 1) = std::polar(1.0, 0.3 * r);
        B(r, 2) = std::polar(1.0, 1.0 * r) + cdouble(sd * n(rng), sd * n(rng));
    }
    const Eigen::VectorXd mu = vandermonde_roots(B);
    CHECK(std::abs(mu(0)) < 1e-15);
    CHECK(mu(1) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(std::abs(mu(2) - 1.0) < 0.01);
}

TEST_CASE("distance and velocity")
{
    GridSpec g;
    g.N_f = 16;
    g.N_t = 6;
    g.delta_f = 240e3;
    SteeringEstimates est;
    const std::vector<double> tau = {1e-6, 0.0}, fd = {100.0, 0.0};
    est.B_s = Eigen::MatrixXcd::Ones(4, 2);
    est.B_f.resize(g.N_f, 2);
    est.B_t.resize(g.N_t, 2);
    for (int l = 0; l < 2; ++l)
    {
        for (int s = 0; s < g.N_f; ++s)
            est.B_f(s, l) = std::polar(1.0, -2.0 * pi * s * g.delta_f * tau[static_cast<std::size_t>(l)]);
        for (int k = 0; k < g.N_t; ++k)
            est.B_t(k, l) = std::polar(1.0, 2.0 * pi * k * fd[static_cast<std::size_t>(l)] * g.T_0);
    }
    const DistanceVelocity dv = estimate_distance_velocity(est, g);
    CHECK(dv.d(0) == doctest::Approx(speed_of_light * 1e-6).epsilon(1e-9));
    CHECK(dv.d(0) == doctest::Approx(299.79).epsilon(1e-5));
    CHECK(dv.v(0) == doctest::Approx(speed_of_light * 100.0 / 5.9e9).epsilon(1e-9));
    CHECK(std::abs(dv.d(1)) < 1e-9);
    CHECK(std::abs(dv.v(1)) < 1e-12);

    // a slightly negative (clock-advanced) distance stays negative inside the window
    for (int s = 0; s < g.N_f; ++s)
        est.B_f(s, 1) = std::polar(1.0, -2.0 * pi * s * g.delta_f * (-20e-9));
    const DistanceVelocity neg = estimate_distance_velocity(est, g);
    CHECK(neg.d(1) == doctest::Approx(-20e-9 * speed_of_light).epsilon(1e-9));
}

TEST_CASE("unwrap")
{
    const auto layout = build_ura_layout(10, 10, lambda / 2.0);

    UnwrapResult flat = unwrap_phase_2d(Eigen::VectorXcd::Ones(100), 10, 10, lambda);
    CHECK(flat.reliable);
    CHECK(flat.delta.cwiseAbs().maxCoeff() == 0.0);

    // planar wave at 30 deg azimuth in the array plane
    Eigen::VectorXd planar(100);
    for (int m = 0; m < 100; ++m)
        planar(m) = -layout[static_cast<std::size_t>(m)].x() * std::sin(deg2rad(30.0));
    const UnwrapResult up = unwrap_phase_2d(to_steering(planar), 10, 10, lambda);
    CHECK(up.reliable);
    CHECK((up.delta - planar).cwiseAbs().maxCoeff() < 1e-9);

    // spherical wave from 5 m
    const Vec3 src(1.0, 0.5, std::sqrt(25.0 - 1.25));
    const Eigen::VectorXd sph = spherical_offsets(src, layout);
    const UnwrapResult us = unwrap_phase_2d(to_steering(sph), 10, 10, lambda);
    CHECK(us.reliable);
    CHECK((us.delta - sph).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(us.delta(0) == 0.0);

    // random field with residues
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-pi, pi);
    Eigen::VectorXcd junk(100);
    for (int m = 0; m < 100; ++m)
        junk(m) = std::polar(1.0, u(rng));
    const UnwrapResult uj = unwrap_phase_2d(junk, 10, 10, lambda);
    CHECK_FALSE(uj.reliable);
    CHECK(uj.residues > 0);
}

TEST_CASE("nf wave origin")
{
    const auto layout = build_ura_layout(10, 10, lambda / 2.0);
    const Vec3 src(2.0, 1.0, 3.0);
    const WaveOriginNF w = solve_wave_origin_nf(spherical_offsets(src, layout), layout);
    CHECK_FALSE(w.far_field);
    CHECK(std::abs(w.x(0) - 2.0) < 1e-8);
    CHECK(std::abs(w.x(1) - 1.0) < 1e-8);
    CHECK(std::abs(w.x(2) - src.norm()) < 1e-8);

    // broadside plane wave: no finite origin
    const WaveOriginNF ff = solve_wave_origin_nf(Eigen::VectorXd::Zero(100), layout);
    CHECK((ff.far_field || !(std::abs(ff.x(2)) < 1e6)));
}

TEST_CASE("nf noisy curvature and tls versus ls")
{
    const auto layout = build_ura_layout(10, 10, lambda / 2.0);
    const Vec3 src = 5.0 * Vec3(0.2, -0.1, 1.0).normalized();
    const Eigen::VectorXd clean = spherical_offsets(src, layout);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0.0, 1.0);

    // linearised bound: residual of the quadratic term after projecting out the planar terms
    Eigen::MatrixXd F(99, 2);
    Eigen::VectorXd q(99);
    for (int m = 1; m < 100; ++m)
    {
        const Vec3 &p = layout[static_cast<std::size_t>(m)];
        F.row(m - 1) << p.x(), p.y();
        q(m - 1) = 0.5 * p.squaredNorm();
    }
    const Eigen::VectorXd qr = q - F * F.colPivHouseholderQr().solve(q);
    const double sd_rel = lambda / 50.0 / qr.norm() * 5.0; // std of (1 / kappa) relative to 1 / kappa
    const double expected_abs = std::sqrt(2.0 / pi) * sd_rel;

    double rel = 0.0, mean = 0.0;
    for (int t = 0; t < 100; ++t)
    {
        Eigen::VectorXd d = clean;
        for (Eigen::Index m = 1; m < d.size(); ++m)
            d(m) += lambda / 50.0 * n(rng);
        const double k = solve_wave_origin_nf(d, layout).x(2);
        rel += std::abs(k - 5.0) / 5.0;
        mean += k / 100.0;
    }
    CHECK(std::abs(mean - 5.0) / 5.0 < 0.05);
    // per-trial error sits at the information limit of a lambda / 2 aperture, well above 5%
    CHECK(expected_abs > 0.05);
    CHECK(rel / 100.0 < 1.2 * expected_abs);

    double se_tls = 0.0, se_ls = 0.0;
    for (int t = 0; t < 500; ++t)
    {
        Eigen::VectorXd d = clean;
        for (Eigen::Index m = 1; m < d.size(); ++m)
            d(m) += lambda / 30.0 * n(rng);
        se_tls += std::pow(solve_wave_origin_nf(d, layout).x(2) - 5.0, 2);
        se_ls += std::pow(ls_origin(d, layout)(2) - 5.0, 2);
    }
    CHECK(se_tls < se_ls);
}

TEST_CASE("ff direction")
{
    const auto layout = build_ura_layout(10, 10, lambda / 2.0);
    CHECK(solve_direction_ff(Eigen::VectorXd::Zero(100), layout).norm() < 1e-15);
    Eigen::VectorXd d(100);
    for (int m = 0; m < 100; ++m)
        d(m) = -(0.5 * layout[static_cast<std::size_t>(m)].x() + 0.3 * layout[static_cast<std::size_t>(m)].y());
    const Eigen::Vector2d u = solve_direction_ff(d, layout);
    CHECK(std::abs(u(0) - 0.5) < 1e-9);
    CHECK(std::abs(u(1) - 0.3) < 1e-9);
    CHECK(u.norm() <= 1.0 + 1e-9);

    // collinear elements cannot resolve two cosines
    const auto line = build_ura_layout(1, 8, lambda / 2.0);
    CHECK_THROWS_AS(solve_direction_ff(Eigen::VectorXd::Zero(8), line), NumericalError);
}

TEST_CASE("angle extraction")
{
    const AngleEstimate a = extract_angles(Vec3(1.0, 0.0, 1.0), Regime::NF);
    CHECK(a.phi == 0.0);
    CHECK(a.psi == doctest::Approx(0.0));
    CHECK(a.kappa == 1.0);

    const AngleEstimate b = extract_angles(Vec3(0.0, 0.0, 5.0), Regime::NF);
    CHECK(b.phi == 0.0);
    CHECK(b.psi == doctest::Approx(pi / 2.0));
    CHECK((b.flags & path_flags::azimuth_degenerate) != 0);

    const AngleEstimate c = extract_angles(Vec3(3.0, 4.0, 4.0), Regime::NF);
    CHECK((c.flags & path_flags::angle_clamped) != 0);
    CHECK(c.psi == doctest::Approx(0.0));

    const AngleEstimate f = extract_angles(Vec3(0.6, 0.0, 0.0), Regime::FF);
    CHECK(std::isnan(f.kappa));
    CHECK(std::cos(f.psi) == doctest::Approx(0.6));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uphi(-pi + 1e-3, pi - 1e-3), upsi(0.05, pi / 2.0 - 0.05), uk(1.0, 80.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i)
    {
        const double phi = uphi(rng), psi = upsi(rng), k = uk(rng);
        const AngleEstimate r = extract_angles(angles_to_nf_vector(phi, psi, k), Regime::NF);
        worst = std::max({worst, std::abs(wrap_angle(r.phi - phi)), std::abs(r.psi - psi), std::abs(r.kappa - k) / k});
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("local to global direction")
{
    AnchorSpec a;
    const Pose pose = a.array_pose(0);
    // boresight corresponds to psi = pi / 2
    CHECK(local_angles_to_global_direction(pose, 0.0, pi / 2.0).isApprox(pose.boresight(), 1e-12));
    const Vec3 local = Vec3(0.3, -0.2, 0.9).normalized();
    const double phi = std::atan2(local.y(), local.x());
    const double psi = std::asin(local.z());
    CHECK(local_angles_to_global_direction(pose, phi, psi).isApprox(pose.local_dir_to_global(local), 1e-12));
}

TEST_CASE("sanitize")
{
    std::vector<PathParamEstimate> ps = {nf_param(50.0, 49.0), nf_param(52.0, 30.0), nf_param(51.0, 20.0)};
    MeasurementVector z = sanitize_measurements(ps);
    CHECK(z.size() == 4 * 3 - 1);
    CHECK(z.reference == 0);
    CHECK(z.paths[1].delta_d == doctest::Approx(2.0));
    CHECK(z.paths[2].delta_d == doctest::Approx(1.0));
    const Eigen::VectorXd s = z.stack();
    CHECK(s.size() == 11);
    CHECK(s(2) == 49.0);
    CHECK(s(9) == doctest::Approx(2.0));

    // rule (i)
    ps[2].d = -3.0;
    z = sanitize_measurements(ps);
    CHECK(z.size() == 4 * 2 - 1);

    // rule (ii): negative curvature falls back to the FF angles without a kappa row
    ps[2].d = 51.0;
    ps[1].regime = Regime::FF;
    ps[1].kappa = -2.0;
    ps[1].flags |= path_flags::negative_kappa;
    z = sanitize_measurements(ps);
    REQUIRE(z.paths.size() == 3);
    CHECK_FALSE(z.paths[1].has_kappa);
    CHECK(z.paths[1].phi == 0.11);
    CHECK(z.size() == 3 + 2 + 3 + 2);

    // Delta-d does not depend on a common bias
    std::vector<PathParamEstimate> shifted = ps;
    for (auto &p : shifted)
        p.d += 17.0;
    const MeasurementVector zs = sanitize_measurements(shifted);
    for (std::size_t i = 0; i < zs.paths.size(); ++i)
        CHECK(zs.paths[i].delta_d == doctest::Approx(z.paths[i].delta_d).epsilon(1e-12));

    // reference is the smallest retained distance
    ps[0].d = -1.0;
    z = sanitize_measurements(ps);
    CHECK(z.paths[static_cast<std::size_t>(z.reference)].d == 51.0);

    CHECK(sanitize_measurements({}).empty());
}

TEST_CASE("noiseless end to end extraction")
{
    Scene scene;
    scene.panels = default_panels(scene.tunnel, true);
    scene.panels.erase(std::remove_if(scene.panels.begin(), scene.panels.end(),
                                      [](const Panel &p) { return p.kind != PanelKind::wall; }),
                       scene.panels.end());
    const AnchorSpec &anchor = scene.anchor;
    const Pose pose = anchor.array_pose(0);
    const auto layout = build_ura_layout(anchor);
    TrajectorySample ue;
    ue.position = Vec3(9.0, 3.0, 1.5);
    ue.speed = 9.0;
    std::mt19937_64 rng(2);
    const double bias = 37e-9;
    const auto paths = trace_paths(scene, pose, layout, ue, false, bias, rng);
    REQUIRE(paths.size() == 3);

    GridSpec g = GridSpec::srs(anchor.num_antennas(), 30e3, 8, 8, 12, 100e6);
    g.antenna_temp_k = 0.0;
    g.noise_figure_db = 0.0;
    const ExtractionResult ex = extract_paths(observe(synth_channel(paths, g), g, 1), 3, g, anchor, pose);
    REQUIRE(ex.paths.size() == 3);

    for (const auto &t : paths)
    {
        const Vec3 rel = t.vue - anchor.position;
        const double phi = std::atan2(rel.y(), rel.x());
        const double psi = std::atan2(rel.z(), std::hypot(rel.x(), rel.y()));
        const double d = t.delay * speed_of_light;
        const auto it = std::min_element(ex.paths.begin(), ex.paths.end(), [&](const auto &a, const auto &b)
                                         { return std::abs(a.d - d) < std::abs(b.d - d); });
        CHECK(it->regime == Regime::NF);
        CHECK(std::abs(wrap_angle(it->phi - phi)) < 1e-3);
        CHECK(std::abs(it->psi - psi) < 1e-3);
        CHECK(std::abs(it->kappa - t.distance_ref) / t.distance_ref < 0.01);
        CHECK(std::abs(it->d - d) < 1e-3);
        CHECK(std::abs(it->v - t.radial_velocity) < 1e-3);
        CHECK(std::abs(std::abs(it->alpha) - std::abs(t.gain)) / std::abs(t.gain) < 1e-6);
    }

    std::ostringstream os;
    write_params_csv_header(os);
    write_params_csv(os, 0, 0, ex.paths);
    const std::string csv = os.str();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
