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

#include "tunnelloc/measurement_model.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>

namespace tunnelloc
{
    int num_tracks(const Eigen::VectorXd &s)
    {
        if (s.size() < 3 || (s.size() - 3) % 2 != 0)
            throw std::invalid_argument("state length must be 2 L + 1 with L >= 1");
        return static_cast<int>((s.size() - 1) / 2);
    }

    Vec3 track_position(const Eigen::VectorXd &s, int track)
    {
        if (track == 0)
            return s.head<3>();
        return {s(0), s(2 * track + 1), s(2 * track + 2)};
    }

    ReflectorResult reflector_from_vue(const Vec3 &p_u, const Vec3 &p_v, double tol)
    {
        ReflectorResult out;
        const Vec3 m(0.0, p_v.y() - p_u.y(), p_v.z() - p_u.z());
        const double mn = m.norm();
        const double scale = std::max({1.0, p_u.norm(), p_v.norm()});
        if (mn <= tol * scale)
        {
            out.degenerate = true;
            return out;
        }
        const Vec3 n = m / mn;
        const double nv = n.dot(p_v);
        const double nu = n.dot(p_u);
        if (std::abs(nv) <= tol * scale || std::abs(nu + nv) <= tol * scale)
            out.degenerate = true;
        if (std::abs(nv) <= tol * scale)
            return out;
        out.t = (nu + nv) / (2.0 * nv);
        out.p_r = out.t * p_v;
        return out;
    }

    namespace
    {
        void angles_of(const Vec3 &p, double &phi, double &psi)
        {
            phi = std::atan2(p.y(), p.x());
            psi = std::atan2(p.z(), std::hypot(p.x(), p.y()));
        }

        // d(phi, psi)/dp, 2 x 3
        Eigen::Matrix<double, 2, 3> angle_gradient(const Vec3 &p)
        {
            const double rho2 = p.x() * p.x() + p.y() * p.y();
            const double rho = std::sqrt(rho2);
            const double r2 = rho2 + p.z() * p.z();
            Eigen::Matrix<double, 2, 3> g;
            g << -p.y() / rho2, p.x() / rho2, 0.0,
                -p.z() * p.x() / (rho * r2), -p.z() * p.y() / (rho * r2), rho / r2;
            return g;
        }

        // Scatters a gradient w.r.t. the track position into state columns
        template <typename Row>
        void scatter(Row &&row, int track, const Eigen::RowVector3d &g)
        {
            if (track == 0)
            {
                row.template head<3>() += g;
                return;
            }
            row(0) += g(0);
            row(2 * track + 1) += g(1);
            row(2 * track + 2) += g(2);
        }
    }

    TrackPrediction predict_track(const Eigen::VectorXd &s, int track, const ModelOptions &opts)
    {
        const int L = num_tracks(s);
        if (track < 0 || track >= L)
            throw std::out_of_range("predict_track: track index out of range");
        TrackPrediction out;
        const Vec3 p = track_position(s, track);
        angles_of(p, out.h(0), out.h(1));
        out.range = p.norm();
        if (track == 0 || opts.reflected_range == ReflectedRange::virtual_ue)
        {
            out.h(2) = out.range;
            return out;
        }
        const Vec3 pu = s.head<3>();
        const ReflectorResult r = reflector_from_vue(pu, p);
        if (r.degenerate)
        {
            out.degenerate = true;
            out.h(2) = pu.norm();
            return out;
        }
        out.h(2) = r.p_r.norm();
        return out;
    }

    namespace
    {
        Eigen::MatrixXd track_jacobian_numeric(const Eigen::VectorXd &s, int track, const ModelOptions &opts)
        {
            const Eigen::Index D = s.size();
            Eigen::MatrixXd J(3, D);
            Eigen::VectorXd sp = s, sm = s;
            for (Eigen::Index i = 0; i < D; ++i)
            {
                const double h = 1e-6 * (1.0 + std::abs(s(i)));
                sp(i) = s(i) + h;
                sm(i) = s(i) - h;
                const Eigen::Vector3d a = predict_track(sp, track, opts).h;
                const Eigen::Vector3d b = predict_track(sm, track, opts).h;
                Eigen::Vector3d d = a - b;
                d(0) = wrap_angle(d(0));
                J.col(i) = d / (2.0 * h);
                sp(i) = s(i);
                sm(i) = s(i);
            }
            return J;
        }
    }

    Eigen::MatrixXd track_jacobian(const Eigen::VectorXd &s, int track, const ModelOptions &opts)
    {
        const int L = num_tracks(s);
        if (track < 0 || track >= L)
            throw std::out_of_range("track_jacobian: track index out of range");
        const Eigen::Index D = s.size();
        const Vec3 p = track_position(s, track);
        const double rho = std::hypot(p.x(), p.y());
        const double pn = p.norm();
        const double scale = std::max(1.0, pn);
        if (rho <= 1e-9 * scale || pn <= 1e-12)
            return track_jacobian_numeric(s, track, opts);

        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, D);
        const Eigen::Matrix<double, 2, 3> ga = angle_gradient(p);
        scatter(J.row(0), track, ga.row(0));
        scatter(J.row(1), track, ga.row(1));

        if (track == 0 || opts.reflected_range == ReflectedRange::virtual_ue)
        {
            scatter(J.row(2), track, (p / pn).transpose());
            return J;
        }

        const Vec3 pu = s.head<3>();
        const ReflectorResult r = reflector_from_vue(pu, p);
        if (r.degenerate)
            return track_jacobian_numeric(s, track, opts);

        // t = N / Dn with N = (y_v^2 - y_u^2) + (z_v^2 - z_u^2),
        // Dn = 2 ((y_v - y_u) y_v + (z_v - z_u) z_v); x does not enter t
        const double yu = pu.y(), zu = pu.z(), yv = p.y(), zv = p.z();
        const double N = (yv * yv - yu * yu) + (zv * zv - zu * zu);
        const double Dn = 2.0 * ((yv - yu) * yv + (zv - zu) * zv);
        const double t = N / Dn;
        const double dt_yu = (-2.0 * yu * Dn - N * (-2.0 * yv)) / (Dn * Dn);
        const double dt_zu = (-2.0 * zu * Dn - N * (-2.0 * zv)) / (Dn * Dn);
        const double dt_yv = (2.0 * yv * Dn - N * 2.0 * (2.0 * yv - yu)) / (Dn * Dn);
        const double dt_zv = (2.0 * zv * Dn - N * 2.0 * (2.0 * zv - zu)) / (Dn * Dn);

        // kappa = |t| |p_v|
        const double sgn = t >= 0.0 ? 1.0 : -1.0;
        auto row = J.row(2);
        scatter(row, track, (sgn * t * p / pn).transpose());
        row(1) += sgn * dt_yu * pn;
        row(2) += sgn * dt_zu * pn;
        row(2 * track + 1) += sgn * dt_yv * pn;
        row(2 * track + 2) += sgn * dt_zv * pn;
        return J;
    }

    Eigen::RowVectorXd range_jacobian(const Eigen::VectorXd &s, int track)
    {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(s.size());
        const Vec3 p = track_position(s, track);
        const double pn = p.norm();
        if (pn > 0.0)
            scatter(row, track, (p / pn).transpose());
        return row;
    }

    Eigen::VectorXd h_model(const Eigen::VectorXd &s, const ModelOptions &opts)
    {
        const int L = num_tracks(s);
        Eigen::VectorXd z(3 * L + (L - 1));
        const double ru = s.head<3>().norm();
        for (int i = 0; i < L; ++i)
        {
            const TrackPrediction tp = predict_track(s, i, opts);
            z.segment<3>(3 * i) = tp.h;
            if (i > 0)
                z(3 * L + i - 1) = tp.range - ru;
        }
        return z;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd &s, const ModelOptions &opts)
    {
        const int L = num_tracks(s);
        Eigen::MatrixXd H(3 * L + (L - 1), s.size());
        const Eigen::RowVectorXd gu = range_jacobian(s, 0);
        for (int i = 0; i < L; ++i)
        {
            H.middleRows(3 * i, 3) = track_jacobian(s, i, opts);
            if (i > 0)
                H.row(3 * L + i - 1) = range_jacobian(s, i) - gu;
        }
        return H;
    }

    Eigen::MatrixXd jacobian_numeric(const Eigen::VectorXd &s, const ModelOptions &opts)
    {
        const int L = num_tracks(s);
        const Eigen::Index K = 3 * L + (L - 1);
        Eigen::MatrixXd H(K, s.size());
        Eigen::VectorXd sp = s, sm = s;
        for (Eigen::Index i = 0; i < s.size(); ++i)
        {
            const double h = 1e-6 * (1.0 + std::abs(s(i)));
            sp(i) = s(i) + h;
            sm(i) = s(i) - h;
            Eigen::VectorXd d = h_model(sp, opts) - h_model(sm, opts);
            for (int l = 0; l < L; ++l)
                d(3 * l) = wrap_angle(d(3 * l));
            H.col(i) = d / (2.0 * h);
            sp(i) = s(i);
            sm(i) = s(i);
        }
        return H;
    }

    double chi2_gate(int dof, double probability)
    {
        if (dof < 1 || !(probability > 0.0 && probability < 1.0))
            throw std::invalid_argument("chi2_gate: dof >= 1 and 0 < p < 1 required");
        const boost::math::chi_squared dist(dof);
        return boost::math::quantile(dist, probability);
    }
}
