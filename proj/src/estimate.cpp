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

#include "tunnelloc/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace tunnelloc
{
    std::vector<cdouble> resolve_scaling(SteeringEstimates &est, double tol)
    {
        const int L = est.L();
        std::vector<cdouble> gains(static_cast<std::size_t>(L), cdouble(0.0, 0.0));
        est.column_valid.assign(static_cast<std::size_t>(L), true);
        for (int l = 0; l < L; ++l)
        {
            const cdouble s0 = est.B_s(0, l), f0 = est.B_f(0, l), t0 = est.B_t(0, l);
            if (std::abs(s0) <= tol || std::abs(f0) <= tol || std::abs(t0) <= tol)
            {
                est.column_valid[static_cast<std::size_t>(l)] = false;
                continue;
            }
            gains[static_cast<std::size_t>(l)] = s0 * f0 * t0;
            est.B_s.col(l) /= s0;
            est.B_f.col(l) /= f0;
            est.B_t.col(l) /= t0;
        }
        return gains;
    }

    Eigen::VectorXd vandermonde_roots(const Eigen::MatrixXcd &B)
    {
        const Eigen::Index n = B.rows();
        if (n < 2)
            throw std::invalid_argument("vandermonde_roots: need at least two rows");
        Eigen::VectorXd mu(B.cols());
        for (Eigen::Index l = 0; l < B.cols(); ++l)
            mu(l) = std::arg(B.col(l).head(n - 1).dot(B.col(l).tail(n - 1)));
        return mu;
    }

    DistanceVelocity estimate_distance_velocity(const SteeringEstimates &est, const GridSpec &grid,
                                                double window_min_fraction)
    {
        const Eigen::VectorXd mu_f = vandermonde_roots(est.B_f);
        const Eigen::VectorXd mu_t = vandermonde_roots(est.B_t);
        const double span = speed_of_light / grid.delta_f;
        const double lo = window_min_fraction * span;
        DistanceVelocity out;
        out.d.resize(mu_f.size());
        out.v.resize(mu_t.size());
        for (Eigen::Index l = 0; l < mu_f.size(); ++l)
        {
            double d = -speed_of_light / (2.0 * pi * grid.delta_f) * mu_f(l);
            d = lo + std::fmod(std::fmod(d - lo, span) + span, span);
            out.d(l) = d;
            out.v(l) = speed_of_light / (2.0 * pi * grid.carrier_hz * grid.T_0) * mu_t(l);
        }
        return out;
    }

    namespace
    {
        double wrap(double x) { return wrap_angle(x); }

        struct Edge
        {
            int a, b;
            double reliability;
        };
    }

    UnwrapResult unwrap_phase_2d(const Eigen::VectorXcd &b_s, int rows, int cols, double wavelength)
    {
        if (rows < 1 || cols < 1 || b_s.size() != static_cast<Eigen::Index>(rows) * cols)
            throw std::invalid_argument("unwrap_phase_2d: vector length does not match the grid");
        const int n = rows * cols;
        std::vector<double> ph(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            ph[static_cast<std::size_t>(i)] = std::arg(b_s(i));
        auto at = [&](int r, int c) { return ph[static_cast<std::size_t>(r * cols + c)]; };

        // Pixel reliability from wrapped second differences
        std::vector<double> rel(static_cast<std::size_t>(n), 0.0);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
            {
                double d2 = 0.0;
                int terms = 0;
                const double p0 = at(r, c);
                auto add = [&](int r1, int c1, int r2, int c2)
                {
                    if (r1 < 0 || r2 < 0 || c1 < 0 || c2 < 0 || r1 >= rows || r2 >= rows || c1 >= cols || c2 >= cols)
                        return;
                    const double s = wrap(at(r1, c1) - p0) - wrap(p0 - at(r2, c2));
                    d2 += s * s;
                    ++terms;
                };
                add(r, c - 1, r, c + 1);
                add(r - 1, c, r + 1, c);
                add(r - 1, c - 1, r + 1, c + 1);
                add(r - 1, c + 1, r + 1, c - 1);
                if (terms > 0)
                    rel[static_cast<std::size_t>(r * cols + c)] = 1.0 / (std::sqrt(d2 * 4.0 / terms) + 1e-12);
            }

        std::vector<Edge> edges;
        edges.reserve(static_cast<std::size_t>(2 * n));
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
            {
                const int i = r * cols + c;
                if (c + 1 < cols)
                    edges.push_back({i, i + 1, rel[static_cast<std::size_t>(i)] + rel[static_cast<std::size_t>(i + 1)]});
                if (r + 1 < rows)
                    edges.push_back({i, i + cols, rel[static_cast<std::size_t>(i)] + rel[static_cast<std::size_t>(i + cols)]});
            }
        std::stable_sort(edges.begin(), edges.end(), [](const Edge &x, const Edge &y) { return x.reliability > y.reliability; });

        std::vector<double> u = ph;
        std::vector<int> group(static_cast<std::size_t>(n));
        std::iota(group.begin(), group.end(), 0);
        std::vector<std::vector<int>> members(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            members[static_cast<std::size_t>(i)] = {i};

        for (const Edge &e : edges)
        {
            int ga = group[static_cast<std::size_t>(e.a)], gb = group[static_cast<std::size_t>(e.b)];
            if (ga == gb)
                continue;
            const double target = u[static_cast<std::size_t>(e.a)] + wrap(ph[static_cast<std::size_t>(e.b)] - ph[static_cast<std::size_t>(e.a)]);
            double shift = 2.0 * pi * std::round((target - u[static_cast<std::size_t>(e.b)]) / (2.0 * pi));
            // move the smaller group
            if (members[static_cast<std::size_t>(gb)].size() > members[static_cast<std::size_t>(ga)].size())
            {
                std::swap(ga, gb);
                shift = -shift;
            }
            for (int m : members[static_cast<std::size_t>(gb)])
            {
                u[static_cast<std::size_t>(m)] += shift;
                group[static_cast<std::size_t>(m)] = ga;
            }
            auto &dst = members[static_cast<std::size_t>(ga)];
            auto &src = members[static_cast<std::size_t>(gb)];
            dst.insert(dst.end(), src.begin(), src.end());
            src.clear();
        }

        UnwrapResult out;
        out.delta.resize(n);
        const double scale = wavelength / (2.0 * pi);
        for (int i = 0; i < n; ++i)
            out.delta(i) = (u[static_cast<std::size_t>(i)] - u[0]) * scale;

        for (int r = 0; r + 1 < rows; ++r)
            for (int c = 0; c + 1 < cols; ++c)
            {
                const double loop = wrap(at(r, c + 1) - at(r, c)) + wrap(at(r + 1, c + 1) - at(r, c + 1)) +
                                    wrap(at(r + 1, c) - at(r + 1, c + 1)) + wrap(at(r, c) - at(r + 1, c));
                if (std::abs(loop) > pi)
                    ++out.residues;
            }
        out.reliable = out.residues == 0;
        return out;
    }

    WaveOriginNF solve_wave_origin_nf(const Eigen::VectorXd &delta, const std::vector<Vec3> &layout)
    {
        const Eigen::Index M = static_cast<Eigen::Index>(layout.size());
        if (M < 4 || delta.size() != M)
            throw std::invalid_argument("solve_wave_origin_nf: need at least 4 elements and matching delta");
        Eigen::MatrixXd aug(M - 1, 4);
        for (Eigen::Index m = 1; m < M; ++m)
        {
            const Vec3 &q = layout[static_cast<std::size_t>(m)];
            const double dm = delta(m);
            aug(m - 1, 0) = 2.0 * q.x();
            aug(m - 1, 1) = 2.0 * q.y();
            aug(m - 1, 2) = 2.0 * dm;
            aug(m - 1, 3) = -(q.x() * q.x() + q.y() * q.y() - dm * dm);
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(aug, Eigen::ComputeFullV);
        const Eigen::VectorXd s = svd.singularValues();
        const Eigen::Vector4d v = svd.matrixV().col(3);

        WaveOriginNF out;
        out.homogeneous = v(3);
        out.degenerate = s.size() < 4 || (s(2) - s(3)) <= 1e-12 * std::max(s(0), 1e-300);
        if (std::abs(v(3)) < 1e-12)
        {
            out.far_field = true;
            out.x = Vec3::Constant(std::numeric_limits<double>::infinity());
            return out;
        }
        out.x = v.head<3>() / v(3);
        return out;
    }

    Eigen::Vector2d solve_direction_ff(const Eigen::VectorXd &delta, const std::vector<Vec3> &layout)
    {
        const Eigen::Index M = static_cast<Eigen::Index>(layout.size());
        if (M < 3 || delta.size() != M)
            throw std::invalid_argument("solve_direction_ff: need at least 3 elements and matching delta");
        Eigen::MatrixXd A(M - 1, 2);
        Eigen::VectorXd rhs(M - 1);
        for (Eigen::Index m = 1; m < M; ++m)
        {
            A(m - 1, 0) = layout[static_cast<std::size_t>(m)].x();
            A(m - 1, 1) = layout[static_cast<std::size_t>(m)].y();
            rhs(m - 1) = -delta(m);
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < 2)
            throw NumericalError("solve_direction_ff: element layout is rank deficient");
        return qr.solve(rhs);
    }

    AngleEstimate extract_angles(const Vec3 &x, Regime regime)
    {
        AngleEstimate out;
        const double horiz = std::hypot(x(0), x(1));
        double ratio;
        if (regime == Regime::NF)
        {
            out.kappa = x(2);
            ratio = out.kappa != 0.0 ? horiz / std::abs(out.kappa) : std::numeric_limits<double>::infinity();
        }
        else
        {
            out.kappa = std::numeric_limits<double>::quiet_NaN();
            ratio = horiz;
        }
        if (ratio > 1.0)
        {
            ratio = 1.0;
            out.flags |= path_flags::angle_clamped;
        }
        out.psi = std::acos(ratio);
        if (horiz <= 1e-12 * std::max(1.0, std::abs(regime == Regime::NF ? out.kappa : 1.0)))
        {
            out.phi = 0.0;
            out.flags |= path_flags::azimuth_degenerate;
        }
        else
            out.phi = std::atan2(x(1), x(0));
        return out;
    }

    Vec3 angles_to_nf_vector(double phi, double psi, double kappa)
    {
        return {kappa * std::cos(psi) * std::cos(phi), kappa * std::cos(psi) * std::sin(phi), kappa};
    }

    Vec3 local_angles_to_global_direction(const Pose &pose, double phi_local, double psi_local)
    {
        const Vec3 u(std::cos(psi_local) * std::cos(phi_local), std::cos(psi_local) * std::sin(phi_local), std::sin(psi_local));
        return pose.local_dir_to_global(u).normalized();
    }

    namespace
    {
        void global_angles(const Vec3 &u, double &phi, double &psi)
        {
            phi = std::atan2(u.y(), u.x());
            psi = std::atan2(u.z(), std::hypot(u.x(), u.y()));
        }
    }

    ExtractionResult extract_paths(const ChannelTensor &h, int L, const GridSpec &grid,
                                   const AnchorSpec &anchor, const Pose &pose, const ExtractOptions &opts)
    {
        if (h.M() != anchor.num_antennas())
            throw std::invalid_argument("extract_paths: tensor spatial size does not match the array");
        CpdConfig cfg = opts.cpd;
        cfg.ura_rows = anchor.rows;
        cfg.ura_cols = anchor.cols;

        ExtractionResult res;
        res.steering = cpd(h, L, cfg);
        const std::vector<cdouble> gains = resolve_scaling(res.steering);
        const DistanceVelocity dv = estimate_distance_velocity(res.steering, grid, opts.window_min_fraction);
        const std::vector<Vec3> layout = build_ura_layout(anchor);
        const double lambda = grid.wavelength();

        for (int l = 0; l < L; ++l)
        {
            PathParamEstimate p;
            p.column = l;
            p.alpha = gains[static_cast<std::size_t>(l)];
            p.d = dv.d(l);
            p.v = dv.v(l);
            if (!res.steering.column_valid[static_cast<std::size_t>(l)])
            {
                p.valid = false;
                p.flags |= path_flags::scaling_invalid;
                p.kappa = std::numeric_limits<double>::quiet_NaN();
                res.paths.push_back(p);
                continue;
            }

            const UnwrapResult uw = unwrap_phase_2d(res.steering.B_s.col(l), anchor.rows, anchor.cols, lambda);
            if (!uw.reliable)
                p.flags |= path_flags::unwrap_unreliable;

            const Eigen::Vector2d uff = solve_direction_ff(uw.delta, layout);
            const AngleEstimate aff = extract_angles(Vec3(uff(0), uff(1), 0.0), Regime::FF);
            global_angles(local_angles_to_global_direction(pose, aff.phi, aff.psi), p.phi_ff, p.psi_ff);

            AngleEstimate chosen = aff;
            p.regime = Regime::FF;
            const bool try_nf = uw.reliable || !opts.demote_unreliable_unwrap;
            if (try_nf)
            {
                const WaveOriginNF nf = solve_wave_origin_nf(uw.delta, layout);
                if (nf.degenerate)
                    p.flags |= path_flags::tls_degenerate;
                if (nf.far_field || !nf.x.allFinite())
                    p.flags |= path_flags::ff_fallback;
                else if (nf.x(2) <= 0.0)
                {
                    p.flags |= path_flags::negative_kappa;
                    p.kappa = nf.x(2);
                }
                else
                {
                    chosen = extract_angles(nf.x, Regime::NF);
                    p.regime = Regime::NF;
                }
            }
            p.flags |= chosen.flags;
            if (p.regime == Regime::NF)
                p.kappa = chosen.kappa;
            else if (!(p.flags & path_flags::negative_kappa))
                p.kappa = std::numeric_limits<double>::quiet_NaN();
            p.phi_local = chosen.phi;
            p.psi_local = chosen.psi;
            p.direction = local_angles_to_global_direction(pose, p.phi_local, p.psi_local);
            global_angles(p.direction, p.phi, p.psi);
            p.valid = p.d >= 0.0 && std::isfinite(p.phi) && std::isfinite(p.psi);
            res.paths.push_back(p);
        }
        return res;
    }

    int MeasurementVector::size() const
    {
        int k = 0;
        for (const auto &p : paths)
            k += p.rows();
        return k + std::max(0, static_cast<int>(paths.size()) - 1);
    }

    Eigen::VectorXd MeasurementVector::stack() const
    {
        Eigen::VectorXd z(size());
        int i = 0;
        for (const auto &p : paths)
        {
            z(i++) = p.phi;
            z(i++) = p.psi;
            if (p.has_kappa)
                z(i++) = p.kappa;
        }
        for (const auto &p : paths)
            if (!p.is_reference)
                z(i++) = p.delta_d;
        return z;
    }

    MeasurementVector sanitize_measurements(const std::vector<PathParamEstimate> &params)
    {
        MeasurementVector out;
        for (std::size_t i = 0; i < params.size(); ++i)
        {
            const PathParamEstimate &e = params[i];
            if (!std::isfinite(e.d) || e.d < 0.0)
                continue;
            if (e.flags & path_flags::scaling_invalid)
                continue;
            MeasuredPath m;
            m.source = static_cast<int>(i);
            m.d = e.d;
            m.v = e.v;
            const bool nf = e.regime == Regime::NF && std::isfinite(e.kappa) && e.kappa > 0.0;
            if (nf)
            {
                m.phi = e.phi;
                m.psi = e.psi;
                m.kappa = e.kappa;
                m.has_kappa = true;
            }
            else
            {
                m.phi = std::isfinite(e.phi_ff) ? e.phi_ff : e.phi;
                m.psi = std::isfinite(e.psi_ff) ? e.psi_ff : e.psi;
                m.kappa = std::numeric_limits<double>::quiet_NaN();
                m.has_kappa = false;
            }
            if (!std::isfinite(m.phi) || !std::isfinite(m.psi))
                continue;
            out.paths.push_back(m);
        }
        if (out.paths.empty())
            return out;
        auto ref = std::min_element(out.paths.begin(), out.paths.end(),
                                    [](const MeasuredPath &a, const MeasuredPath &b) { return a.d < b.d; });
        out.reference = static_cast<int>(ref - out.paths.begin());
        ref->is_reference = true;
        const double d0 = ref->d;
        for (auto &p : out.paths)
            p.delta_d = p.d - d0;
        return out;
    }

    void write_params_csv_header(std::ostream &os)
    {
        os << "epoch,array,column,regime,valid,flags,phi,psi,phi_local,psi_local,kappa,d,v,alpha_re,alpha_im\n";
    }

    void write_params_csv(std::ostream &os, int epoch, int array_index, const std::vector<PathParamEstimate> &params)
    {
        const auto old_prec = os.precision(10);
        for (const auto &p : params)
            os << epoch << ',' << array_index << ',' << p.column << ',' << (p.regime == Regime::NF ? "NF" : "FF") << ','
               << (p.valid ? 1 : 0) << ',' << p.flags << ',' << p.phi << ',' << p.psi << ',' << p.phi_local << ','
               << p.psi_local << ',' << p.kappa << ',' << p.d << ',' << p.v << ',' << p.alpha.real() << ','
               << p.alpha.imag() << '\n';
        os.precision(old_prec);
    }
}
