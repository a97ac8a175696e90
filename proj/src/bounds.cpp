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

#include "tunnelloc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tunnelloc
{
    void BoundInputs::validate() const
    {
        if (!(R > 0.0) || !(W > 0.0) || !(eps_phase >= 0.0) || !(lambda > 0.0) || !(spacing > 0.0))
            throw std::invalid_argument("BoundInputs: R, W, lambda, spacing must be positive and eps >= 0");
    }

    double mmax_2d(const BoundInputs &in)
    {
        in.validate();
        const double gap = std::abs(in.W - in.y_u);
        if (gap < 1e-9)
            return std::numeric_limits<double>::infinity();
        return 1.0 + 2.0 * std::sqrt(in.R * in.W * in.eps_phase / (in.lambda * gap * pi));
    }

    double rho_3d(const BoundInputs &in)
    {
        return Vec3(in.R, 2.0 * in.W - in.y_u, in.z_u).norm();
    }

    double mmax_3d(double rho, double eps_phase, double lambda)
    {
        if (!(rho > 0.0))
            throw std::invalid_argument("mmax_3d: rho must be positive");
        return 1.0 + 2.0 * std::sqrt(rho * eps_phase / (lambda * pi));
    }

    double phase_error_fresnel(const BoundInputs &in, int M)
    {
        const double edge = (M - 1) * in.spacing;
        return 2.0 * pi / in.lambda * std::abs(in.W - in.y_u) / (2.0 * in.R * in.W) * edge * edge;
    }

    double phase_error_exact(const std::vector<Vec3> &elements, const Vec3 &ue, const Panel &panel,
                             double lambda)
    {
        if (elements.empty())
            throw std::domain_error("phase_error_exact: empty array");
        const Vec3 &ref = elements[0];
        const double da = panel.signed_distance(ref);
        const double du = panel.signed_distance(ue);
        if (da * du < 0.0 || std::abs(da) < 1e-12)
            throw std::domain_error("phase_error_exact: anchor and UE on opposite sides or anchor on plane");

        const Vec3 vue = ue - 2.0 * du * panel.unit_normal;
        const Vec3 dir = vue - ref;
        const double denom = panel.unit_normal.dot(dir);
        if (std::abs(denom) < 1e-15)
            return 0.0; // UE on the plane: VUE == UE == specular point direction
        const Vec3 spec = ref - da / denom * dir;

        const double dv0 = (vue - ref).norm();
        const double ds0 = (spec - ref).norm();
        double worst = 0.0;
        for (const auto &p : elements)
        {
            const double d_star = (vue - p).norm() - dv0;
            const double d_sr = (spec - p).norm() - ds0;
            worst = std::max(worst, std::abs(d_star - d_sr));
        }
        return 2.0 * pi / lambda * worst;
    }

    double phase_error_projected(const std::vector<Vec3> &elements, const Vec3 &vue, double lambda)
    {
        const double rho = vue.norm();
        if (!(rho > 0.0))
            throw std::domain_error("phase_error_projected: VUE at the origin");
        const Vec3 u = vue / rho;
        const Mat3 proj = Mat3::Identity() - u * u.transpose();
        double worst = 0.0;
        for (const auto &p : elements)
            worst = std::max(worst, (proj * p).squaredNorm() / (2.0 * rho));
        return 2.0 * pi / lambda * worst;
    }

    Panel wall_plane(double W)
    {
        Panel p;
        p.id = -1;
        p.center = Vec3(0.0, W, 0.0);
        p.unit_normal = -Vec3::UnitY();
        p.half_u = std::numeric_limits<double>::infinity();
        p.half_v = std::numeric_limits<double>::infinity();
        p.reflection_loss_db = 0.0;
        return p;
    }

    std::vector<Vec3> horizontal_square_array(int side, double spacing)
    {
        std::vector<Vec3> out;
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j)
                out.emplace_back(j * spacing, i * spacing, 0.0);
        return out;
    }

    std::vector<Vec3> cross_tunnel_ula(int M, double spacing)
    {
        std::vector<Vec3> out;
        for (int m = 0; m < M; ++m)
            out.emplace_back(0.0, m * spacing, 0.0);
        return out;
    }

    BoundSweepRow bound_sweep_row(const BoundInputs &in)
    {
        BoundSweepRow row;
        row.in = in;
        row.mmax_2d = mmax_2d(in);
        row.mmax_3d = mmax_3d(rho_3d(in), in.eps_phase, in.lambda);
        if (std::isfinite(row.mmax_2d))
        {
            const int side = std::max(1, static_cast<int>(std::floor(row.mmax_2d)));
            row.exact_error_at_mmax = phase_error_exact(horizontal_square_array(side, in.spacing),
                                                        Vec3(in.R, in.y_u, in.z_u), wall_plane(in.W), in.lambda);
        }
        return row;
    }
}
