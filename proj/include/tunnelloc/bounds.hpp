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

#ifndef TUNNELLOC_BOUNDS_HPP
#define TUNNELLOC_BOUNDS_HPP

#include "tunnelloc/scene.hpp"

#include <vector>

namespace tunnelloc
{
    // Geometry of the single-reflector validity bounds. The anchor reference element sits at
    // the origin, the UE at (R, y_u, z_u) and the reflecting plane is y = W.
    struct BoundInputs
    {
        double R = 3.5;
        double W = 3.0;
        double y_u = 2.5;
        double z_u = 0.0;
        double eps_phase = 0.15; // rad
        double lambda = speed_of_light / 5.9e9;
        double spacing = 0.5 * speed_of_light / 5.9e9;

        void validate() const;
    };

    // Largest array side for which a single specular point explains the reflected wavefront
    // within eps_phase (2D, array along the cross-tunnel axis):
    //     1 + 2 sqrt(R W eps / (lambda |W - y_u| pi)).
    // Returns +infinity when |W - y_u| < 1e-9 (the quadratic mismatch vanishes).
    double mmax_2d(const BoundInputs &in);

    // Distance from the reference element to the VUE (R, 2W - y_u, z_u).
    double rho_3d(const BoundInputs &in);

    // 1 + 2 sqrt(rho eps / (lambda pi))
    double mmax_3d(double rho, double eps_phase, double lambda);

    // Second-order prediction of the mismatch at the array edge, (M - 1) * spacing:
    //     (2 pi / lambda) |W - y_u| / (2 R W) ((M - 1) d)^2
    double phase_error_fresnel(const BoundInputs &in, int M);

    // Exact mismatch between per-element VUE offsets and the offsets generated by the single
    // specular point of the reference element: max_m (2 pi / lambda) |delta*_m - delta^SR_m|.
    // `elements` are global positions, elements[0] is the reference. The panel is treated
    // as an infinite plane. Throws std::domain_error for degenerate geometry.
    double phase_error_exact(const std::vector<Vec3> &elements, const Vec3 &ue, const Panel &panel,
                             double lambda);

    // Projected-aperture residual max_m (2 pi / lambda) ||P_perp p_m||^2 / (2 rho), with
    // P_perp = I - u u^T and u = p_v / rho.
    double phase_error_projected(const std::vector<Vec3> &elements, const Vec3 &vue, double lambda);

    // Reflecting plane y = W as an unbounded panel
    Panel wall_plane(double W);

    // Horizontal side x side square array at the origin (x along the tunnel, y towards the wall)
    std::vector<Vec3> horizontal_square_array(int side, double spacing);

    // Uniform linear array along +y (towards the wall)
    std::vector<Vec3> cross_tunnel_ula(int M, double spacing);

    struct BoundSweepRow
    {
        BoundInputs in{};
        double mmax_2d = 0.0;
        double mmax_3d = 0.0;
        double exact_error_at_mmax = 0.0; // square array with side floor(mmax_2d)
    };

    BoundSweepRow bound_sweep_row(const BoundInputs &in);
}

#endif
