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

#ifndef TUNNELLOC_ESTIMATE_HPP
#define TUNNELLOC_ESTIMATE_HPP

#include "tunnelloc/cpd.hpp"
#include "tunnelloc/scene.hpp"

#include <iosfwd>
#include <limits>
#include <vector>

namespace tunnelloc
{
    enum class Regime
    {
        NF,
        FF
    };

    // Per-path diagnostic bits
    namespace path_flags
    {
        constexpr unsigned scaling_invalid = 1u << 0;
        constexpr unsigned unwrap_unreliable = 1u << 1;
        constexpr unsigned tls_degenerate = 1u << 2;
        constexpr unsigned ff_fallback = 1u << 3;  // TLS homogeneous coordinate ~ 0
        constexpr unsigned angle_clamped = 1u << 4; // |horizontal| / kappa > 1
        constexpr unsigned azimuth_degenerate = 1u << 5;
        constexpr unsigned negative_kappa = 1u << 6;
    }

    struct PathParamEstimate
    {
        cdouble alpha{0.0, 0.0};
        // Array-local angles: phi in the array plane from local x, psi from the array plane
        double phi_local = 0.0;
        double psi_local = 0.0;
        // Same direction in the anchor's global-aligned frame: phi = atan2(y, x),
        // psi = elevation above the horizontal plane
        double phi = 0.0;
        double psi = 0.0;
        Vec3 direction = Vec3::UnitX(); // global unit vector towards the wave origin
        // Global-aligned angles of the FF solution, used when the path is demoted
        double phi_ff = std::numeric_limits<double>::quiet_NaN();
        double psi_ff = std::numeric_limits<double>::quiet_NaN();
        double kappa = 0.0;             // m, NaN when no NF estimate exists
        double d = 0.0;                 // m, clock-biased distance
        double v = 0.0;                 // m/s, radial velocity
        Regime regime = Regime::NF;
        bool valid = true;
        unsigned flags = 0;
        int column = -1; // CPD component index
    };

    // Computes alpha_l as the product of the first-row entries, then divides every column by
    // its first entry. Columns with a first entry below `tol` are marked invalid in
    // est.column_valid and left untouched.
    std::vector<cdouble> resolve_scaling(SteeringEstimates &est, double tol = 1e-12);

    // Per-column phase increment angle(diag(B(0:N-2,:)^H B(1:N-1,:)))
    Eigen::VectorXd vandermonde_roots(const Eigen::MatrixXcd &B);

    struct DistanceVelocity
    {
        Eigen::VectorXd d; // m
        Eigen::VectorXd v; // m/s
    };

    // d = -c / (2 pi df) mu_f wrapped into [window_min, window_min + c / df);
    // v = c / (2 pi f_c T_0) mu_t. `window_min_fraction` is in units of c / df.
    DistanceVelocity estimate_distance_velocity(const SteeringEstimates &est, const GridSpec &grid,
                                                double window_min_fraction = -0.25);

    struct UnwrapResult
    {
        Eigen::VectorXd delta; // m, delta[0] == 0
        bool reliable = true;  // false when the wrapped phase field has residues
        int residues = 0;
    };

    // Reliability-guided 2D unwrapping of the spatial steering vector on a rows x cols grid
    // (element index = row * cols + col), converted to path-length offsets.
    UnwrapResult unwrap_phase_2d(const Eigen::VectorXcd &b_s, int rows, int cols, double wavelength);

    struct WaveOriginNF
    {
        Vec3 x = Vec3::Zero(); // (x, y, kappa) in the array-local frame
        double homogeneous = 0.0;
        bool degenerate = false;
        bool far_field = false; // homogeneous coordinate below 1e-12
    };

    // TLS solution of 2 A x = y, A rows [x_m, y_m, delta_m], y rows r_m^2 - delta_m^2.
    // Element positions must lie in the local z = 0 plane with element 0 at the origin.
    WaveOriginNF solve_wave_origin_nf(const Eigen::VectorXd &delta, const std::vector<Vec3> &layout);

    // Least squares direction cosines (u_x, u_y) from the planar model delta_m = -(x_m u_x + y_m u_y).
    // Throws NumericalError when the element coordinates are rank deficient.
    Eigen::Vector2d solve_direction_ff(const Eigen::VectorXd &delta, const std::vector<Vec3> &layout);

    struct AngleEstimate
    {
        double phi = 0.0;
        double psi = 0.0;
        double kappa = 0.0;
        unsigned flags = 0;
    };

    // Spherical convention shared by the forward model and extraction:
    //     p = kappa (cos psi cos phi, cos psi sin phi, sin psi)
    // NF: x = (p_x, p_y, kappa). FF: x = (u_x, u_y, ignored), kappa returned as NaN.
    AngleEstimate extract_angles(const Vec3 &x, Regime regime);

    // Inverse of extract_angles for the NF case
    Vec3 angles_to_nf_vector(double phi, double psi, double kappa);

    // Local (phi, psi) -> global-aligned unit vector through the array rotation
    Vec3 local_angles_to_global_direction(const Pose &pose, double phi_local, double psi_local);

    struct ExtractOptions
    {
        CpdConfig cpd{};
        double window_min_fraction = -0.25;
        bool demote_unreliable_unwrap = true;
    };

    struct ExtractionResult
    {
        SteeringEstimates steering{};
        std::vector<PathParamEstimate> paths{};
    };

    // Full front-end for one array: CPD, scaling, distance/velocity, unwrapping, NF/FF
    // solving and angle extraction.
    ExtractionResult extract_paths(const ChannelTensor &h, int L, const GridSpec &grid,
                                   const AnchorSpec &anchor, const Pose &pose,
                                   const ExtractOptions &opts = {});

    struct MeasuredPath
    {
        int source = -1; // index into the parameter list
        double phi = 0.0;
        double psi = 0.0;
        double kappa = 0.0;
        bool has_kappa = true; // false for FF paths
        double d = 0.0;
        double v = 0.0;
        double delta_d = 0.0; // d - d_ref, 0 for the reference
        bool is_reference = false;

        int rows() const { return has_kappa ? 3 : 2; }
    };

    // Stacked measurement: [phi, psi, (kappa)] per path, followed by delta_d of every
    // non-reference path in path order.
    struct MeasurementVector
    {
        std::vector<MeasuredPath> paths{};
        int reference = -1;

        bool empty() const { return paths.empty(); }
        int size() const;
        Eigen::VectorXd stack() const;
    };

    // Consistency rules: d < 0 -> discard; kappa < 0 (or no NF estimate) -> FF; otherwise NF.
    // The reference is the retained path with the smallest d.
    MeasurementVector sanitize_measurements(const std::vector<PathParamEstimate> &params);

    void write_params_csv_header(std::ostream &os);
    void write_params_csv(std::ostream &os, int epoch, int array_index,
                          const std::vector<PathParamEstimate> &params);
}

#endif
