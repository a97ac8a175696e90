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

#ifndef TUNNELLOC_MEASUREMENT_MODEL_HPP
#define TUNNELLOC_MEASUREMENT_MODEL_HPP

#include "tunnelloc/common.hpp"

namespace tunnelloc
{
    // State layout: s = [x_u, y_u, z_u, y_v1, z_v1, ..., y_vn, z_vn], D = 2 L + 1 with L = n + 1.
    // Track 0 is the UE; track i >= 1 is the VUE (x_u, y_vi, z_vi). Coordinates are relative to
    // the anchor reference element in global-aligned axes.

    // Which distance the curvature of a reflected path is compared against
    enum class ReflectedRange
    {
        reflector,  // |p_r|, p_r on the mirror plane along anchor -> VUE
        virtual_ue  // |p_v|
    };

    struct ModelOptions
    {
        ReflectedRange reflected_range = ReflectedRange::reflector;
    };

    int num_tracks(const Eigen::VectorXd &s);
    Vec3 track_position(const Eigen::VectorXd &s, int track);

    struct ReflectorResult
    {
        Vec3 p_r = Vec3::Zero();
        double t = 0.0; // p_r = t p_v
        bool degenerate = false;
    };

    // Mirror plane between p_u and p_v with normal n ~ (0, dy, dz); p_r is its intersection with
    // the line through the origin and p_v.
    ReflectorResult reflector_from_vue(const Vec3 &p_u, const Vec3 &p_v, double tol = 1e-12);

    struct TrackPrediction
    {
        Eigen::Vector3d h = Eigen::Vector3d::Zero(); // (phi, psi, kappa)
        double range = 0.0;                          // |p_track|
        bool degenerate = false;
    };

    TrackPrediction predict_track(const Eigen::VectorXd &s, int track, const ModelOptions &opts = {});

    // Rows (phi, psi, kappa) of one track, 3 x D. Falls back to central differences when the
    // geometry is degenerate.
    Eigen::MatrixXd track_jacobian(const Eigen::VectorXd &s, int track, const ModelOptions &opts = {});

    // d|p_track| / ds, 1 x D
    Eigen::RowVectorXd range_jacobian(const Eigen::VectorXd &s, int track);

    // Full model: (phi, psi, kappa) of every track followed by |p_vi| - |p_u| for every VUE.
    // Length 3 L + (L - 1).
    Eigen::VectorXd h_model(const Eigen::VectorXd &s, const ModelOptions &opts = {});
    Eigen::MatrixXd jacobian(const Eigen::VectorXd &s, const ModelOptions &opts = {});
    Eigen::MatrixXd jacobian_numeric(const Eigen::VectorXd &s, const ModelOptions &opts = {});

    // Chi-square quantile used as the association gate
    double chi2_gate(int dof, double probability);
}

#endif
