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

#ifndef TUNNELLOC_TRACK_HPP
#define TUNNELLOC_TRACK_HPP

#include "tunnelloc/estimate.hpp"
#include "tunnelloc/measurement_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tunnelloc
{
    struct FilterConfig
    {
        double gate_probability = 0.99;
        int max_misses = 1; // zeta
        double los_gamma = 0.2;
        // re-identified LoS must pass a 2-dof angle gate on the UE at this probability; <= 0 disables
        double reid_gate_probability = 0.9999;
        double sigma_phi = deg2rad(2.0);
        double sigma_psi = deg2rad(2.0);
        double sigma_kappa = 1.5;
        double sigma_dd = 1.5;
        // > 0: sigma_kappa grows as (range / kappa_ref_range)^2 beyond this range
        double kappa_ref_range = 0.0;
        bool likelihood_cost = true; // rank gated pairs by eta^2 + ln|S_angles| instead of eta^2
        bool kappa_outlier_fallback = true; // gate on the angles alone when the curvature row fails
        double sigma_nu = 0.2;
        double sigma_theta = deg2rad(1.0);
        double sigma_p = 10.0;   // initial std of new tracks
        double sigma_rw = 0.2;   // VUE random walk per epoch
        double z_floor = 1e-4;   // m^2, process noise on z_u
        double doppler_tol = 1.0; // m/s
        double birth_min_ux = 0.1; // ray/plane intersection needs |u_x| above this
        ModelOptions model{};

        void validate() const;
    };

    struct TrackSet
    {
        Eigen::VectorXd s;
        Eigen::MatrixXd P;
        std::vector<int> miss_count{};
        std::vector<int> ids{}; // ids[0] == 0 is the UE
        int next_id = 1;
        int epoch = 0;

        static TrackSet initial(const Vec3 &p_u, const Mat3 &P_u);

        int L() const { return static_cast<int>(ids.size()); }
        int D() const { return static_cast<int>(s.size()); }
        Vec3 ue() const { return s.head<3>(); }
        Vec3 position(int track) const { return track_position(s, track); }

        // Appends a VUE with zero cross-covariance; returns its track index
        int add_vue(double y, double z, double variance);
        // Marginalises track `i` (>= 1) out of s and P
        void remove_track(int i);
        // Throws NumericalError on broken invariants
        void check(double psd_tol = 1e-9) const;
    };

    struct AssocPair
    {
        int track = -1;
        int meas = -1;
        double eta2 = 0.0;
        int dof = 3;
    };

    struct AssocResult
    {
        std::vector<AssocPair> pairs{};
        std::vector<int> unassociated_tracks{};
        std::vector<int> unassociated_measurements{};
        int singular_skipped = 0;
    };

    // Greedy one-to-one selection on a tracks x measurements cost matrix; entries that are not
    // finite are infeasible. Pairs are returned in selection order.
    std::vector<std::pair<int, int>> greedy_assign(const Eigen::MatrixXd &cost);

    // Measurement noise covariance of the (phi, psi[, kappa]) rows of one path
    Eigen::MatrixXd path_noise(const MeasuredPath &m, const FilterConfig &cfg, double range = 0.0);

    AssocResult associate(const TrackSet &tracks, const MeasurementVector &z, const FilterConfig &cfg);

    // Geometric LoS condition: argmin |d - kappa| over candidates with 1 - gamma <= d / kappa <= 1 + gamma.
    // Candidates without a positive finite kappa are skipped.
    std::optional<int> identify_los(const std::vector<double> &d, const std::vector<double> &kappa, double gamma,
                                    const std::vector<bool> &candidate = {});

    // Radial velocity a path with wave origin `origin` would show for a static reflector given
    // the ego velocity. `origin == p_u` is the LoS case.
    double predicted_static_radial_velocity(const Vec3 &p_u, const Vec3 &origin, const Vec3 &ego_velocity);

    enum class LosStatus
    {
        associated,
        reidentified,
        nlos
    };

    struct ManageResult
    {
        std::vector<AssocPair> pairs{}; // final pairs; births are paired with their measurement
        std::vector<int> dynamic_tracks{}; // track ids dropped after this epoch's update
        std::vector<int> born_ids{};
        std::vector<int> removed_ids{};
        LosStatus los = LosStatus::nlos;
    };

    // Miss counting and deletion, LoS re-identification, births and Doppler screening.
    // Track indices in the returned pairs refer to the modified `tracks`.
    ManageResult manage_tracks(TrackSet &tracks, const AssocResult &assoc, const MeasurementVector &z,
                               const Vec3 &ego_velocity, const FilterConfig &cfg);

    // Velocity-sensor prediction of the UE and random walk of the VUEs
    void predict(TrackSet &tracks, double nu, double theta, double T, const FilterConfig &cfg);

    struct UpdateInfo
    {
        int rows = 0;
        bool applied = false;
        bool singular = false;
    };

    // EKF update restricted to the associated rows with a Joseph-form covariance update.
    // Delta-d rows are formed against the associated measurement with the smallest d.
    UpdateInfo update(TrackSet &tracks, const MeasurementVector &z, const std::vector<AssocPair> &pairs,
                      const FilterConfig &cfg);

    // Joseph form (I - K H) P (I - K H)^T + K R K^T, symmetrised
    Eigen::MatrixXd joseph_update(const Eigen::MatrixXd &P, const Eigen::MatrixXd &K, const Eigen::MatrixXd &H,
                                  const Eigen::MatrixXd &R);
}

#endif
