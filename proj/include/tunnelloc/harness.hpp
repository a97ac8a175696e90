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

#ifndef TUNNELLOC_HARNESS_HPP
#define TUNNELLOC_HARNESS_HPP

#include "tunnelloc/baseline.hpp"
#include "tunnelloc/javelin.hpp"
#include "tunnelloc/metrics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tunnelloc
{
    enum class Visibility
    {
        los,     // "L"
        partial, // "N@q", LoS blocked with probability q per epoch
        nlos     // "N"
    };

    struct RunMode
    {
        Visibility kind = Visibility::los;
        double q = 0.0;

        double blocking_probability() const;
        std::string str() const;
        // Accepts "L", "N", "N@0.5"; throws ConfigError otherwise
        static RunMode parse(const std::string &text);
    };

    struct ScenarioConfig
    {
        std::string name = "straight";

        TunnelSpec tunnel{};
        AnchorSpec anchor{};
        bool walls_reflective = true;
        bool ceiling_reflective = false;
        TrajectorySpec trajectory{};

        // SRS abstraction: delta_f = comb * scs * stride, N_f = floor(BW / delta_f)
        double scs_hz = 30e3;
        int comb = 8;
        int subcarrier_stride = 8;
        int symbols = 12;
        double carrier_hz = 5.9e9;
        double bandwidth_hz = 100e6;
        double tx_power_dbm = 23.0;
        double noise_figure_db = 5.0;
        double antenna_temp_k = 298.0;

        ClockModel clock{};
        bool clock_per_epoch = true;
        WavefrontModel wavefront = WavefrontModel::single_reflector;

        ExtractOptions extract{};
        FilterConfig filter = [] {
            FilterConfig f;
            f.kappa_ref_range = 10.0;
            return f;
        }();
        double init_position_sigma = 0.0; // m, open-sky fix error per axis (x, y)
        double ue_prior_sigma = 0.3;      // m, UE prior std; 0 uses filter.sigma_p

        bool clutter = false;
        double clutter_radial_velocity = 8.0; // m/s
        double clutter_amplitude_db = -10.0;  // relative to the LoS amplitude

        RunMode mode{};
        bool rrm = true;
        std::vector<std::uint64_t> seeds{};
        bool debug_params = false;

        GridSpec grid() const;
        Scene scene() const; // honours `rrm`
        void validate() const;
        static std::vector<std::uint64_t> default_seeds(int n = 20);
    };

    struct EpochRecord
    {
        std::uint64_t seed = 0;
        int epoch = 0;
        double time = 0.0;
        bool valid = false;
        Vec3 estimate = Vec3::Zero();
        Vec3 truth = Vec3::Zero();
        int D = 0;
        int los = 0;          // LosStatus for the tracker, 1 when the snapshot used kappa
        int associations = 0;
        int measurements = 0;
        int true_paths = 0;
        bool los_visible = true;
    };

    struct MethodResult
    {
        std::string name;
        MetricsReport metrics{};                 // pooled over all seeds
        std::vector<MetricsReport> per_seed{};   // same order as the seed list
        std::vector<EpochRecord> epochs{};
    };

    struct RunResult
    {
        std::vector<std::uint64_t> seeds{};
        MethodResult javelin{};
        MethodResult tenfiloc{};
        std::vector<std::string> param_rows{}; // debug CSV rows when requested
    };

    RunResult run_scenario(const ScenarioConfig &cfg);

    // Writes config echo, per-method epoch CSVs, metrics JSON and CDF CSVs into `dir`
    void write_results(const RunResult &res, const ScenarioConfig &cfg, const std::string &dir);
}

#endif
