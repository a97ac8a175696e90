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

#ifndef TUNNELLOC_CHANNEL_HPP
#define TUNNELLOC_CHANNEL_HPP

#include "tunnelloc/raygen.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace tunnelloc
{
    // Effective pilot grid after SRS demapping. With comb size 8 the pilot spacing is
    // 8 * subcarrier_spacing; `subcarrier_stride` keeps every n-th pilot tone, which widens
    // the effective spacing without changing the occupied bandwidth.
    struct GridSpec
    {
        int M = 100;
        int N_f = 416;
        int N_t = 12;
        double carrier_hz = 5.9e9;
        double delta_f = 8.0 * 30e3; // Hz
        double T_0 = 1.0 / 30e3 * (1.0 + 0.07);
        double bandwidth_hz = 100e6;
        double tx_power_dbm = 23.0;
        double noise_figure_db = 5.0;
        double antenna_temp_k = 298.0;

        double wavelength() const { return speed_of_light / carrier_hz; }
        void validate() const;

        // Comb-8 SRS abstraction: delta_f = comb * scs * stride, N_f = floor(BW / delta_f)
        static GridSpec srs(int M, double scs_hz = 30e3, int comb = 8, int stride = 1, int N_t = 12,
                            double bandwidth_hz = 100e6);
    };

    // Dense complex M x N_f x N_t tensor; element (m, s, k) lives at m + M * (s + N_f * k).
    class ChannelTensor
    {
    public:
        ChannelTensor() = default;
        ChannelTensor(int M, int N_f, int N_t);

        int M() const { return M_; }
        int N_f() const { return N_f_; }
        int N_t() const { return N_t_; }
        std::size_t size() const { return data_.size(); }

        cdouble &operator()(int m, int s, int k) { return data_[index(m, s, k)]; }
        const cdouble &operator()(int m, int s, int k) const { return data_[index(m, s, k)]; }
        std::size_t index(int m, int s, int k) const
        {
            return static_cast<std::size_t>(m) + static_cast<std::size_t>(M_) * (static_cast<std::size_t>(s) + static_cast<std::size_t>(N_f_) * static_cast<std::size_t>(k));
        }

        std::vector<cdouble> &data() { return data_; }
        const std::vector<cdouble> &data() const { return data_; }
        double squared_norm() const;

    private:
        int M_ = 0, N_f_ = 0, N_t_ = 0;
        std::vector<cdouble> data_{};
    };

    struct SteeringVectors
    {
        Eigen::VectorXcd b_s;
        Eigen::VectorXcd b_f;
        Eigen::VectorXcd b_t;
    };

    // b_s[m] = exp(+j 2 pi f_c / c delta_m), b_f[s] = exp(-j 2 pi s df tau),
    // b_t[k] = exp(+j 2 pi k f_d T_0)
    SteeringVectors steering_vectors(const PathTruth &path, const GridSpec &grid);

    // Rank-L CP construction sum_l alpha_l b_s (x) b_f (x) b_t
    ChannelTensor synth_channel(const std::vector<PathTruth> &paths, const GridSpec &grid);

    // Equivalent noise temperature T_ant + 290 (F - 1)
    double noise_temperature(const GridSpec &grid);
    // Noise power k_B * BW * T_e per resource element, W
    double noise_power(const GridSpec &grid);

    // Pilot-divided observation: Y = H .* X + Z, returns Y ./ X with unit-modulus QPSK pilots.
    // The noise variance per entry is `noise_power(grid)` (zero when T_e == 0).
    ChannelTensor observe(const ChannelTensor &h, const GridSpec &grid, std::uint64_t seed);

    struct ClockModel
    {
        double sigma = 50e-9;
        double support = 100e-9; // symmetric, [-support, support]
    };

    // Rejection sampling from N(0, sigma^2) truncated to the support
    double draw_clock_bias(const ClockModel &model, std::mt19937_64 &rng);

    // Binary dump: 24-byte header (M, N_f, N_t as little-endian int64) followed by
    // M * N_f * N_t complex64 values (float32 real, float32 imag, little-endian) in the
    // tensor's storage order (m fastest, then s, then k).
    void write_tensor(std::ostream &os, const ChannelTensor &h);
    ChannelTensor read_tensor(std::istream &is);
    void write_tensor_file(const std::string &path, const ChannelTensor &h);
    ChannelTensor read_tensor_file(const std::string &path);
}

#endif
