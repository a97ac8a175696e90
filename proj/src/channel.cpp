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

#include "tunnelloc/channel.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace tunnelloc
{
    void GridSpec::validate() const
    {
        if (M < 1 || N_f < 1 || N_t < 1)
            throw ConfigError("grid: M, N_f and N_t must be >= 1");
        if (!(carrier_hz > 0.0) || !(delta_f > 0.0) || !(T_0 > 0.0) || !(bandwidth_hz > 0.0))
            throw ConfigError("grid: carrier, delta_f, T_0 and bandwidth must be positive");
        if (delta_f * N_f > bandwidth_hz * (1.0 + 1e-12))
            throw ConfigError("grid: delta_f * N_f exceeds the bandwidth");
        if (!(antenna_temp_k >= 0.0))
            throw ConfigError("grid: antenna temperature must be non-negative");
    }

    GridSpec GridSpec::srs(int M, double scs_hz, int comb, int stride, int N_t, double bandwidth_hz)
    {
        GridSpec g;
        g.M = M;
        g.delta_f = scs_hz * comb * stride;
        g.bandwidth_hz = bandwidth_hz;
        g.N_f = static_cast<int>(std::floor(bandwidth_hz / g.delta_f + 1e-9));
        g.N_t = N_t;
        g.T_0 = 1.0 / scs_hz * (1.0 + 0.07);
        return g;
    }

    ChannelTensor::ChannelTensor(int M, int N_f, int N_t)
        : M_(M), N_f_(N_f), N_t_(N_t),
          data_(static_cast<std::size_t>(M) * static_cast<std::size_t>(N_f) * static_cast<std::size_t>(N_t), cdouble(0.0, 0.0))
    {
        if (M < 0 || N_f < 0 || N_t < 0)
            throw std::invalid_argument("ChannelTensor: negative dimension");
    }

    double ChannelTensor::squared_norm() const
    {
        double acc = 0.0;
        for (const auto &v : data_)
            acc += std::norm(v);
        return acc;
    }

    SteeringVectors steering_vectors(const PathTruth &path, const GridSpec &grid)
    {
        if (static_cast<int>(path.delta.size()) != grid.M)
            throw std::invalid_argument("steering_vectors: delta length does not match M");
        const cdouble j(0.0, 1.0);
        SteeringVectors sv;
        sv.b_s.resize(grid.M);
        sv.b_f.resize(grid.N_f);
        sv.b_t.resize(grid.N_t);
        const double k_c = 2.0 * pi * grid.carrier_hz / speed_of_light;
        for (int m = 0; m < grid.M; ++m)
            sv.b_s[m] = std::exp(j * (k_c * path.delta[m]));
        for (int s = 0; s < grid.N_f; ++s)
            sv.b_f[s] = std::exp(-j * (2.0 * pi * s * grid.delta_f * path.delay));
        for (int k = 0; k < grid.N_t; ++k)
            sv.b_t[k] = std::exp(j * (2.0 * pi * k * path.doppler * grid.T_0));
        sv.b_s[0] = sv.b_f[0] = sv.b_t[0] = cdouble(1.0, 0.0);
        return sv;
    }

    ChannelTensor synth_channel(const std::vector<PathTruth> &paths, const GridSpec &grid)
    {
        grid.validate();
        ChannelTensor h(grid.M, grid.N_f, grid.N_t);
        auto &data = h.data();
        for (const auto &path : paths)
        {
            const SteeringVectors sv = steering_vectors(path, grid);
            for (int k = 0; k < grid.N_t; ++k)
                for (int s = 0; s < grid.N_f; ++s)
                {
                    const cdouble c = path.gain * sv.b_f[s] * sv.b_t[k];
                    cdouble *col = &data[h.index(0, s, k)];
                    for (int m = 0; m < grid.M; ++m)
                        col[m] += c * sv.b_s[m];
                }
        }
        return h;
    }

    double noise_temperature(const GridSpec &grid)
    {
        return grid.antenna_temp_k + 290.0 * (std::pow(10.0, grid.noise_figure_db / 10.0) - 1.0);
    }

    double noise_power(const GridSpec &grid)
    {
        return boltzmann * grid.bandwidth_hz * noise_temperature(grid);
    }

    ChannelTensor observe(const ChannelTensor &h, const GridSpec &grid, std::uint64_t seed)
    {
        const double var = noise_power(grid);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> n01(0.0, 1.0);
        std::uniform_int_distribution<int> qpsk(0, 3);
        const double sd = std::sqrt(0.5 * var);

        ChannelTensor out = h;
        for (auto &v : out.data())
        {
            const cdouble x = std::polar(1.0, pi / 4.0 + 0.5 * pi * qpsk(rng));
            const cdouble z(sd * n01(rng), sd * n01(rng));
            v += z / x; // (H X + Z) / X
        }
        return out;
    }

    double draw_clock_bias(const ClockModel &model, std::mt19937_64 &rng)
    {
        if (!(model.sigma > 0.0) || !(model.support > 0.0))
            return 0.0;
        std::normal_distribution<double> n(0.0, model.sigma);
        for (;;)
        {
            const double b = n(rng);
            if (std::abs(b) <= model.support)
                return b;
        }
    }

    namespace
    {
        void put_u64(std::ostream &os, std::uint64_t v)
        {
            std::array<char, 8> b{};
            for (int i = 0; i < 8; ++i)
                b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
            os.write(b.data(), 8);
        }

        void put_u32(std::ostream &os, std::uint32_t v)
        {
            std::array<char, 4> b{};
            for (int i = 0; i < 4; ++i)
                b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
            os.write(b.data(), 4);
        }

        std::uint64_t get_u64(std::istream &is)
        {
            std::array<unsigned char, 8> b{};
            if (!is.read(reinterpret_cast<char *>(b.data()), 8))
                throw std::runtime_error("read_tensor: truncated header");
            std::uint64_t v = 0;
            for (int i = 7; i >= 0; --i)
                v = (v << 8) | b[i];
            return v;
        }

        std::uint32_t get_u32(std::istream &is)
        {
            std::array<unsigned char, 4> b{};
            if (!is.read(reinterpret_cast<char *>(b.data()), 4))
                throw std::runtime_error("read_tensor: truncated payload");
            std::uint32_t v = 0;
            for (int i = 3; i >= 0; --i)
                v = (v << 8) | b[i];
            return v;
        }
    }

    void write_tensor(std::ostream &os, const ChannelTensor &h)
    {
        put_u64(os, static_cast<std::uint64_t>(h.M()));
        put_u64(os, static_cast<std::uint64_t>(h.N_f()));
        put_u64(os, static_cast<std::uint64_t>(h.N_t()));
        for (const auto &v : h.data())
        {
            put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v.real())));
            put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v.imag())));
        }
    }

    ChannelTensor read_tensor(std::istream &is)
    {
        const auto M = static_cast<std::int64_t>(get_u64(is));
        const auto N_f = static_cast<std::int64_t>(get_u64(is));
        const auto N_t = static_cast<std::int64_t>(get_u64(is));
        if (M < 0 || N_f < 0 || N_t < 0 || M > (1 << 20) || N_f > (1 << 20) || N_t > (1 << 20))
            throw std::runtime_error("read_tensor: implausible dimensions");
        ChannelTensor h(static_cast<int>(M), static_cast<int>(N_f), static_cast<int>(N_t));
        for (auto &v : h.data())
        {
            const float re = std::bit_cast<float>(get_u32(is));
            const float im = std::bit_cast<float>(get_u32(is));
            v = cdouble(re, im);
        }
        return h;
    }

    void write_tensor_file(const std::string &path, const ChannelTensor &h)
    {
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot open " + path);
        write_tensor(os, h);
    }

    ChannelTensor read_tensor_file(const std::string &path)
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw std::runtime_error("cannot open " + path);
        return read_tensor(is);
    }
}
