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

#ifndef TUNNELLOC_COMMON_HPP
#define TUNNELLOC_COMMON_HPP

#include <Eigen/Dense>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tunnelloc
{
    using Vec3 = Eigen::Vector3d;
    using Mat3 = Eigen::Matrix3d;
    using cdouble = std::complex<double>;

    inline constexpr double speed_of_light = 299792458.0; // m/s
    inline constexpr double boltzmann = 1.380649e-23;     // J/K
    inline constexpr double pi = std::numbers::pi;

    inline constexpr double deg2rad(double deg) { return deg * pi / 180.0; }
    inline constexpr double rad2deg(double rad) { return rad * 180.0 / pi; }

    // Wraps an angle to (-pi, pi]
    inline double wrap_angle(double a)
    {
        a = std::remainder(a, 2.0 * pi);
        if (a <= -pi)
            a += 2.0 * pi;
        return a;
    }

    // Invalid or inconsistent user configuration (CLI exit code 2)
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Numerical breakdown the caller cannot recover from (CLI exit code 3)
    class NumericalError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
}

#endif
