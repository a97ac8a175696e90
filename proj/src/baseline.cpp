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

#include "tunnelloc/baseline.hpp"
#include "tunnelloc/track.hpp"

#include <algorithm>
#include <cmath>

namespace tunnelloc
{
    SnapshotEstimate tenfiloc_snapshot(const std::vector<PathParamEstimate> &params, const Vec3 &anchor_position,
                                       double gamma)
    {
        SnapshotEstimate out;
        const MeasurementVector z = sanitize_measurements(params);
        if (z.empty())
            return out;

        std::vector<double> d, k;
        for (const auto &m : z.paths)
        {
            d.push_back(m.d);
            k.push_back(m.has_kappa ? m.kappa : std::numeric_limits<double>::quiet_NaN());
        }

        const MeasuredPath *los = nullptr;
        double range = 0.0;
        if (auto l = identify_los(d, k, gamma))
        {
            los = &z.paths[static_cast<std::size_t>(*l)];
            range = los->kappa;
            out.used_kappa = true;
        }
        else
        {
            const MeasuredPath &first = z.paths[static_cast<std::size_t>(z.reference)];
            if (!first.has_kappa)
            {
                los = &first;
                range = first.d;
            }
        }
        if (los == nullptr)
            return out;

        const Vec3 u(std::cos(los->psi) * std::cos(los->phi), std::cos(los->psi) * std::sin(los->phi), std::sin(los->psi));
        out.position = anchor_position + range * u;
        out.valid = true;
        out.los_path = los->source;
        return out;
    }
}
