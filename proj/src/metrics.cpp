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

#include "tunnelloc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace tunnelloc
{
    MetricsReport compute_metrics(const std::vector<Vec3> &errors, int epochs)
    {
        MetricsReport m;
        m.samples = static_cast<int>(errors.size());
        m.epochs = epochs < 0 ? m.samples : epochs;
        if (m.epochs > 0)
            m.availability = static_cast<double>(m.samples) / m.epochs;
        if (errors.empty())
            return m;

        std::vector<double> e2d;
        e2d.reserve(errors.size());
        double sq = 0.0, abs2d = 0.0, absy = 0.0;
        for (const Vec3 &e : errors)
        {
            const double s = e.x() * e.x() + e.y() * e.y();
            sq += s;
            abs2d += std::sqrt(s);
            absy += std::abs(e.y());
            e2d.push_back(std::sqrt(s));
        }
        const double n = static_cast<double>(errors.size());
        m.rmse_2d = std::sqrt(sq / n);
        m.mae_2d = abs2d / n;
        m.y_mae = absy / n;

        std::sort(e2d.begin(), e2d.end());
        m.cdf.reserve(e2d.size());
        for (std::size_t i = 0; i < e2d.size(); ++i)
            m.cdf.emplace_back(e2d[i], static_cast<double>(i + 1) / n);
        m.cdf.back().second = 1.0;
        return m;
    }

    void write_cdf_csv(std::ostream &os, const MetricsReport &m)
    {
        const auto prec = os.precision(10);
        os << "error_2d,fraction\n";
        for (const auto &[e, f] : m.cdf)
            os << e << ',' << f << '\n';
        os.precision(prec);
    }
}
