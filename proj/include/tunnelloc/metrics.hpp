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

#ifndef TUNNELLOC_METRICS_HPP
#define TUNNELLOC_METRICS_HPP

#include "tunnelloc/common.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace tunnelloc
{
    struct MetricsReport
    {
        double rmse_2d = 0.0;
        double mae_2d = 0.0;
        double y_mae = 0.0;
        std::vector<std::pair<double, double>> cdf{}; // (2D error, cumulative fraction)
        double availability = 0.0;                     // samples / epochs
        int samples = 0;
        int epochs = 0;
    };

    // `errors` holds estimate - truth for every epoch with an estimate; `epochs` counts all
    // epochs including outages (defaults to errors.size()).
    MetricsReport compute_metrics(const std::vector<Vec3> &errors, int epochs = -1);

    void write_cdf_csv(std::ostream &os, const MetricsReport &m);
}

#endif
