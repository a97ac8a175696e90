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

#ifndef TUNNELLOC_BASELINE_HPP
#define TUNNELLOC_BASELINE_HPP

#include "tunnelloc/estimate.hpp"

namespace tunnelloc
{
    struct SnapshotEstimate
    {
        Vec3 position = Vec3::Zero(); // global
        bool valid = false;           // false = outage
        bool used_kappa = false;
        int los_path = -1; // index into the parameter list
    };

    // Single-epoch LoS fix. The LoS path is chosen with the geometric d / kappa rule among NF
    // paths and placed at range kappa. Without a qualifying NF path, a first-arriving FF path is
    // placed at its clock-biased range d. Anything else is an outage.
    SnapshotEstimate tenfiloc_snapshot(const std::vector<PathParamEstimate> &params, const Vec3 &anchor_position,
                                       double gamma = 0.2);
}

#endif
