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

#ifndef TUNNELLOC_JAVELIN_HPP
#define TUNNELLOC_JAVELIN_HPP

#include "tunnelloc/track.hpp"

namespace tunnelloc
{
    struct JavelinInputs
    {
        GridSpec grid{};
        AnchorSpec anchor{};
        int array_index = 0;
        int L = 3; // model order handed to the decomposition
        ExtractOptions extract{};
        FilterConfig filter{};
        // Velocity feed of the previous epoch and the epoch period
        double nu = 0.0;
        double theta = 0.0;
        double T = 0.1;
    };

    struct StepDiagnostics
    {
        int measurements = 0;
        int associated = 0; // pairs found by gating, before LoS re-identification and births
        std::vector<double> eta2{};
        std::vector<int> born_ids{};
        std::vector<int> removed_ids{};
        std::vector<int> dynamic_ids{};
        LosStatus los = LosStatus::nlos;
        int D = 0;
        bool update_applied = false;
        bool update_singular = false;
        double als_residual = 0.0;
    };

    struct StepResult
    {
        TrackSet tracks{};
        StepDiagnostics diag{};
        std::vector<PathParamEstimate> params{};
        MeasurementVector z{};
    };

    // predict -> associate -> manage -> update on already extracted path parameters
    StepResult javelin_step_params(TrackSet tracks, const std::vector<PathParamEstimate> &params,
                                   const JavelinInputs &in);

    // Full pipeline including extraction from the observed tensor
    StepResult javelin_step(TrackSet tracks, const ChannelTensor &h, const JavelinInputs &in);
}

#endif
