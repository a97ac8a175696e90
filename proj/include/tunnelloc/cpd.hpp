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

#ifndef TUNNELLOC_CPD_HPP
#define TUNNELLOC_CPD_HPP

#include "tunnelloc/channel.hpp"

#include <cstdint>
#include <vector>

namespace tunnelloc
{
    struct CpdConfig
    {
        int max_iterations = 500;
        double tolerance = 1e-8;  // relative residual improvement
        int restarts = 5;         // initialisations tried, best residual wins
        std::uint64_t seed = 1;
        bool compress = true;     // run ALS on the HOSVD core, then refine on the full tensor
        int refine_iterations = 20;
        // URA shape of the spatial mode; enables shift-invariance initialisations when > 1
        int ura_rows = 0;
        int ura_cols = 0;
    };

    struct SteeringEstimates
    {
        Eigen::MatrixXcd B_s; // M x L
        Eigen::MatrixXcd B_f; // N_f x L
        Eigen::MatrixXcd B_t; // N_t x L
        double als_residual = 0.0; // ||H - [[B_s, B_f, B_t]]||_F / ||H||_F
        int restarts_used = 0;
        int iterations = 0;
        bool converged = false;
        bool kruskal_ok = true;
        std::vector<bool> column_valid{}; // filled by resolve_scaling

        int L() const { return static_cast<int>(B_s.cols()); }
    };

    // Sufficient generic-position check min(M,L) + min(N_f,L) + min(N_t,L) >= 2L + 2
    bool kruskal_generic_ok(int M, int N_f, int N_t, int L);

    // Rank-L canonical polyadic decomposition by alternating least squares. The tensor is
    // modelled as sum_l B_s(:,l) (x) B_f(:,l) (x) B_t(:,l); column scaling is arbitrary.
    // Throws std::invalid_argument when L < 1 or L exceeds min(M N_f, N_f N_t, M N_t).
    SteeringEstimates cpd(const ChannelTensor &h, int L, const CpdConfig &cfg = {});

    // Independent reconstruction, used for residuals and tests
    ChannelTensor cp_reconstruct(const Eigen::MatrixXcd &A, const Eigen::MatrixXcd &B,
                                 const Eigen::MatrixXcd &C);
}

#endif
