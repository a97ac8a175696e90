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

#include "tunnelloc/javelin.hpp"

#include <algorithm>

namespace tunnelloc
{
    StepResult javelin_step_params(TrackSet tracks, const std::vector<PathParamEstimate> &params,
                                   const JavelinInputs &in)
    {
        StepResult out;
        out.params = params;
        out.z = sanitize_measurements(params);
        out.diag.measurements = static_cast<int>(out.z.paths.size());

        predict(tracks, in.nu, in.theta, in.T, in.filter);
        if (out.z.empty())
        {
            for (int i = 0; i < tracks.L(); ++i)
                ++tracks.miss_count[static_cast<std::size_t>(i)];
            for (int i = tracks.L() - 1; i >= 1; --i)
                if (tracks.miss_count[static_cast<std::size_t>(i)] > in.filter.max_misses)
                {
                    out.diag.removed_ids.push_back(tracks.ids[static_cast<std::size_t>(i)]);
                    tracks.remove_track(i);
                }
            out.diag.los = LosStatus::nlos;
            out.diag.D = tracks.D();
            out.tracks = std::move(tracks);
            return out;
        }

        const AssocResult assoc = associate(tracks, out.z, in.filter);
        out.diag.associated = static_cast<int>(assoc.pairs.size());
        for (const auto &p : assoc.pairs)
            out.diag.eta2.push_back(p.eta2);

        const Vec3 ego(in.nu * std::cos(in.theta), in.nu * std::sin(in.theta), 0.0);
        const ManageResult mr = manage_tracks(tracks, assoc, out.z, ego, in.filter);
        out.diag.born_ids = mr.born_ids;
        out.diag.removed_ids = mr.removed_ids;
        out.diag.dynamic_ids = mr.dynamic_tracks;
        out.diag.los = mr.los;

        const UpdateInfo ui = update(tracks, out.z, mr.pairs, in.filter);
        out.diag.update_applied = ui.applied;
        out.diag.update_singular = ui.singular;

        // Dynamic reflectors contribute once and are not propagated
        for (int id : mr.dynamic_tracks)
        {
            auto it = std::find(tracks.ids.begin(), tracks.ids.end(), id);
            if (it != tracks.ids.end() && it != tracks.ids.begin())
            {
                tracks.remove_track(static_cast<int>(it - tracks.ids.begin()));
                out.diag.removed_ids.push_back(id);
            }
        }
        out.diag.D = tracks.D();
        out.tracks = std::move(tracks);
        return out;
    }

    StepResult javelin_step(TrackSet tracks, const ChannelTensor &h, const JavelinInputs &in)
    {
        const Pose pose = in.anchor.array_pose(static_cast<std::size_t>(in.array_index));
        ExtractionResult ex = extract_paths(h, in.L, in.grid, in.anchor, pose, in.extract);
        StepResult out = javelin_step_params(std::move(tracks), ex.paths, in);
        out.diag.als_residual = ex.steering.als_residual;
        return out;
    }
}
