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

#ifndef TUNNELLOC_SCENARIO_IO_HPP
#define TUNNELLOC_SCENARIO_IO_HPP

#include "tunnelloc/harness.hpp"

#include <iosfwd>
#include <string>

namespace tunnelloc
{
    // YAML scenario files. Unknown keys and invalid values raise ConfigError with the
    // source location ("file:line:column: message").
    ScenarioConfig load_scenario(const std::string &path);
    ScenarioConfig parse_scenario(const std::string &text, const std::string &source_name = "<string>");
    std::string dump_scenario(const ScenarioConfig &cfg);
}

#endif
