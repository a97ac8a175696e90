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

#include "tunnelloc/bounds.hpp"
#include "tunnelloc/common.hpp"
#include "tunnelloc/harness.hpp"
#include "tunnelloc/scenario_io.hpp"

#include "acceptance_suite.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

using namespace tunnelloc;

namespace
{
    int cmd_sim_run(const std::string &config, const std::string &mode, bool no_rrm, const std::vector<std::uint64_t> &seeds,
                    const std::string &out)
    {
        ScenarioConfig cfg = load_scenario(config);
        if (!mode.empty())
            cfg.mode = RunMode::parse(mode);
        if (no_rrm)
            cfg.rrm = false;
        if (!seeds.empty())
            cfg.seeds = seeds;
        cfg.validate();
        const RunResult res = run_scenario(cfg);
        write_results(res, cfg, out);
        std::cout << std::fixed << std::setprecision(3);
        std::cout << "scenario " << cfg.name << " mode " << cfg.mode.str() << " rrm " << (cfg.rrm ? "on" : "off")
                  << " seeds " << cfg.seeds.size() << "\n";
        for (const MethodResult *m : {&res.javelin, &res.tenfiloc})
            std::cout << std::left << std::setw(10) << m->name << " rmse_2d " << m->metrics.rmse_2d << " m  mae_2d "
                      << m->metrics.mae_2d << " m  y_mae " << m->metrics.y_mae << " m  availability "
                      << m->metrics.availability << "\n";
        std::cout << "results written to " << out << "\n";
        return 0;
    }

    int cmd_bounds_sweep(const std::vector<double> &R, const std::vector<double> &W, const std::vector<double> &yu,
                         const std::vector<double> &eps, double carrier, double z_u)
    {
        std::cout << "R,W,y_u,eps_phase,lambda,M_max_2d,M_max_3d,exact_error_at_Mmax\n";
        std::cout << std::setprecision(10);
        for (double r : R)
            for (double w : W)
                for (double y : yu)
                    for (double e : eps)
                    {
                        BoundInputs in;
                        in.R = r;
                        in.W = w;
                        in.y_u = y;
                        in.z_u = z_u;
                        in.eps_phase = e;
                        in.lambda = speed_of_light / carrier;
                        in.spacing = 0.5 * in.lambda;
                        in.validate();
                        const BoundSweepRow row = bound_sweep_row(in);
                        std::cout << r << ',' << w << ',' << y << ',' << e << ',' << in.lambda << ',' << row.mmax_2d << ','
                                  << row.mmax_3d << ',' << row.exact_error_at_mmax << '\n';
                    }
        return 0;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"tunnelloc: single-anchor near-field vehicular localization in tunnels"};
    app.require_subcommand(1);

    auto *sim = app.add_subcommand("sim", "Monte Carlo simulation");
    sim->require_subcommand(1);
    auto *run = sim->add_subcommand("run", "run a scenario file");
    std::string config, mode, out = "results";
    bool no_rrm = false;
    std::vector<std::uint64_t> seeds;
    run->add_option("--config", config, "scenario YAML file")->required();
    run->add_option("--mode", mode, "visibility mode: L, N@q or N");
    run->add_flag("--no-rrm", no_rrm, "remove the road reflective markers");
    run->add_option("--seeds", seeds, "comma separated seed list")->delimiter(',');
    run->add_option("--out", out, "output directory");

    auto *bounds = app.add_subcommand("bounds", "array size bounds");
    bounds->require_subcommand(1);
    auto *sweep = bounds->add_subcommand("sweep", "tabulate M_max over parameter lists (cartesian product)");
    std::vector<double> R{3.5}, W{3.0}, yu{2.5}, eps{0.15};
    double carrier = 5.9e9, z_u = 0.0;
    sweep->add_option("--R", R, "UE range along the tunnel, m")->delimiter(',');
    sweep->add_option("--W", W, "reflector offset, m")->delimiter(',');
    sweep->add_option("--yu", yu, "UE lateral offset, m")->delimiter(',');
    sweep->add_option("--eps", eps, "phase tolerance, rad")->delimiter(',');
    sweep->add_option("--carrier", carrier, "carrier frequency, Hz");
    sweep->add_option("--zu", z_u, "UE height offset, m");

    auto *selftest = app.add_subcommand("selftest", "run the acceptance suite");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try
    {
        if (run->parsed())
            return cmd_sim_run(config, mode, no_rrm, seeds, out);
        if (sweep->parsed())
            return cmd_bounds_sweep(R, W, yu, eps, carrier, z_u);
        if (selftest->parsed())
            return tunnelloc::acceptance::run_acceptance_suite(std::cout) == 0 ? 0 : 1;
    }
    catch (const ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const NumericalError &e)
    {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    catch (const std::invalid_argument &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::domain_error &e)
    {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
