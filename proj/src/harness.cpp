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

#include "tunnelloc/harness.hpp"
#include "tunnelloc/scenario_io.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tunnelloc
{
    double RunMode::blocking_probability() const
    {
        switch (kind)
        {
        case Visibility::los:
            return 0.0;
        case Visibility::nlos:
            return 1.0;
        default:
            return q;
        }
    }

    std::string RunMode::str() const
    {
        switch (kind)
        {
        case Visibility::los:
            return "L";
        case Visibility::nlos:
            return "N";
        default:
        {
            std::ostringstream os;
            os << "N@" << q;
            return os.str();
        }
        }
    }

    RunMode RunMode::parse(const std::string &text)
    {
        RunMode m;
        if (text == "L")
            return m;
        if (text == "N")
        {
            m.kind = Visibility::nlos;
            m.q = 1.0;
            return m;
        }
        if (text.size() > 2 && text.rfind("N@", 0) == 0)
        {
            std::size_t used = 0;
            double q = 0.0;
            try
            {
                q = std::stod(text.substr(2), &used);
            }
            catch (const std::exception &)
            {
                used = 0;
            }
            if (used == text.size() - 2 && q >= 0.0 && q <= 1.0)
            {
                m.kind = Visibility::partial;
                m.q = q;
                return m;
            }
        }
        throw ConfigError("mode must be L, N or N@q with 0 <= q <= 1 (got '" + text + "')");
    }

    GridSpec ScenarioConfig::grid() const
    {
        GridSpec g = GridSpec::srs(anchor.num_antennas(), scs_hz, comb, subcarrier_stride, symbols, bandwidth_hz);
        g.carrier_hz = carrier_hz;
        g.tx_power_dbm = tx_power_dbm;
        g.noise_figure_db = noise_figure_db;
        g.antenna_temp_k = antenna_temp_k;
        return g;
    }

    Scene ScenarioConfig::scene() const
    {
        Scene s;
        s.tunnel = tunnel;
        s.anchor = anchor;
        for (const Panel &p : default_panels(tunnel, walls_reflective))
        {
            if (p.kind == PanelKind::ceiling && !ceiling_reflective)
                continue;
            if (p.kind == PanelKind::rrm && !rrm)
                continue;
            s.panels.push_back(p);
        }
        return s;
    }

    void ScenarioConfig::validate() const
    {
        tunnel.validate();
        anchor.validate();
        grid().validate();
        filter.validate();
        if (seeds.empty())
            throw ConfigError("at least one seed is required");
        if (!(mode.q >= 0.0 && mode.q <= 1.0))
            throw ConfigError("mode probability must lie in [0, 1]");
        if (trajectory.samples > 0)
            gen_trajectory(trajectory, tunnel);
    }

    std::vector<std::uint64_t> ScenarioConfig::default_seeds(int n)
    {
        std::vector<std::uint64_t> s;
        for (int i = 1; i <= n; ++i)
            s.push_back(static_cast<std::uint64_t>(i));
        return s;
    }

    namespace
    {
        std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id)
        {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(id), 0x74756e6eu};
            return std::mt19937_64(seq);
        }

        std::size_t pick_array(const AnchorSpec &anchor, const Vec3 &ue_rel)
        {
            std::size_t best = 0;
            double best_dot = -std::numeric_limits<double>::infinity();
            const double n = ue_rel.norm();
            for (std::size_t i = 0; i < anchor.array_orientations.size(); ++i)
            {
                const double d = n > 0.0 ? anchor.array_pose(i).boresight().dot(ue_rel / n) : 0.0;
                if (d > best_dot)
                {
                    best_dot = d;
                    best = i;
                }
            }
            return best;
        }

        struct SeedRun
        {
            std::vector<EpochRecord> javelin, tenfiloc;
            std::vector<Vec3> err_j, err_t;
            std::string params_csv;
        };

        SeedRun run_seed(const ScenarioConfig &cfg, std::uint64_t seed, const std::vector<TrajectorySample> &traj)
        {
            SeedRun out;
            const Scene scene = cfg.scene();
            const GridSpec grid = cfg.grid();
            const std::vector<Vec3> layout = build_ura_layout(cfg.anchor);
            const Vec3 anchor_pos = cfg.anchor.position;

            auto rng_vis = stream(seed, 1);
            auto rng_clock = stream(seed, 2);
            auto rng_cam = stream(seed, 4);
            auto rng_init = stream(seed, 5);
            auto rng_noise = stream(seed, 6);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            std::normal_distribution<double> gauss(0.0, 1.0);

            RaygenOptions ro;
            ro.carrier_hz = cfg.carrier_hz;
            ro.tx_power_dbm = cfg.tx_power_dbm;
            ro.wavefront = cfg.wavefront;
            ro.include_rrm = cfg.rrm;

            JavelinInputs in;
            in.grid = grid;
            in.anchor = cfg.anchor;
            in.extract = cfg.extract;
            in.filter = cfg.filter;
            in.T = cfg.trajectory.epoch;

            if (traj.empty())
                return out;
            Vec3 p0 = traj.front().position - anchor_pos;
            p0.x() += cfg.init_position_sigma * gauss(rng_init);
            p0.y() += cfg.init_position_sigma * gauss(rng_init);
            const double sp = cfg.ue_prior_sigma > 0.0 ? cfg.ue_prior_sigma : cfg.filter.sigma_p;
            const double sp2 = sp * sp;
            TrackSet tracks = TrackSet::initial(p0, Mat3::Identity() * sp2);

            const double run_bias = draw_clock_bias(cfg.clock, rng_clock);
            const double q = cfg.mode.blocking_probability();

            for (std::size_t k = 0; k < traj.size(); ++k)
            {
                const TrajectorySample &truth = traj[k];
                if (k == 0)
                {
                    in.nu = 0.0;
                    in.theta = 0.0;
                }
                else
                {
                    in.nu = traj[k - 1].speed + cfg.filter.sigma_nu * gauss(rng_cam);
                    in.theta = traj[k - 1].heading + cfg.filter.sigma_theta * gauss(rng_cam);
                }
                const bool blocked = q >= 1.0 || (q > 0.0 && unif(rng_vis) < q);
                const double bias = cfg.clock_per_epoch ? draw_clock_bias(cfg.clock, rng_clock) : run_bias;
                const std::uint64_t noise_seed = rng_noise();

                Vec3 predicted = tracks.ue();
                predicted.x() += in.T * in.nu * std::cos(in.theta);
                predicted.y() += in.T * in.nu * std::sin(in.theta);
                in.array_index = static_cast<int>(pick_array(cfg.anchor, predicted));
                const Pose pose = cfg.anchor.array_pose(static_cast<std::size_t>(in.array_index));

                auto rng_phase = stream(seed, 3); // per-run phases
                std::vector<PathTruth> paths = trace_paths(scene, pose, layout, truth, blocked, bias, rng_phase, ro);
                if (cfg.clutter)
                {
                    const double dir = cfg.trajectory.direction;
                    const Vec3 origin(truth.position.x() + 15.0 * dir, cfg.tunnel.width - cfg.trajectory.lateral_offset,
                                      truth.position.z());
                    if (pose.global_to_local(origin).z() > 0.0 && cfg.tunnel.contains(origin))
                    {
                        const double dist = (origin - anchor_pos).norm();
                        const double amp = path_amplitude(dist, cfg.carrier_hz, cfg.tx_power_dbm, 0.0) *
                                           std::pow(10.0, cfg.clutter_amplitude_db / 20.0);
                        paths.push_back(make_clutter_path(pose, layout, origin, cfg.clutter_radial_velocity, amp, bias,
                                                          rng_phase, ro));
                    }
                }

                std::vector<PathParamEstimate> params;
                if (!paths.empty())
                {
                    const ChannelTensor h = observe(synth_channel(paths, grid), grid, noise_seed);
                    in.L = static_cast<int>(paths.size());
                    ExtractionResult ex = extract_paths(h, in.L, grid, cfg.anchor, pose, cfg.extract);
                    params = std::move(ex.paths);
                }
                if (cfg.debug_params)
                {
                    std::ostringstream os;
                    write_params_csv(os, static_cast<int>(k), in.array_index, params);
                    std::istringstream lines(os.str());
                    std::string line;
                    while (std::getline(lines, line))
                        out.params_csv += std::to_string(seed) + "," + line + "\n";
                }

                StepResult st = javelin_step_params(std::move(tracks), params, in);
                tracks = std::move(st.tracks);
                tracks.check(1e-6 * std::max(1.0, tracks.P.cwiseAbs().maxCoeff()));

                EpochRecord rj;
                rj.seed = seed;
                rj.epoch = static_cast<int>(k);
                rj.time = truth.time;
                rj.valid = true;
                rj.estimate = anchor_pos + tracks.ue();
                rj.truth = truth.position;
                rj.D = tracks.D();
                rj.los = static_cast<int>(st.diag.los);
                rj.associations = st.diag.associated;
                rj.measurements = st.diag.measurements;
                rj.true_paths = static_cast<int>(paths.size());
                rj.los_visible = !blocked;
                out.err_j.push_back(rj.estimate - rj.truth);
                out.javelin.push_back(rj);

                const SnapshotEstimate snap = tenfiloc_snapshot(params, anchor_pos, cfg.filter.los_gamma);
                EpochRecord rt = rj;
                rt.valid = snap.valid;
                rt.estimate = snap.valid ? snap.position : Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
                rt.D = 0;
                rt.los = snap.used_kappa ? 1 : 0;
                rt.associations = 0;
                if (snap.valid)
                    out.err_t.push_back(rt.estimate - rt.truth);
                out.tenfiloc.push_back(rt);
            }
            return out;
        }
    }

    RunResult run_scenario(const ScenarioConfig &cfg)
    {
        cfg.validate();
        RunResult res;
        res.seeds = cfg.seeds;
        res.javelin.name = "javelin";
        res.tenfiloc.name = "tenfiloc";
        const std::vector<TrajectorySample> traj =
            cfg.trajectory.samples > 0 ? gen_trajectory(cfg.trajectory, cfg.tunnel) : std::vector<TrajectorySample>{};

        std::vector<Vec3> all_j, all_t;
        int epochs = 0;
        for (std::uint64_t seed : cfg.seeds)
        {
            SeedRun sr = run_seed(cfg, seed, traj);
            const int n = static_cast<int>(traj.size());
            epochs += n;
            res.javelin.per_seed.push_back(compute_metrics(sr.err_j, n));
            res.tenfiloc.per_seed.push_back(compute_metrics(sr.err_t, n));
            all_j.insert(all_j.end(), sr.err_j.begin(), sr.err_j.end());
            all_t.insert(all_t.end(), sr.err_t.begin(), sr.err_t.end());
            res.javelin.epochs.insert(res.javelin.epochs.end(), sr.javelin.begin(), sr.javelin.end());
            res.tenfiloc.epochs.insert(res.tenfiloc.epochs.end(), sr.tenfiloc.begin(), sr.tenfiloc.end());
            if (!sr.params_csv.empty())
                res.param_rows.push_back(std::move(sr.params_csv));
        }
        res.javelin.metrics = compute_metrics(all_j, epochs);
        res.tenfiloc.metrics = compute_metrics(all_t, epochs);
        return res;
    }

    namespace
    {
        void write_epochs(const std::string &path, const MethodResult &m)
        {
            std::ofstream os(path);
            if (!os)
                throw std::runtime_error("cannot write " + path);
            os << std::setprecision(10);
            os << "seed,epoch,time,method,valid,est_x,est_y,est_z,true_x,true_y,true_z,err_2d,D,los,associations,measurements,true_paths,los_visible\n";
            for (const auto &r : m.epochs)
            {
                const double e2d = r.valid ? std::hypot(r.estimate.x() - r.truth.x(), r.estimate.y() - r.truth.y())
                                           : std::numeric_limits<double>::quiet_NaN();
                os << r.seed << ',' << r.epoch << ',' << r.time << ',' << m.name << ',' << (r.valid ? 1 : 0) << ','
                   << r.estimate.x() << ',' << r.estimate.y() << ',' << r.estimate.z() << ',' << r.truth.x() << ','
                   << r.truth.y() << ',' << r.truth.z() << ',' << e2d << ',' << r.D << ',' << r.los << ','
                   << r.associations << ',' << r.measurements << ',' << r.true_paths << ',' << (r.los_visible ? 1 : 0)
                   << '\n';
            }
        }

        nlohmann::json metrics_json(const MetricsReport &m)
        {
            return {{"rmse_2d", m.rmse_2d}, {"mae_2d", m.mae_2d}, {"y_mae", m.y_mae},
                    {"availability", m.availability}, {"samples", m.samples}, {"epochs", m.epochs}};
        }

        nlohmann::json method_json(const MethodResult &m, const std::vector<std::uint64_t> &seeds)
        {
            nlohmann::json j = metrics_json(m.metrics);
            nlohmann::json per = nlohmann::json::array();
            for (std::size_t i = 0; i < m.per_seed.size(); ++i)
            {
                nlohmann::json s = metrics_json(m.per_seed[i]);
                s["seed"] = seeds[i];
                per.push_back(s);
            }
            j["per_seed"] = per;
            return j;
        }
    }

    void write_results(const RunResult &res, const ScenarioConfig &cfg, const std::string &dir)
    {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        {
            std::ofstream os(fs::path(dir) / "config.yaml");
            os << dump_scenario(cfg);
        }
        write_epochs((fs::path(dir) / "javelin_epochs.csv").string(), res.javelin);
        write_epochs((fs::path(dir) / "tenfiloc_epochs.csv").string(), res.tenfiloc);
        {
            std::ofstream os(fs::path(dir) / "cdf_javelin.csv");
            write_cdf_csv(os, res.javelin.metrics);
        }
        {
            std::ofstream os(fs::path(dir) / "cdf_tenfiloc.csv");
            write_cdf_csv(os, res.tenfiloc.metrics);
        }
        {
            const GridSpec g = cfg.grid();
            nlohmann::json j;
            j["scenario"] = cfg.name;
            j["mode"] = cfg.mode.str();
            j["rrm"] = cfg.rrm;
            j["seeds"] = res.seeds;
            j["grid"] = {{"M", g.M}, {"N_f", g.N_f}, {"N_t", g.N_t}, {"delta_f_hz", g.delta_f},
                         {"T0_s", g.T_0}, {"carrier_hz", g.carrier_hz}, {"bandwidth_hz", g.bandwidth_hz}};
            j["methods"] = {{"javelin", method_json(res.javelin, res.seeds)},
                            {"tenfiloc", method_json(res.tenfiloc, res.seeds)}};
            std::ofstream os(fs::path(dir) / "metrics.json");
            os << std::setw(2) << j << '\n';
        }
        if (!res.param_rows.empty())
        {
            std::ofstream os(fs::path(dir) / "paths_debug.csv");
            os << "seed,";
            write_params_csv_header(os);
            for (const auto &chunk : res.param_rows)
                os << chunk;
        }
    }
}
