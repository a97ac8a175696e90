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

#include "tunnelloc/scenario_io.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace tunnelloc
{
    namespace
    {
        class Reader
        {
        public:
            explicit Reader(std::string source) : source_(std::move(source)) {}

            [[noreturn]] void fail(const YAML::Mark &mark, const std::string &msg) const
            {
                std::ostringstream os;
                os << source_;
                if (!mark.is_null())
                    os << ':' << mark.line + 1 << ':' << mark.column + 1;
                os << ": " << msg;
                throw ConfigError(os.str());
            }

            void expect_map(const YAML::Node &n, const std::string &what) const
            {
                if (!n.IsMap())
                    fail(n.Mark(), what + " must be a mapping");
            }

            void allow(const YAML::Node &map, const std::string &section, std::initializer_list<const char *> keys) const
            {
                std::set<std::string> ok(keys.begin(), keys.end());
                for (auto it = map.begin(); it != map.end(); ++it)
                {
                    const std::string k = it->first.as<std::string>();
                    if (!ok.count(k))
                        fail(it->first.Mark(), "unknown key '" + k + "' in " + section);
                }
            }

            template <typename T>
            bool get(const YAML::Node &map, const char *key, T &out) const
            {
                const YAML::Node n = map[key];
                if (!n)
                    return false;
                try
                {
                    out = n.as<T>();
                }
                catch (const YAML::Exception &)
                {
                    fail(n.Mark(), std::string("invalid value for '") + key + "'");
                }
                return true;
            }

            template <typename T, typename Pred>
            bool get_checked(const YAML::Node &map, const char *key, T &out, Pred ok, const char *requirement) const
            {
                T tmp = out;
                if (!get(map, key, tmp))
                    return false;
                if (!ok(tmp))
                    fail(map[key].Mark(), std::string("'") + key + "' " + requirement);
                out = tmp;
                return true;
            }

        private:
            std::string source_;
        };

        auto positive = [](double v) { return v > 0.0; };
        auto non_negative = [](double v) { return v >= 0.0; };
        auto positive_int = [](int v) { return v > 0; };

        Vec3 as_vec3(const Reader &r, const YAML::Node &n, const char *what)
        {
            if (!n.IsSequence() || n.size() != 3)
                r.fail(n.Mark(), std::string(what) + " must be a 3-element list");
            Vec3 v;
            for (std::size_t i = 0; i < 3; ++i)
            {
                try
                {
                    v(static_cast<Eigen::Index>(i)) = n[i].as<double>();
                }
                catch (const YAML::Exception &)
                {
                    r.fail(n[i].Mark(), std::string(what) + " entries must be numbers");
                }
            }
            return v;
        }

        void read_tunnel(const Reader &r, const YAML::Node &n, ScenarioConfig &c)
        {
            r.expect_map(n, "tunnel");
            r.allow(n, "tunnel", {"length", "width", "height"});
            r.get_checked(n, "length", c.tunnel.length, positive, "must be positive");
            r.get_checked(n, "width", c.tunnel.width, positive, "must be positive");
            r.get_checked(n, "height", c.tunnel.height, positive, "must be positive");
        }

        void read_anchor(const Reader &r, const YAML::Node &n, ScenarioConfig &c)
        {
            r.expect_map(n, "anchor");
            r.allow(n, "anchor", {"position", "rows", "cols", "spacing", "arrays"});
            if (n["position"])
                c.anchor.position = as_vec3(r, n["position"], "anchor.position");
            r.get_checked(n, "rows", c.anchor.rows, positive_int, "must be >= 1");
            r.get_checked(n, "cols", c.anchor.cols, positive_int, "must be >= 1");
            r.get_checked(n, "spacing", c.anchor.spacing, positive, "must be positive");
            if (const YAML::Node a = n["arrays"])
            {
                if (!a.IsSequence() || a.size() == 0)
                    r.fail(a.Mark(), "anchor.arrays must be a non-empty list of [azimuth, elevation]");
                c.anchor.array_orientations.clear();
                for (const auto &e : a)
                {
                    if (!e.IsSequence() || e.size() != 2)
                        r.fail(e.Mark(), "each array orientation must be [azimuth_deg, elevation_deg]");
                    try
                    {
                        c.anchor.array_orientations.push_back({e[0].as<double>(), e[1].as<double>()});
                    }
                    catch (const YAML::Exception &)
                    {
                        r.fail(e.Mark(), "array orientation entries must be numbers");
                    }
                }
            }
        }

        void read_trajectory(const Reader &r, const YAML::Node &n, ScenarioConfig &c)
        {
            r.expect_map(n, "trajectory");
            r.allow(n, "trajectory", {"kind", "start_x", "direction", "lateral_offset", "height", "amplitude", "period", "speed", "epoch", "samples"});
            auto &t = c.trajectory;
            std::string kind;
            if (r.get(n, "kind", kind))
            {
                if (kind == "straight")
                    t.kind = TrajectoryKind::straight;
                else if (kind == "slalom")
                    t.kind = TrajectoryKind::slalom;
                else
                    r.fail(n["kind"].Mark(), "trajectory.kind must be 'straight' or 'slalom'");
            }
            r.get(n, "start_x", t.start_x);
            r.get_checked(n, "direction", t.direction, [](double v) { return v == 1.0 || v == -1.0; }, "must be +1 or -1");
            r.get(n, "lateral_offset", t.lateral_offset);
            r.get(n, "height", t.height);
            r.get_checked(n, "amplitude", t.amplitude, non_negative, "must be >= 0");
            r.get_checked(n, "period", t.period, positive, "must be positive");
            r.get_checked(n, "speed", t.speed, non_negative, "must be >= 0");
            r.get_checked(n, "epoch", t.epoch, positive, "must be positive");
            r.get_checked(n, "samples", t.samples, [](int v) { return v >= 0; }, "must be >= 0");
        }

        void read_radio(const Reader &r, const YAML::Node &n, ScenarioConfig &c)
        {
            r.expect_map(n, "radio");
            r.allow(n, "radio", {"carrier_hz", "bandwidth_hz", "scs_hz", "comb", "subcarrier_stride", "symbols", "tx_power_dbm", "noise_figure_db", "antenna_temp_k"});
            r.get_checked(n, "carrier_hz", c.carrier_hz, positive, "must be positive");
            r.get_checked(n, "bandwidth_hz", c.bandwidth_hz, positive, "must be positive");
            r.get_checked(n, "scs_hz", c.scs_hz, positive, "must be positive");
            r.get_checked(n, "comb", c.comb, positive_int, "must be >= 1");
            r.get_checked(n, "subcarrier_stride", c.subcarrier_stride, positive_int, "must be >= 1");
            r.get_checked(n, "symbols", c.symbols, [](int v) { return v >= 2; }, "must be >= 2");
            r.get(n, "tx_power_dbm", c.tx_power_dbm);
            r.get_checked(n, "noise_figure_db", c.noise_figure_db, non_negative, "must be >= 0");
            r.get_checked(n, "antenna_temp_k", c.antenna_temp_k, non_negative, "must be >= 0");
        }

        void read_clock(const Reader &r, const YAML::Node &n, ScenarioConfig &c)
        {
            r.expect_map(n, "clock");
            r.allow(n, "clock", {"sigma_ns", "support_ns", "per_epoch"});
            double s = c.clock.sigma * 1e9, sup = c.clock.support * 1e9;
            r.get_checked(n, "sigma_ns", s, non_negative, "must be >= 0");
            r.get_checked(n, "support_ns", sup, positive, "must be positive");
            c.clock.sigma = s * 1e-9;
            c.clock.support = sup * 1e-9;
            r.get(n, "per_epoch", c.clock_per_epoch);
        }

        void read_estimator(const Reader &r, const YAML::Node &n, ScenarioConfig &c)
        {
            r.expect_map(n, "estimator");
            r.allow(n, "estimator", {"max_iterations", "tolerance", "restarts", "refine_iterations", "seed", "window_min_fraction", "demote_unreliable_unwrap", "wavefront"});
            auto &e = c.extract;
            r.get_checked(n, "max_iterations", e.cpd.max_iterations, positive_int, "must be >= 1");
            r.get_checked(n, "tolerance", e.cpd.tolerance, positive, "must be positive");
            r.get_checked(n, "restarts", e.cpd.restarts, positive_int, "must be >= 1");
            r.get_checked(n, "refine_iterations", e.cpd.refine_iterations, [](int v) { return v >= 0; }, "must be >= 0");
            r.get(n, "seed", e.cpd.seed);
            r.get_checked(n, "window_min_fraction", e.window_min_fraction, [](double v) { return v <= 0.0 && v > -1.0; }, "must lie in (-1, 0]");
            r.get(n, "demote_unreliable_unwrap", e.demote_unreliable_unwrap);
            std::string wf;
            if (r.get(n, "wavefront", wf))
            {
                if (wf == "exact")
                    c.wavefront = WavefrontModel::exact;
                else if (wf == "single_reflector")
                    c.wavefront = WavefrontModel::single_reflector;
                else
                    r.fail(n["wavefront"].Mark(), "estimator.wavefront must be 'exact' or 'single_reflector'");
            }
        }

        void read_filter(const Reader &r, const YAML::Node &n, ScenarioConfig &c)
        {
            r.expect_map(n, "filter");
            r.allow(n, "filter", {"gate_probability", "max_misses", "los_gamma", "reid_gate_probability", "sigma_phi_deg", "sigma_psi_deg", "sigma_kappa", "kappa_ref_range", "sigma_dd", "sigma_nu", "sigma_theta_deg", "sigma_p", "sigma_rw", "z_floor", "doppler_tol", "reflected_range", "init_position_sigma", "ue_prior_sigma", "birth_min_ux", "kappa_outlier_fallback", "likelihood_cost"});
            auto &f = c.filter;
            r.get_checked(n, "gate_probability", f.gate_probability, [](double v) { return v > 0.0 && v < 1.0; }, "must lie in (0, 1)");
            r.get_checked(n, "max_misses", f.max_misses, [](int v) { return v >= 0; }, "must be >= 0");
            r.get_checked(n, "los_gamma", f.los_gamma, [](double v) { return v > 0.0 && v <= 1.0; }, "must lie in (0, 1]");
            r.get_checked(n, "reid_gate_probability", f.reid_gate_probability, [](double v) { return v < 1.0; }, "must be below 1");
            double phi = rad2deg(f.sigma_phi), psi = rad2deg(f.sigma_psi), th = rad2deg(f.sigma_theta);
            r.get_checked(n, "sigma_phi_deg", phi, positive, "must be positive");
            r.get_checked(n, "sigma_psi_deg", psi, positive, "must be positive");
            r.get_checked(n, "sigma_theta_deg", th, non_negative, "must be >= 0");
            f.sigma_phi = deg2rad(phi);
            f.sigma_psi = deg2rad(psi);
            f.sigma_theta = deg2rad(th);
            r.get_checked(n, "sigma_kappa", f.sigma_kappa, positive, "must be positive");
            r.get_checked(n, "kappa_ref_range", f.kappa_ref_range, non_negative, "must be >= 0");
            r.get_checked(n, "sigma_dd", f.sigma_dd, positive, "must be positive");
            r.get_checked(n, "sigma_nu", f.sigma_nu, non_negative, "must be >= 0");
            r.get_checked(n, "sigma_p", f.sigma_p, positive, "must be positive");
            r.get_checked(n, "sigma_rw", f.sigma_rw, non_negative, "must be >= 0");
            r.get_checked(n, "z_floor", f.z_floor, non_negative, "must be >= 0");
            r.get_checked(n, "doppler_tol", f.doppler_tol, non_negative, "must be >= 0");
            r.get_checked(n, "birth_min_ux", f.birth_min_ux, [](double v) { return v >= 0.0 && v <= 1.0; }, "must lie in [0, 1]");
            r.get_checked(n, "init_position_sigma", c.init_position_sigma, non_negative, "must be >= 0");
            r.get_checked(n, "ue_prior_sigma", c.ue_prior_sigma, non_negative, "must be >= 0");
            r.get(n, "kappa_outlier_fallback", f.kappa_outlier_fallback);
            r.get(n, "likelihood_cost", f.likelihood_cost);
            std::string rr;
            if (r.get(n, "reflected_range", rr))
            {
                if (rr == "reflector")
                    f.model.reflected_range = ReflectedRange::reflector;
                else if (rr == "virtual_ue")
                    f.model.reflected_range = ReflectedRange::virtual_ue;
                else
                    r.fail(n["reflected_range"].Mark(), "filter.reflected_range must be 'reflector' or 'virtual_ue'");
            }
        }

        void read_run(const Reader &r, const YAML::Node &n, ScenarioConfig &c)
        {
            r.expect_map(n, "run");
            r.allow(n, "run", {"mode", "rrm", "seeds", "seed_count", "debug_params"});
            std::string mode;
            if (r.get(n, "mode", mode))
            {
                try
                {
                    c.mode = RunMode::parse(mode);
                }
                catch (const ConfigError &e)
                {
                    r.fail(n["mode"].Mark(), e.what());
                }
            }
            r.get(n, "rrm", c.rrm);
            r.get(n, "debug_params", c.debug_params);
            if (n["seeds"] && n["seed_count"])
                r.fail(n["seed_count"].Mark(), "give either 'seeds' or 'seed_count', not both");
            if (n["seeds"])
            {
                r.get(n, "seeds", c.seeds);
                if (c.seeds.empty())
                    r.fail(n["seeds"].Mark(), "'seeds' must not be empty");
            }
            int count = 0;
            if (r.get_checked(n, "seed_count", count, positive_int, "must be >= 1"))
                c.seeds = ScenarioConfig::default_seeds(count);
        }

        void read_reflectors(const Reader &r, const YAML::Node &n, ScenarioConfig &c)
        {
            r.expect_map(n, "reflectors");
            r.allow(n, "reflectors", {"walls", "ceiling"});
            r.get(n, "walls", c.walls_reflective);
            r.get(n, "ceiling", c.ceiling_reflective);
        }

        void read_clutter(const Reader &r, const YAML::Node &n, ScenarioConfig &c)
        {
            r.expect_map(n, "clutter");
            r.allow(n, "clutter", {"enabled", "radial_velocity", "amplitude_db"});
            r.get(n, "enabled", c.clutter);
            r.get(n, "radial_velocity", c.clutter_radial_velocity);
            r.get(n, "amplitude_db", c.clutter_amplitude_db);
        }
    }

    ScenarioConfig parse_scenario(const std::string &text, const std::string &source_name)
    {
        const Reader r(source_name);
        YAML::Node root;
        try
        {
            root = YAML::Load(text);
        }
        catch (const YAML::ParserException &e)
        {
            r.fail(e.mark, e.msg);
        }
        ScenarioConfig c;
        c.seeds = ScenarioConfig::default_seeds();
        if (root.IsNull())
            return c;
        r.expect_map(root, "scenario root");
        r.allow(root, "scenario root", {"name", "tunnel", "anchor", "reflectors", "trajectory", "radio", "clock", "estimator", "filter", "clutter", "run"});
        r.get(root, "name", c.name);
        if (root["tunnel"])
            read_tunnel(r, root["tunnel"], c);
        if (root["anchor"])
            read_anchor(r, root["anchor"], c);
        if (root["reflectors"])
            read_reflectors(r, root["reflectors"], c);
        if (root["trajectory"])
            read_trajectory(r, root["trajectory"], c);
        if (root["radio"])
            read_radio(r, root["radio"], c);
        if (root["clock"])
            read_clock(r, root["clock"], c);
        if (root["estimator"])
            read_estimator(r, root["estimator"], c);
        if (root["filter"])
            read_filter(r, root["filter"], c);
        if (root["clutter"])
            read_clutter(r, root["clutter"], c);
        if (root["run"])
            read_run(r, root["run"], c);
        try
        {
            c.validate();
        }
        catch (const ConfigError &e)
        {
            throw ConfigError(source_name + ": " + e.what());
        }
        return c;
    }

    ScenarioConfig load_scenario(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError(path + ": cannot open scenario file");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_scenario(ss.str(), path);
    }

    std::string dump_scenario(const ScenarioConfig &c)
    {
        YAML::Emitter e;
        e.SetDoublePrecision(12);
        e << YAML::BeginMap;
        e << YAML::Key << "name" << YAML::Value << c.name;

        e << YAML::Key << "tunnel" << YAML::Value << YAML::BeginMap
          << YAML::Key << "length" << YAML::Value << c.tunnel.length
          << YAML::Key << "width" << YAML::Value << c.tunnel.width
          << YAML::Key << "height" << YAML::Value << c.tunnel.height << YAML::EndMap;

        e << YAML::Key << "anchor" << YAML::Value << YAML::BeginMap;
        e << YAML::Key << "position" << YAML::Value << YAML::Flow << YAML::BeginSeq
          << c.anchor.position.x() << c.anchor.position.y() << c.anchor.position.z() << YAML::EndSeq;
        e << YAML::Key << "rows" << YAML::Value << c.anchor.rows;
        e << YAML::Key << "cols" << YAML::Value << c.anchor.cols;
        e << YAML::Key << "spacing" << YAML::Value << c.anchor.spacing;
        e << YAML::Key << "arrays" << YAML::Value << YAML::BeginSeq;
        for (const auto &o : c.anchor.array_orientations)
            e << YAML::Flow << YAML::BeginSeq << o.azimuth_deg << o.elevation_deg << YAML::EndSeq;
        e << YAML::EndSeq << YAML::EndMap;

        e << YAML::Key << "reflectors" << YAML::Value << YAML::BeginMap
          << YAML::Key << "walls" << YAML::Value << c.walls_reflective
          << YAML::Key << "ceiling" << YAML::Value << c.ceiling_reflective << YAML::EndMap;

        const auto &t = c.trajectory;
        e << YAML::Key << "trajectory" << YAML::Value << YAML::BeginMap
          << YAML::Key << "kind" << YAML::Value << (t.kind == TrajectoryKind::straight ? "straight" : "slalom")
          << YAML::Key << "start_x" << YAML::Value << t.start_x
          << YAML::Key << "direction" << YAML::Value << t.direction
          << YAML::Key << "lateral_offset" << YAML::Value << t.lateral_offset
          << YAML::Key << "height" << YAML::Value << t.height
          << YAML::Key << "amplitude" << YAML::Value << t.amplitude
          << YAML::Key << "period" << YAML::Value << t.period
          << YAML::Key << "speed" << YAML::Value << t.speed
          << YAML::Key << "epoch" << YAML::Value << t.epoch
          << YAML::Key << "samples" << YAML::Value << t.samples << YAML::EndMap;

        const GridSpec g = c.grid();
        e << YAML::Key << "radio" << YAML::Value << YAML::BeginMap
          << YAML::Key << "carrier_hz" << YAML::Value << c.carrier_hz
          << YAML::Key << "bandwidth_hz" << YAML::Value << c.bandwidth_hz
          << YAML::Key << "scs_hz" << YAML::Value << c.scs_hz
          << YAML::Key << "comb" << YAML::Value << c.comb
          << YAML::Key << "subcarrier_stride" << YAML::Value << c.subcarrier_stride
          << YAML::Key << "symbols" << YAML::Value << c.symbols
          << YAML::Key << "tx_power_dbm" << YAML::Value << c.tx_power_dbm
          << YAML::Key << "noise_figure_db" << YAML::Value << c.noise_figure_db
          << YAML::Key << "antenna_temp_k" << YAML::Value << c.antenna_temp_k << YAML::EndMap;
        e << YAML::Comment("effective grid: N_f = " + std::to_string(g.N_f) + ", delta_f = " +
                           std::to_string(g.delta_f) + " Hz, N_t = " + std::to_string(g.N_t));

        e << YAML::Key << "clock" << YAML::Value << YAML::BeginMap
          << YAML::Key << "sigma_ns" << YAML::Value << c.clock.sigma * 1e9
          << YAML::Key << "support_ns" << YAML::Value << c.clock.support * 1e9
          << YAML::Key << "per_epoch" << YAML::Value << c.clock_per_epoch << YAML::EndMap;

        const auto &x = c.extract;
        e << YAML::Key << "estimator" << YAML::Value << YAML::BeginMap
          << YAML::Key << "max_iterations" << YAML::Value << x.cpd.max_iterations
          << YAML::Key << "tolerance" << YAML::Value << x.cpd.tolerance
          << YAML::Key << "restarts" << YAML::Value << x.cpd.restarts
          << YAML::Key << "refine_iterations" << YAML::Value << x.cpd.refine_iterations
          << YAML::Key << "seed" << YAML::Value << x.cpd.seed
          << YAML::Key << "window_min_fraction" << YAML::Value << x.window_min_fraction
          << YAML::Key << "demote_unreliable_unwrap" << YAML::Value << x.demote_unreliable_unwrap
          << YAML::Key << "wavefront" << YAML::Value << (c.wavefront == WavefrontModel::exact ? "exact" : "single_reflector")
          << YAML::EndMap;

        const auto &f = c.filter;
        e << YAML::Key << "filter" << YAML::Value << YAML::BeginMap
          << YAML::Key << "gate_probability" << YAML::Value << f.gate_probability
          << YAML::Key << "max_misses" << YAML::Value << f.max_misses
          << YAML::Key << "los_gamma" << YAML::Value << f.los_gamma
          << YAML::Key << "reid_gate_probability" << YAML::Value << f.reid_gate_probability
          << YAML::Key << "sigma_phi_deg" << YAML::Value << rad2deg(f.sigma_phi)
          << YAML::Key << "sigma_psi_deg" << YAML::Value << rad2deg(f.sigma_psi)
          << YAML::Key << "sigma_kappa" << YAML::Value << f.sigma_kappa
          << YAML::Key << "kappa_ref_range" << YAML::Value << f.kappa_ref_range
          << YAML::Key << "sigma_dd" << YAML::Value << f.sigma_dd
          << YAML::Key << "sigma_nu" << YAML::Value << f.sigma_nu
          << YAML::Key << "sigma_theta_deg" << YAML::Value << rad2deg(f.sigma_theta)
          << YAML::Key << "sigma_p" << YAML::Value << f.sigma_p
          << YAML::Key << "sigma_rw" << YAML::Value << f.sigma_rw
          << YAML::Key << "z_floor" << YAML::Value << f.z_floor
          << YAML::Key << "doppler_tol" << YAML::Value << f.doppler_tol
          << YAML::Key << "birth_min_ux" << YAML::Value << f.birth_min_ux
          << YAML::Key << "kappa_outlier_fallback" << YAML::Value << f.kappa_outlier_fallback
          << YAML::Key << "likelihood_cost" << YAML::Value << f.likelihood_cost
          << YAML::Key << "reflected_range" << YAML::Value << (f.model.reflected_range == ReflectedRange::reflector ? "reflector" : "virtual_ue")
          << YAML::Key << "init_position_sigma" << YAML::Value << c.init_position_sigma
          << YAML::Key << "ue_prior_sigma" << YAML::Value << c.ue_prior_sigma << YAML::EndMap;

        e << YAML::Key << "clutter" << YAML::Value << YAML::BeginMap
          << YAML::Key << "enabled" << YAML::Value << c.clutter
          << YAML::Key << "radial_velocity" << YAML::Value << c.clutter_radial_velocity
          << YAML::Key << "amplitude_db" << YAML::Value << c.clutter_amplitude_db << YAML::EndMap;

        e << YAML::Key << "run" << YAML::Value << YAML::BeginMap
          << YAML::Key << "mode" << YAML::Value << c.mode.str()
          << YAML::Key << "rrm" << YAML::Value << c.rrm;
        if (c.seeds.empty())
            e << YAML::Key << "seed_count" << YAML::Value << ScenarioConfig::default_seeds().size();
        else
            e << YAML::Key << "seeds" << YAML::Value << YAML::Flow << c.seeds;
        e << YAML::Key << "debug_params" << YAML::Value << c.debug_params << YAML::EndMap;

        e << YAML::EndMap;
        return std::string(e.c_str()) + "\n";
    }
}
