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

#include "tunnelloc/track.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace tunnelloc
{
    void FilterConfig::validate() const
    {
        if (!(gate_probability > 0.0 && gate_probability < 1.0))
            throw ConfigError("filter: gate probability must lie in (0, 1)");
        if (max_misses < 0)
            throw ConfigError("filter: max_misses must be >= 0");
        if (!(los_gamma > 0.0 && los_gamma <= 1.0))
            throw ConfigError("filter: los_gamma must lie in (0, 1]");
        if (!(reid_gate_probability < 1.0))
            throw ConfigError("filter: reid_gate_probability must be below 1");
        for (double v : {sigma_phi, sigma_psi, sigma_kappa, sigma_dd, sigma_p})
            if (!(v > 0.0))
                throw ConfigError("filter: measurement and initial sigmas must be positive");
        for (double v : {sigma_nu, sigma_theta, sigma_rw, z_floor, doppler_tol, kappa_ref_range})
            if (!(v >= 0.0))
                throw ConfigError("filter: process sigmas and tolerances must be non-negative");
    }

    TrackSet TrackSet::initial(const Vec3 &p_u, const Mat3 &P_u)
    {
        TrackSet t;
        t.s = p_u;
        t.P = P_u;
        t.miss_count = {0};
        t.ids = {0};
        return t;
    }

    int TrackSet::add_vue(double y, double z, double variance)
    {
        const Eigen::Index D = s.size();
        s.conservativeResize(D + 2);
        s(D) = y;
        s(D + 1) = z;
        Eigen::MatrixXd Pn = Eigen::MatrixXd::Zero(D + 2, D + 2);
        Pn.topLeftCorner(D, D) = P;
        Pn(D, D) = variance;
        Pn(D + 1, D + 1) = variance;
        P = std::move(Pn);
        miss_count.push_back(0);
        ids.push_back(next_id++);
        return L() - 1;
    }

    void TrackSet::remove_track(int i)
    {
        if (i <= 0 || i >= L())
            throw std::out_of_range("remove_track: only VUE tracks can be removed");
        const Eigen::Index D = s.size();
        std::vector<Eigen::Index> keep;
        keep.reserve(static_cast<std::size_t>(D - 2));
        for (Eigen::Index k = 0; k < D; ++k)
            if (k != 2 * i + 1 && k != 2 * i + 2)
                keep.push_back(k);
        const Eigen::Index n = static_cast<Eigen::Index>(keep.size());
        Eigen::VectorXd s2(n);
        Eigen::MatrixXd P2(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
        {
            s2(a) = s(keep[static_cast<std::size_t>(a)]);
            for (Eigen::Index b = 0; b < n; ++b)
                P2(a, b) = P(keep[static_cast<std::size_t>(a)], keep[static_cast<std::size_t>(b)]);
        }
        s = std::move(s2);
        P = std::move(P2);
        miss_count.erase(miss_count.begin() + i);
        ids.erase(ids.begin() + i);
    }

    void TrackSet::check(double psd_tol) const
    {
        if (ids.empty() || ids[0] != 0)
            throw NumericalError("track set: UE track missing");
        if (s.size() != 2 * L() + 1 || P.rows() != s.size() || P.cols() != s.size() ||
            miss_count.size() != ids.size())
            throw NumericalError("track set: dimension mismatch");
        if (!s.allFinite() || !P.allFinite())
            throw NumericalError("track set: non-finite state or covariance");
        if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, P.cwiseAbs().maxCoeff()))
            throw NumericalError("track set: covariance not symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -psd_tol)
            throw NumericalError("track set: covariance not positive semidefinite");
    }

    std::vector<std::pair<int, int>> greedy_assign(const Eigen::MatrixXd &cost)
    {
        struct Cand
        {
            double c;
            int i, j;
        };
        std::vector<Cand> cands;
        for (int i = 0; i < cost.rows(); ++i)
            for (int j = 0; j < cost.cols(); ++j)
                if (std::isfinite(cost(i, j)))
                    cands.push_back({cost(i, j), i, j});
        std::stable_sort(cands.begin(), cands.end(), [](const Cand &a, const Cand &b) { return a.c < b.c; });
        std::vector<bool> used_i(static_cast<std::size_t>(cost.rows()), false), used_j(static_cast<std::size_t>(cost.cols()), false);
        std::vector<std::pair<int, int>> out;
        for (const Cand &c : cands)
        {
            if (used_i[static_cast<std::size_t>(c.i)] || used_j[static_cast<std::size_t>(c.j)])
                continue;
            used_i[static_cast<std::size_t>(c.i)] = true;
            used_j[static_cast<std::size_t>(c.j)] = true;
            out.emplace_back(c.i, c.j);
        }
        return out;
    }

    Eigen::MatrixXd path_noise(const MeasuredPath &m, const FilterConfig &cfg, double range)
    {
        Eigen::VectorXd d(m.rows());
        d(0) = cfg.sigma_phi * cfg.sigma_phi;
        d(1) = cfg.sigma_psi * cfg.sigma_psi;
        if (m.has_kappa)
        {
            double sk = cfg.sigma_kappa;
            if (cfg.kappa_ref_range > 0.0 && range > cfg.kappa_ref_range)
                sk *= (range / cfg.kappa_ref_range) * (range / cfg.kappa_ref_range);
            d(2) = sk * sk;
        }
        return d.asDiagonal();
    }

    namespace
    {
        Eigen::VectorXd path_vector(const MeasuredPath &m)
        {
            Eigen::VectorXd z(m.rows());
            z(0) = m.phi;
            z(1) = m.psi;
            if (m.has_kappa)
                z(2) = m.kappa;
            return z;
        }
    }

    AssocResult associate(const TrackSet &tracks, const MeasurementVector &z, const FilterConfig &cfg)
    {
        AssocResult out;
        const int nt = tracks.L();
        const int nm = static_cast<int>(z.paths.size());
        Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(nt, nm, std::numeric_limits<double>::infinity());
        const double gate3 = chi2_gate(3, cfg.gate_probability);
        const double gate2 = chi2_gate(2, cfg.gate_probability);

        Eigen::MatrixXd eta = cost;
        Eigen::MatrixXi dof = Eigen::MatrixXi::Zero(nt, nm);
        for (int i = 0; i < nt; ++i)
        {
            const TrackPrediction tp = predict_track(tracks.s, i, cfg.model);
            const Eigen::MatrixXd J = track_jacobian(tracks.s, i, cfg.model);
            for (int j = 0; j < nm; ++j)
            {
                const MeasuredPath &m = z.paths[static_cast<std::size_t>(j)];
                const Eigen::VectorXd zfull = path_vector(m);
                const Eigen::MatrixXd Rfull = path_noise(m, cfg, tp.h(2));
                for (int r = m.rows(); r >= 2; --r)
                {
                    Eigen::VectorXd y = zfull.head(r) - tp.h.head(r);
                    y(0) = wrap_angle(y(0));
                    const Eigen::MatrixXd H = J.topRows(r);
                    const Eigen::MatrixXd S = H * tracks.P * H.transpose() + Rfull.topLeftCorner(r, r);
                    Eigen::LLT<Eigen::MatrixXd> llt(S);
                    if (llt.info() != Eigen::Success)
                    {
                        ++out.singular_skipped;
                        break;
                    }
                    const double eta2 = y.dot(llt.solve(y));
                    if (eta2 < (r == 3 ? gate3 : gate2))
                    {
                        eta(i, j) = eta2;
                        cost(i, j) = eta2;
                        if (cfg.likelihood_cost)
                            cost(i, j) += std::log(S.topLeftCorner(2, 2).determinant());
                        dof(i, j) = r;
                        break;
                    }
                    // curvature outlier: retry on the angles alone
                    if (!cfg.kappa_outlier_fallback)
                        break;
                }
            }
        }

        std::vector<bool> ti(static_cast<std::size_t>(nt), false), mj(static_cast<std::size_t>(nm), false);
        for (auto [i, j] : greedy_assign(cost))
        {
            out.pairs.push_back({i, j, eta(i, j), dof(i, j)});
            ti[static_cast<std::size_t>(i)] = true;
            mj[static_cast<std::size_t>(j)] = true;
        }
        for (int i = 0; i < nt; ++i)
            if (!ti[static_cast<std::size_t>(i)])
                out.unassociated_tracks.push_back(i);
        for (int j = 0; j < nm; ++j)
            if (!mj[static_cast<std::size_t>(j)])
                out.unassociated_measurements.push_back(j);
        return out;
    }

    std::optional<int> identify_los(const std::vector<double> &d, const std::vector<double> &kappa, double gamma,
                                    const std::vector<bool> &candidate)
    {
        std::optional<int> best;
        double best_gap = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < d.size() && l < kappa.size(); ++l)
        {
            if (!candidate.empty() && !candidate[l])
                continue;
            const double k = kappa[l];
            if (!std::isfinite(k) || !(k > 0.0) || !std::isfinite(d[l]))
                continue;
            const double ratio = d[l] / k;
            if (ratio < 1.0 - gamma || ratio > 1.0 + gamma)
                continue;
            const double gap = std::abs(d[l] - k);
            if (gap < best_gap)
            {
                best_gap = gap;
                best = static_cast<int>(l);
            }
        }
        return best;
    }

    double predicted_static_radial_velocity(const Vec3 &p_u, const Vec3 &origin, const Vec3 &ego_velocity)
    {
        const double on = origin.norm();
        if (on <= 0.0)
            return 0.0;
        Vec3 v = ego_velocity;
        const Vec3 m(0.0, origin.y() - p_u.y(), origin.z() - p_u.z());
        const double mn = m.norm();
        if (mn > 1e-9 * std::max(1.0, on))
        {
            const Vec3 n = m / mn;
            v = ego_velocity - 2.0 * n.dot(ego_velocity) * n;
        }
        return -origin.dot(v) / on;
    }

    namespace
    {
        Vec3 global_direction(double phi, double psi)
        {
            return {std::cos(psi) * std::cos(phi), std::cos(psi) * std::sin(phi), std::sin(psi)};
        }

        // Wave origin of a new VUE track: ray through the measured direction intersected with
        // x = x_u, or a range along the ray when that intersection is ill-conditioned.
        std::optional<Vec3> birth_point(const TrackSet &tracks, const MeasuredPath &m, double range_fallback,
                                        const FilterConfig &cfg)
        {
            const Vec3 u = global_direction(m.phi, m.psi);
            const double xu = tracks.s(0);
            if (std::abs(u.x()) >= cfg.birth_min_ux)
            {
                const double t = xu / u.x();
                if (t > 0.0)
                    return Vec3(xu, t * u.y(), t * u.z());
            }
            if (std::isfinite(range_fallback) && range_fallback > 0.0)
            {
                const Vec3 p = range_fallback * u;
                return Vec3(xu, p.y(), p.z());
            }
            return std::nullopt;
        }
    }

    namespace
    {
        bool angle_consistent(const TrackSet &tracks, const MeasuredPath &m, const FilterConfig &cfg)
        {
            if (!(cfg.reid_gate_probability > 0.0))
                return true;
            const TrackPrediction tp = predict_track(tracks.s, 0, cfg.model);
            const Eigen::MatrixXd H = track_jacobian(tracks.s, 0, cfg.model).topRows(2);
            Eigen::Vector2d y(wrap_angle(m.phi - tp.h(0)), m.psi - tp.h(1));
            const Eigen::MatrixXd S = H * tracks.P * H.transpose() + path_noise(m, cfg).topLeftCorner(2, 2);
            Eigen::LLT<Eigen::MatrixXd> llt(S);
            if (llt.info() != Eigen::Success)
                return false;
            return y.dot(llt.solve(y)) < chi2_gate(2, cfg.reid_gate_probability);
        }
    }

    ManageResult manage_tracks(TrackSet &tracks, const AssocResult &assoc, const MeasurementVector &z,
                               const Vec3 &ego_velocity, const FilterConfig &cfg)
    {
        ManageResult out;
        std::vector<AssocPair> pairs = assoc.pairs;
        const int nm = static_cast<int>(z.paths.size());
        std::vector<bool> meas_free(static_cast<std::size_t>(nm), true);
        std::vector<bool> track_hit(static_cast<std::size_t>(tracks.L()), false);
        for (const auto &p : pairs)
        {
            meas_free[static_cast<std::size_t>(p.meas)] = false;
            track_hit[static_cast<std::size_t>(p.track)] = true;
        }

        // LoS
        if (track_hit[0])
            out.los = LosStatus::associated;
        else
        {
            std::vector<double> d, k;
            std::vector<bool> cand;
            for (int j = 0; j < nm; ++j)
            {
                const auto &m = z.paths[static_cast<std::size_t>(j)];
                d.push_back(m.d);
                k.push_back(m.has_kappa ? m.kappa : std::numeric_limits<double>::quiet_NaN());
                cand.push_back(meas_free[static_cast<std::size_t>(j)] && angle_consistent(tracks, m, cfg));
            }
            if (auto l = identify_los(d, k, cfg.los_gamma, cand))
            {
                pairs.push_back({0, *l, std::numeric_limits<double>::quiet_NaN(), z.paths[static_cast<std::size_t>(*l)].rows()});
                meas_free[static_cast<std::size_t>(*l)] = false;
                track_hit[0] = true;
                out.los = LosStatus::reidentified;
            }
            else
                out.los = LosStatus::nlos;
        }

        // Miss counting and deletion
        for (int i = 0; i < tracks.L(); ++i)
            tracks.miss_count[static_cast<std::size_t>(i)] = track_hit[static_cast<std::size_t>(i)] ? 0 : tracks.miss_count[static_cast<std::size_t>(i)] + 1;
        std::vector<int> new_index(static_cast<std::size_t>(tracks.L()));
        std::vector<int> doomed;
        for (int i = 1; i < tracks.L(); ++i)
            if (tracks.miss_count[static_cast<std::size_t>(i)] > cfg.max_misses)
                doomed.push_back(i);
        {
            int next = 0;
            std::size_t di = 0;
            for (int i = 0; i < tracks.L(); ++i)
            {
                if (di < doomed.size() && doomed[di] == i)
                {
                    new_index[static_cast<std::size_t>(i)] = -1;
                    ++di;
                }
                else
                    new_index[static_cast<std::size_t>(i)] = next++;
            }
        }
        for (auto it = doomed.rbegin(); it != doomed.rend(); ++it)
        {
            out.removed_ids.push_back(tracks.ids[static_cast<std::size_t>(*it)]);
            tracks.remove_track(*it);
        }
        std::reverse(out.removed_ids.begin(), out.removed_ids.end());
        for (auto &p : pairs)
            p.track = new_index[static_cast<std::size_t>(p.track)];

        // Range anchor for births that cannot use the ray intersection
        double base_range = tracks.ue().norm();
        double base_d = z.reference >= 0 ? z.paths[static_cast<std::size_t>(z.reference)].d : 0.0;
        {
            double best_d = std::numeric_limits<double>::infinity();
            for (const auto &p : pairs)
            {
                const double dj = z.paths[static_cast<std::size_t>(p.meas)].d;
                if (dj < best_d)
                {
                    best_d = dj;
                    base_range = tracks.position(p.track).norm();
                    base_d = dj;
                }
            }
        }

        // Doppler screening of existing pairs (the UE track is never dropped)
        const Vec3 pu = tracks.ue();
        for (const auto &p : pairs)
        {
            if (p.track == 0)
                continue;
            const auto &m = z.paths[static_cast<std::size_t>(p.meas)];
            const double vp = predicted_static_radial_velocity(pu, tracks.position(p.track), ego_velocity);
            if (std::abs(m.v - vp) > cfg.doppler_tol)
                out.dynamic_tracks.push_back(tracks.ids[static_cast<std::size_t>(p.track)]);
        }

        // Births
        for (int j = 0; j < nm; ++j)
        {
            if (!meas_free[static_cast<std::size_t>(j)])
                continue;
            const auto &m = z.paths[static_cast<std::size_t>(j)];
            const auto bp = birth_point(tracks, m, base_range + (m.d - base_d), cfg);
            if (!bp)
                continue;
            const int idx = tracks.add_vue(bp->y(), bp->z(), cfg.sigma_p * cfg.sigma_p);
            const int id = tracks.ids[static_cast<std::size_t>(idx)];
            out.born_ids.push_back(id);
            const double vp = predicted_static_radial_velocity(pu, *bp, ego_velocity);
            if (std::abs(m.v - vp) > cfg.doppler_tol)
                out.dynamic_tracks.push_back(id);
        }

        // Reorder so the UE pair leads, then by track index
        std::stable_sort(pairs.begin(), pairs.end(), [](const AssocPair &a, const AssocPair &b) { return a.track < b.track; });
        out.pairs = std::move(pairs);
        return out;
    }

    void predict(TrackSet &tracks, double nu, double theta, double T, const FilterConfig &cfg)
    {
        const double c = std::cos(theta), s = std::sin(theta);
        tracks.s(0) += T * nu * c;
        tracks.s(1) += T * nu * s;

        Eigen::Matrix<double, 3, 2> G;
        G << T * c, -T * nu * s,
            T * s, T * nu * c,
            0.0, 0.0;
        const Eigen::Matrix2d Sig = Eigen::Vector2d(cfg.sigma_nu * cfg.sigma_nu, cfg.sigma_theta * cfg.sigma_theta).asDiagonal();
        Mat3 Qu = G * Sig * G.transpose();
        Qu(2, 2) += cfg.z_floor;
        tracks.P.topLeftCorner<3, 3>() += Qu;
        const double rw = cfg.sigma_rw * cfg.sigma_rw;
        for (Eigen::Index k = 3; k < tracks.s.size(); ++k)
            tracks.P(k, k) += rw;
        tracks.P = 0.5 * (tracks.P + tracks.P.transpose()).eval();
        ++tracks.epoch;
    }

    Eigen::MatrixXd joseph_update(const Eigen::MatrixXd &P, const Eigen::MatrixXd &K, const Eigen::MatrixXd &H,
                                  const Eigen::MatrixXd &R)
    {
        const Eigen::MatrixXd IKH = Eigen::MatrixXd::Identity(P.rows(), P.cols()) - K * H;
        Eigen::MatrixXd out = IKH * P * IKH.transpose() + K * R * K.transpose();
        return 0.5 * (out + out.transpose());
    }

    UpdateInfo update(TrackSet &tracks, const MeasurementVector &z, const std::vector<AssocPair> &pairs,
                      const FilterConfig &cfg)
    {
        UpdateInfo info;
        if (pairs.empty())
            return info;

        // Delta-d reference among the associated measurements
        const AssocPair *ref = &pairs.front();
        for (const auto &p : pairs)
            if (z.paths[static_cast<std::size_t>(p.meas)].d < z.paths[static_cast<std::size_t>(ref->meas)].d)
                ref = &p;

        int K = 0;
        for (const auto &p : pairs)
            K += p.dof + (&p == ref ? 0 : 1);
        const Eigen::Index D = tracks.s.size();
        Eigen::VectorXd y(K);
        Eigen::MatrixXd H(K, D);
        Eigen::VectorXd rdiag(K);

        int row = 0;
        for (const auto &p : pairs)
        {
            const auto &m = z.paths[static_cast<std::size_t>(p.meas)];
            const int r = p.dof;
            const TrackPrediction tp = predict_track(tracks.s, p.track, cfg.model);
            y.segment(row, r) = path_vector(m).head(r) - tp.h.head(r);
            y(row) = wrap_angle(y(row));
            H.middleRows(row, r) = track_jacobian(tracks.s, p.track, cfg.model).topRows(r);
            rdiag.segment(row, r) = path_noise(m, cfg, tp.h(2)).diagonal().head(r);
            row += r;
        }
        const auto &mref = z.paths[static_cast<std::size_t>(ref->meas)];
        const double range_ref = tracks.position(ref->track).norm();
        const Eigen::RowVectorXd g_ref = range_jacobian(tracks.s, ref->track);
        for (const auto &p : pairs)
        {
            if (&p == ref)
                continue;
            const auto &m = z.paths[static_cast<std::size_t>(p.meas)];
            y(row) = (m.d - mref.d) - (tracks.position(p.track).norm() - range_ref);
            H.row(row) = range_jacobian(tracks.s, p.track) - g_ref;
            rdiag(row) = cfg.sigma_dd * cfg.sigma_dd;
            ++row;
        }
        info.rows = K;

        const Eigen::MatrixXd R = rdiag.asDiagonal();
        const Eigen::MatrixXd S = H * tracks.P * H.transpose() + R;
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success)
        {
            info.singular = true;
            return info;
        }
        const Eigen::MatrixXd Kg = llt.solve(H * tracks.P).transpose();
        tracks.s += Kg * y;
        tracks.P = joseph_update(tracks.P, Kg, H, R);
        info.applied = true;
        return info;
    }
}
