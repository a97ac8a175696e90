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

#include <doctest.h>

#include "tunnelloc/cpd.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace tunnelloc;
using Eigen::MatrixXcd;

namespace
{
    // Columns exp(j w_l n)
    MatrixXcd vandermonde(int n, const std::vector<double> &w)
    {
        MatrixXcd out(n, static_cast<Eigen::Index>(w.size()));
        for (int r = 0; r < n; ++r)
            for (std::size_t l = 0; l < w.size(); ++l)
                out(r, static_cast<Eigen::Index>(l)) = std::polar(1.0, w[l] * r);
        return out;
    }

    // URA steering with phases (u r + v c) on a rows x cols grid
    MatrixXcd ura(int rows, int cols, const std::vector<double> &u, const std::vector<double> &v)
    {
        MatrixXcd out(rows * cols, static_cast<Eigen::Index>(u.size()));
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                for (std::size_t l = 0; l < u.size(); ++l)
                    out(r * cols + c, static_cast<Eigen::Index>(l)) = std::polar(1.0, u[l] * r + v[l] * c);
        return out;
    }

    double correlation(const Eigen::VectorXcd &a, const Eigen::VectorXcd &b)
    {
        return std::abs(a.dot(b)) / (a.norm() * b.norm());
    }

    // Worst column correlation after the best permutation (brute force, small L)
    double matched_correlation(const MatrixXcd &est, const MatrixXcd &truth)
    {
        std::vector<int> perm(static_cast<std::size_t>(truth.cols()));
        std::iota(perm.begin(), perm.end(), 0);
        double best = 0.0;
        do
        {
            double worst = 1.0;
            for (Eigen::Index l = 0; l < truth.cols(); ++l)
                worst = std::min(worst, correlation(est.col(perm[static_cast<std::size_t>(l)]), truth.col(l)));
            best = std::max(best, worst);
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
}

TEST_CASE("kruskal generic check")
{
    CHECK(kruskal_generic_ok(100, 128, 12, 5));
    CHECK(kruskal_generic_ok(100, 52, 12, 4));
    CHECK_FALSE(kruskal_generic_ok(2, 2, 2, 3));
}

TEST_CASE("reconstruction matches explicit sum")
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    auto rnd = [&](int r, int c)
    {
        MatrixXcd m(r, c);
        for (Eigen::Index i = 0; i < m.size(); ++i)
            m.data()[i] = cdouble(n(rng), n(rng));
        return m;
    };
    const MatrixXcd A = rnd(5, 2), B = rnd(4, 2), C = rnd(3, 2);
    const ChannelTensor t = cp_reconstruct(A, B, C);
    double worst = 0.0;
    for (int m = 0; m < 5; ++m)
        for (int s = 0; s < 4; ++s)
            for (int k = 0; k < 3; ++k)
            {
                cdouble v(0.0, 0.0);
                for (int l = 0; l < 2; ++l)
                    v += A(m, l) * B(s, l) * C(k, l);
                worst = std::max(worst, std::abs(t(m, s, k) - v));
            }
    CHECK(worst < 1e-13);
}

TEST_CASE("rank one is exact")
{
    const MatrixXcd A = vandermonde(16, {0.4}), B = vandermonde(20, {-1.1}), C = vandermonde(6, {0.2});
    const ChannelTensor t = cp_reconstruct(A * cdouble(0.3, -0.7), B, C);
    const SteeringEstimates est = cpd(t, 1);
    CHECK(est.als_residual < 1e-8);
    CHECK(correlation(est.B_s.col(0), A.col(0)) > 1.0 - 1e-12);
    CHECK(correlation(est.B_f.col(0), B.col(0)) > 1.0 - 1e-12);
    CHECK(correlation(est.B_t.col(0), C.col(0)) > 1.0 - 1e-12);
}

TEST_CASE("three separated components")
{
    // spatial gaps well above 10 deg, delay gaps above 2 bins
    const MatrixXcd A = ura(10, 10, {0.3, -1.2, 1.9}, {0.5, 1.4, -0.9});
    const MatrixXcd B = vandermonde(52, {-0.2, -0.6, -1.3});
    const MatrixXcd C = vandermonde(12, {0.05, 0.02, -0.04});
    MatrixXcd Ag = A;
    Ag.col(0) *= cdouble(1.0, 0.0);
    Ag.col(1) *= cdouble(0.0, 0.6);
    Ag.col(2) *= cdouble(-0.4, 0.2);
    const ChannelTensor t = cp_reconstruct(Ag, B, C);

    CpdConfig cfg;
    cfg.ura_rows = cfg.ura_cols = 10;
    const SteeringEstimates est = cpd(t, 3, cfg);
    CHECK(est.als_residual < 1e-8);
    CHECK(matched_correlation(est.B_s, A) >= 0.9999);
    CHECK(matched_correlation(est.B_f, B) >= 0.9999);
    CHECK(matched_correlation(est.B_t, C) >= 0.9999);

    // random initialisations alone reach the same solution
    CpdConfig plain;
    plain.restarts = 8;
    const SteeringEstimates r = cpd(t, 3, plain);
    CHECK(r.als_residual < 1e-6);
    CHECK(matched_correlation(r.B_f, B) >= 0.9999);
}

TEST_CASE("noisy five components")
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    const MatrixXcd A = ura(10, 10, {0.3, -1.2, 1.9, -0.4, 2.6}, {0.5, 1.4, -0.9, -2.0, 0.1});
    const MatrixXcd B = vandermonde(52, {-0.2, -0.6, -1.3, -2.1, 2.5});
    const MatrixXcd C = vandermonde(12, {0.05, 0.02, -0.04, 0.3, -0.2});
    ChannelTensor t = cp_reconstruct(A, B, C);
    const double sd = 0.05;
    for (auto &v : t.data())
        v += cdouble(sd * n(rng), sd * n(rng));

    CpdConfig cfg;
    cfg.ura_rows = cfg.ura_cols = 10;
    const SteeringEstimates est = cpd(t, 5, cfg);
    // residual at the noise floor
    const double floor = sd * std::sqrt(2.0 * t.size()) / std::sqrt(t.squared_norm());
    CHECK(est.als_residual < 1.05 * floor);
    CHECK(matched_correlation(est.B_f, B) >= 0.999);
    CHECK(est.restarts_used >= 1);
}

TEST_CASE("argument checks")
{
    ChannelTensor t(3, 3, 2);
    CHECK_THROWS_AS(cpd(t, 0), std::invalid_argument);
    CHECK_THROWS_AS(cpd(t, 7), std::invalid_argument);
    const SteeringEstimates z = cpd(t, 2);
    CHECK(z.B_s.cols() == 2);
    CHECK(z.B_s.norm() == 0.0);
    CHECK(z.als_residual == 0.0);
}
