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

#include "tunnelloc/cpd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace tunnelloc
{
    namespace
    {
        using Eigen::MatrixXcd;
        using Eigen::VectorXcd;

        using ConstSlice = Eigen::Map<const MatrixXcd>;

        ConstSlice slice(const ChannelTensor &t, int k)
        {
            return ConstSlice(&t.data()[t.index(0, 0, k)], t.M(), t.N_f());
        }

        struct Factors
        {
            MatrixXcd A, B, C;
        };

        // Solves X G = Acc for Hermitian PSD G with a tiny ridge
        MatrixXcd solve_gram(const MatrixXcd &acc, const MatrixXcd &gram)
        {
            // acc * conj(G)^-1  ==  (G^-1 acc^T)^T
            const double ridge = 1e-13 * std::max(1e-300, gram.diagonal().real().sum());
            MatrixXcd g = gram;
            g.diagonal().array() += ridge;
            return g.ldlt().solve(acc.transpose()).transpose();
        }

        MatrixXcd mttkrp_1(const ChannelTensor &x, const MatrixXcd &B, const MatrixXcd &C)
        {
            MatrixXcd acc = MatrixXcd::Zero(x.M(), B.cols());
            const MatrixXcd Bc = B.conjugate();
            for (int k = 0; k < x.N_t(); ++k)
            {
                MatrixXcd t = slice(x, k) * Bc;
                acc += t * C.row(k).conjugate().asDiagonal();
            }
            return acc;
        }

        MatrixXcd mttkrp_2(const ChannelTensor &x, const MatrixXcd &A, const MatrixXcd &C)
        {
            MatrixXcd acc = MatrixXcd::Zero(x.N_f(), A.cols());
            const MatrixXcd Ac = A.conjugate();
            for (int k = 0; k < x.N_t(); ++k)
            {
                MatrixXcd t = slice(x, k).transpose() * Ac;
                acc += t * C.row(k).conjugate().asDiagonal();
            }
            return acc;
        }

        MatrixXcd mttkrp_3(const ChannelTensor &x, const MatrixXcd &A, const MatrixXcd &B)
        {
            MatrixXcd acc(x.N_t(), A.cols());
            const MatrixXcd Ac = A.conjugate();
            const MatrixXcd Bc = B.conjugate();
            for (int k = 0; k < x.N_t(); ++k)
            {
                MatrixXcd t = slice(x, k) * Bc;
                acc.row(k) = Ac.cwiseProduct(t).colwise().sum();
            }
            return acc;
        }

        // Squared residual from the last mode-3 MTTKRP
        double residual_sq(double xnorm2, const Factors &f, const MatrixXcd &acc3)
        {
            const MatrixXcd g = (f.A.adjoint() * f.A).cwiseProduct(f.B.adjoint() * f.B).cwiseProduct(f.C.adjoint() * f.C);
            const double model2 = g.sum().real();
            const double cross = f.C.conjugate().cwiseProduct(acc3).sum().real();
            return std::max(0.0, xnorm2 - 2.0 * cross + model2);
        }

        void normalize_columns(Factors &f)
        {
            for (int l = 0; l < f.A.cols(); ++l)
            {
                const double na = f.A.col(l).norm();
                const double nb = f.B.col(l).norm();
                if (na > 0.0 && nb > 0.0)
                {
                    f.A.col(l) /= na;
                    f.B.col(l) /= nb;
                    f.C.col(l) *= na * nb;
                }
            }
        }

        struct AlsResult
        {
            Factors f;
            double residual2 = std::numeric_limits<double>::infinity();
            int iterations = 0;
            bool converged = false;
        };

        AlsResult run_als(const ChannelTensor &x, Factors f, int max_iter, double tol, double xnorm2)
        {
            AlsResult r;
            double prev = std::numeric_limits<double>::infinity();
            for (int it = 0; it < max_iter; ++it)
            {
                f.A = solve_gram(mttkrp_1(x, f.B, f.C), (f.B.adjoint() * f.B).cwiseProduct(f.C.adjoint() * f.C));
                f.B = solve_gram(mttkrp_2(x, f.A, f.C), (f.A.adjoint() * f.A).cwiseProduct(f.C.adjoint() * f.C));
                const MatrixXcd acc3 = mttkrp_3(x, f.A, f.B);
                f.C = solve_gram(acc3, (f.A.adjoint() * f.A).cwiseProduct(f.B.adjoint() * f.B));
                const double res = residual_sq(xnorm2, f, acc3);
                normalize_columns(f);
                r.iterations = it + 1;
                if (!std::isfinite(res))
                    break;
                const bool tiny = res <= 1e-28 * xnorm2;
                const bool flat = prev - res <= tol * std::max(prev, 1e-300) && it > 0;
                prev = res;
                r.residual2 = res;
                r.f = f;
                if (tiny || flat)
                {
                    r.converged = true;
                    break;
                }
            }
            if (!std::isfinite(r.residual2))
                r.f = f;
            return r;
        }

        // Leading left singular vectors of a Hermitian Gram matrix
        MatrixXcd top_basis(const MatrixXcd &gram, int r)
        {
            Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram);
            const int n = static_cast<int>(gram.rows());
            MatrixXcd U(n, r);
            for (int i = 0; i < r; ++i)
                U.col(i) = es.eigenvectors().col(n - 1 - i);
            return U;
        }

        ChannelTensor core_tensor(const ChannelTensor &x, const MatrixXcd &U1, const MatrixXcd &U2, const MatrixXcd &U3)
        {
            const int r1 = static_cast<int>(U1.cols()), r2 = static_cast<int>(U2.cols()), r3 = static_cast<int>(U3.cols());
            std::vector<MatrixXcd> t2(static_cast<std::size_t>(x.N_t()));
            for (int k = 0; k < x.N_t(); ++k)
                t2[static_cast<std::size_t>(k)] = U1.adjoint() * slice(x, k) * U2.conjugate();
            ChannelTensor g(r1, r2, r3);
            for (int k3 = 0; k3 < r3; ++k3)
            {
                MatrixXcd acc = MatrixXcd::Zero(r1, r2);
                for (int k = 0; k < x.N_t(); ++k)
                    acc += std::conj(U3(k, k3)) * t2[static_cast<std::size_t>(k)];
                Eigen::Map<MatrixXcd>(&g.data()[g.index(0, 0, k3)], r1, r2) = acc;
            }
            return g;
        }

        MatrixXcd random_matrix(int rows, int cols, std::mt19937_64 &rng)
        {
            std::normal_distribution<double> n(0.0, 1.0);
            MatrixXcd m(rows, cols);
            for (int j = 0; j < cols; ++j)
                for (int i = 0; i < rows; ++i)
                    m(i, j) = cdouble(n(rng), n(rng));
            return m;
        }

        // Given one factor, recover the other two by rank-1 fits of the matching unfolding.
        // mode: which factor is known (0 = A, 1 = B, 2 = C)
        Factors complete_from(const ChannelTensor &g, const MatrixXcd &known, int mode)
        {
            const int I = g.M(), J = g.N_f(), K = g.N_t();
            const int L = static_cast<int>(known.cols());
            Factors f;
            f.A = MatrixXcd::Zero(I, L);
            f.B = MatrixXcd::Zero(J, L);
            f.C = MatrixXcd::Zero(K, L);

            // unfolding with the known mode as rows
            const int rows = mode == 0 ? I : (mode == 1 ? J : K);
            const int p = mode == 0 ? J : I; // first remaining mode
            const int q = mode == 2 ? J : K; // second remaining mode
            MatrixXcd unf(rows, p * q);
            for (int k = 0; k < K; ++k)
                for (int j = 0; j < J; ++j)
                    for (int i = 0; i < I; ++i)
                    {
                        const cdouble v = g(i, j, k);
                        if (mode == 0)
                            unf(i, j + J * k) = v;
                        else if (mode == 1)
                            unf(j, i + I * k) = v;
                        else
                            unf(k, i + I * j) = v;
                    }
            const MatrixXcd w = known.completeOrthogonalDecomposition().solve(unf); // L x (p q)
            for (int l = 0; l < L; ++l)
            {
                MatrixXcd n(p, q);
                for (int b = 0; b < q; ++b)
                    for (int a = 0; a < p; ++a)
                        n(a, b) = w(l, a + p * b);
                Eigen::JacobiSVD<MatrixXcd> svd(n, Eigen::ComputeThinU | Eigen::ComputeThinV);
                const VectorXcd u = svd.matrixU().col(0) * svd.singularValues()(0);
                const VectorXcd v = svd.matrixV().col(0).conjugate();
                if (mode == 0)
                {
                    f.B.col(l) = u;
                    f.C.col(l) = v;
                }
                else if (mode == 1)
                {
                    f.A.col(l) = u;
                    f.C.col(l) = v;
                }
                else
                {
                    f.A.col(l) = u;
                    f.B.col(l) = v;
                }
            }
            if (mode == 0)
                f.A = known;
            else if (mode == 1)
                f.B = known;
            else
                f.C = known;
            return f;
        }

        // Rotational invariance between two row selections of a basis: eigenvectors of
        // pinv(U1) U2 give the factor in basis coordinates.
        bool shift_invariance_factor(const MatrixXcd &sel1, const MatrixXcd &sel2, MatrixXcd &out)
        {
            if (sel1.rows() < sel1.cols())
                return false;
            const MatrixXcd psi = sel1.completeOrthogonalDecomposition().solve(sel2);
            Eigen::ComplexEigenSolver<MatrixXcd> es(psi);
            if (es.info() != Eigen::Success)
                return false;
            out = es.eigenvectors();
            return out.allFinite();
        }

        std::vector<Factors> structured_inits(const ChannelTensor &g, const MatrixXcd &U1, const MatrixXcd &U2,
                                              int L, const CpdConfig &cfg)
        {
            std::vector<Factors> inits;
            const int r1 = static_cast<int>(U1.cols()), r2 = static_cast<int>(U2.cols());

            // Frequency mode is Vandermonde: shift by one subcarrier
            if (r2 == L && U2.rows() > L)
            {
                MatrixXcd t;
                const int n = static_cast<int>(U2.rows());
                if (shift_invariance_factor(U2.topRows(n - 1), U2.bottomRows(n - 1), t))
                    inits.push_back(complete_from(g, t, 1));
            }

            // Spatial mode is approximately shift invariant along each URA axis
            if (r1 == L && cfg.ura_rows * cfg.ura_cols == U1.rows())
            {
                for (int axis = 0; axis < 2; ++axis)
                {
                    std::vector<int> i1, i2;
                    for (int r = 0; r < cfg.ura_rows; ++r)
                        for (int c = 0; c < cfg.ura_cols; ++c)
                        {
                            const bool has_next = axis == 0 ? c + 1 < cfg.ura_cols : r + 1 < cfg.ura_rows;
                            if (!has_next)
                                continue;
                            i1.push_back(r * cfg.ura_cols + c);
                            i2.push_back(axis == 0 ? r * cfg.ura_cols + c + 1 : (r + 1) * cfg.ura_cols + c);
                        }
                    if (static_cast<int>(i1.size()) < L)
                        continue;
                    MatrixXcd s1(i1.size(), r1), s2(i2.size(), r1);
                    for (std::size_t i = 0; i < i1.size(); ++i)
                    {
                        s1.row(static_cast<Eigen::Index>(i)) = U1.row(i1[i]);
                        s2.row(static_cast<Eigen::Index>(i)) = U1.row(i2[i]);
                    }
                    MatrixXcd t;
                    if (shift_invariance_factor(s1, s2, t))
                        inits.push_back(complete_from(g, t, 0));
                }
            }
            return inits;
        }
    }

    bool kruskal_generic_ok(int M, int N_f, int N_t, int L)
    {
        return std::min(M, L) + std::min(N_f, L) + std::min(N_t, L) >= 2 * L + 2;
    }

    ChannelTensor cp_reconstruct(const Eigen::MatrixXcd &A, const Eigen::MatrixXcd &B, const Eigen::MatrixXcd &C)
    {
        ChannelTensor out(static_cast<int>(A.rows()), static_cast<int>(B.rows()), static_cast<int>(C.rows()));
        for (int k = 0; k < out.N_t(); ++k)
        {
            Eigen::Map<MatrixXcd> s(&out.data()[out.index(0, 0, k)], out.M(), out.N_f());
            s = A * C.row(k).asDiagonal() * B.transpose();
        }
        return out;
    }

    SteeringEstimates cpd(const ChannelTensor &h, int L, const CpdConfig &cfg)
    {
        const long M = h.M(), Nf = h.N_f(), Nt = h.N_t();
        if (L < 1)
            throw std::invalid_argument("cpd: L must be >= 1");
        if (L > std::min({M * Nf, Nf * Nt, M * Nt}))
            throw std::invalid_argument("cpd: L exceeds the identifiable rank for these dimensions");

        SteeringEstimates est;
        est.kruskal_ok = kruskal_generic_ok(h.M(), h.N_f(), h.N_t(), L);

        const double xnorm2 = h.squared_norm();
        if (!(xnorm2 > 0.0))
        {
            est.B_s = MatrixXcd::Zero(M, L);
            est.B_f = MatrixXcd::Zero(Nf, L);
            est.B_t = MatrixXcd::Zero(Nt, L);
            est.als_residual = 0.0;
            return est;
        }

        std::mt19937_64 rng(cfg.seed);

        const int r1 = static_cast<int>(std::min<long>(M, L));
        const int r2 = static_cast<int>(std::min<long>(Nf, L));
        const int r3 = static_cast<int>(std::min<long>(Nt, L));

        MatrixXcd U1, U2, U3;
        ChannelTensor work;
        if (cfg.compress)
        {
            const Eigen::Map<const MatrixXcd> x1(h.data().data(), M, Nf * Nt);
            const MatrixXcd g1 = x1 * x1.adjoint();
            MatrixXcd g2 = MatrixXcd::Zero(Nf, Nf);
            for (int k = 0; k < Nt; ++k)
            {
                const auto s = slice(h, k);
                g2.noalias() += s.transpose() * s.conjugate();
            }
            const Eigen::Map<const MatrixXcd> x3(h.data().data(), M * Nf, Nt);
            const MatrixXcd g3 = x3.transpose() * x3.conjugate();
            U1 = top_basis(g1, r1);
            U2 = top_basis(g2, r2);
            U3 = top_basis(g3, r3);
            work = core_tensor(h, U1, U2, U3);
        }
        else
        {
            U1 = MatrixXcd::Identity(M, M);
            U2 = MatrixXcd::Identity(Nf, Nf);
            U3 = MatrixXcd::Identity(Nt, Nt);
            work = h;
        }
        const double wnorm2 = work.squared_norm();

        std::vector<Factors> inits = structured_inits(work, U1, U2, L, cfg);
        const int n_restarts = std::max(1, cfg.restarts);
        if (static_cast<int>(inits.size()) > n_restarts)
            inits.resize(static_cast<std::size_t>(n_restarts));
        while (static_cast<int>(inits.size()) < n_restarts)
        {
            Factors f;
            f.A = random_matrix(work.M(), L, rng);
            f.B = random_matrix(work.N_f(), L, rng);
            f.C = random_matrix(work.N_t(), L, rng);
            inits.push_back(std::move(f));
        }

        AlsResult best;
        for (auto &init : inits)
        {
            ++est.restarts_used;
            AlsResult r = run_als(work, init, cfg.max_iterations, cfg.tolerance, wnorm2);
            if (r.residual2 < best.residual2 || !std::isfinite(best.residual2))
                best = std::move(r);
            if (best.residual2 <= 1e-24 * wnorm2)
                break;
        }

        Factors f;
        f.A = U1 * best.f.A;
        f.B = U2 * best.f.B;
        f.C = U3 * best.f.C;
        est.iterations = best.iterations;
        est.converged = best.converged;

        double res2 = 0.0;
        if (cfg.compress && cfg.refine_iterations > 0)
        {
            AlsResult r = run_als(h, f, cfg.refine_iterations, cfg.tolerance, xnorm2);
            if (std::isfinite(r.residual2))
            {
                f = r.f;
                res2 = r.residual2;
                est.iterations += r.iterations;
            }
            else
                res2 = residual_sq(xnorm2, f, mttkrp_3(h, f.A, f.B));
        }
        else
            res2 = residual_sq(xnorm2, f, mttkrp_3(h, f.A, f.B));

        est.B_s = f.A;
        est.B_f = f.B;
        est.B_t = f.C;
        // explicit residual, the Gram expansion loses precision near zero
        const ChannelTensor rec = cp_reconstruct(f.A, f.B, f.C);
        double diff2 = 0.0;
        for (std::size_t i = 0; i < rec.size(); ++i)
            diff2 += std::norm(h.data()[i] - rec.data()[i]);
        est.als_residual = std::sqrt((std::isfinite(diff2) ? diff2 : res2) / xnorm2);
        return est;
    }
}
