// SPDX-License-Identifier: Apache-2.0
//
// mimo_crowd: user identification and channel estimation for crowded
// massive-MIMO uplink over Rician fading
// Copyright (C) 2026 The mimo_crowd Authors
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

#ifndef MIMO_CROWD_ESTIMATE_HPP
#define MIMO_CROWD_ESTIMATE_HPP

// Channel estimation from an identification result.
//
// LOS-only: the projection values along a user's own hopping pattern are
// averaged over the superframe and scaled onto its unit steering vector.
//
// Updated: the LOS estimate drives coherent detection of the data block,
// the detected LOS contribution is cancelled, and the remaining NLOS part is
// estimated jointly for all identified users with a regularized
// least-squares (MMSE) solve on the first tau data symbols.

#include "airlink.hpp"
#include "channel.hpp"
#include "core.hpp"
#include "identify.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace mimo_crowd {

struct LosEstimate {
    std::size_t user = 0;
    std::size_t candidate = 0;
    double aoa = 0.0;
    cplx beta_bar;
    CVec h_bar_hat; // beta_bar * alpha(aoa)
};

inline LosEstimate los_estimate(const ProjectionTable &table, const IdentificationReport &report,
                                std::size_t user, const HoppingCodebook &codebook,
                                const ArrayGeometry &geometry)
{
    const Match *m = report.find_user(user);
    if (!m || m->candidate == no_candidate)
        throw not_identified("user " + std::to_string(user) + " is not bound to a candidate angle");
    require(m->candidate < table.candidates(), "match refers to a missing candidate");
    require(table.subframes() == codebook.subframes(), "projection U must match codebook U");
    cplx sum = 0.0;
    for (std::size_t t = 0; t < table.subframes(); ++t)
        sum += table(m->candidate, t, codebook.pilot(user, t));
    LosEstimate est;
    est.user = user;
    est.candidate = m->candidate;
    est.aoa = m->aoa;
    est.beta_bar = sum / static_cast<double>(table.subframes());
    est.h_bar_hat = est.beta_bar * normalized_steering(geometry, m->aoa);
    return est;
}

// Nearest 4-QAM point; a zero component maps to the positive side.
inline cplx slice_qam4(cplx z)
{
    constexpr double s = 0.70710678118654752440;
    return {z.real() >= 0.0 ? s : -s, z.imag() >= 0.0 ? s : -s};
}

struct DetectedData {
    CMat soft; // users x tau
    CMat hard; // 4-QAM sliced
};

// x_hat = h_bar_hat^H Y / (|beta_bar|^2 sqrt(p_t)) for one user.
inline Eigen::RowVectorXcd coherent_detect_soft(const CMat &y_data, const LosEstimate &los,
                                                double tx_power)
{
    require(tx_power > 0.0, "p_t must be > 0");
    require(y_data.rows() == los.h_bar_hat.size(), "data block must have M rows");
    const double gain = std::norm(los.beta_bar);
    if (!(gain > 0.0))
        throw degenerate_estimate("LOS estimate of user " + std::to_string(los.user) + " is zero");
    return (los.h_bar_hat.adjoint() * y_data) / (gain * std::sqrt(tx_power));
}

inline DetectedData coherent_detect(const CMat &y_data, std::span<const LosEstimate> los,
                                    double tx_power)
{
    DetectedData out;
    out.soft.resize(static_cast<Eigen::Index>(los.size()), y_data.cols());
    for (std::size_t j = 0; j < los.size(); ++j)
        out.soft.row(static_cast<Eigen::Index>(j)) = coherent_detect_soft(y_data, los[j], tx_power);
    out.hard = out.soft.unaryExpr([](cplx z) { return slice_qam4(z); });
    return out;
}

inline DetectedData coherent_detect(const CMat &y_data, const LosEstimate &los, double tx_power)
{
    return coherent_detect(y_data, std::span<const LosEstimate>(&los, 1), tx_power);
}

// Y - sqrt(p_t) H_bar_hat X_hat
inline CMat residual(const CMat &y_data, const CMat &h_bar_hat, const CMat &x_hat, double tx_power)
{
    require(h_bar_hat.cols() == x_hat.rows(), "LOS stack and detected symbols disagree on user count");
    require(y_data.rows() == h_bar_hat.rows(), "LOS stack must have M rows");
    require(y_data.cols() == x_hat.cols(), "detected block length must equal data block length");
    require(x_hat.cols() > x_hat.rows(), "residual needs tau > G");
    return y_data - std::sqrt(tx_power) * h_bar_hat * x_hat;
}

struct NlosEstimate {
    CMat h;                 // M x G, column j estimates user j's NLOS vector
    CMat error_covariance;  // G x G, per-antenna error covariance sigma^2 A^{-1}
};

inline constexpr double max_condition = 1e12;

namespace detail {

inline void check_conditioning(const CMat &a)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(a, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > max_condition)
        throw ill_conditioned("regularized Gram matrix is singular or ill-conditioned");
}

} // namespace detail

// H_tilde_hat = Y_res (sqrt(p) X)^H (p X X^H + sigma^2 R_v^{-1})^{-1}, solved
// as a G x G Hermitian system.
inline NlosEstimate mmse_nlos(const CMat &y_res, const CMat &x_hat, double tx_power, double noise_var,
                              const CMat &r_v)
{
    const auto g = x_hat.rows();
    require(tx_power > 0.0, "p_t must be > 0");
    require(noise_var >= 0.0, "noise variance must be >= 0");
    require(y_res.cols() == x_hat.cols(), "residual and symbols must have the same length");
    require(x_hat.cols() > g, "MMSE update needs tau > G");
    require(r_v.rows() == g && r_v.cols() == g, "R_v must be G x G");

    CMat a = tx_power * x_hat * x_hat.adjoint();
    if (noise_var > 0.0) {
        Eigen::LLT<CMat> llt(r_v);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("R_v must be positive definite");
        a += noise_var * llt.solve(CMat::Identity(g, g));
    }
    a = 0.5 * (a + a.adjoint());
    detail::check_conditioning(a);

    const CMat b = std::sqrt(tx_power) * y_res * x_hat.adjoint();
    Eigen::LDLT<CMat> ldlt(a);
    NlosEstimate out;
    out.h = ldlt.solve(b.adjoint()).adjoint();
    out.error_covariance = noise_var * ldlt.solve(CMat::Identity(g, g));
    return out;
}

// Diagonal R_v given as per-user NLOS variances. A zero variance (pure-LOS
// user) with positive noise pins that user's estimate to zero, which is the
// exact limit of an infinite regularizer.
inline NlosEstimate mmse_nlos_diag(const CMat &y_res, const CMat &x_hat, double tx_power,
                                   double noise_var, std::span<const double> variances)
{
    const auto g = x_hat.rows();
    require(static_cast<Eigen::Index>(variances.size()) == g, "need one NLOS variance per user");
    require(x_hat.cols() > g, "MMSE update needs tau > G");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < g; ++j) {
        require(variances[static_cast<std::size_t>(j)] >= 0.0, "NLOS variance must be >= 0");
        if (noise_var == 0.0 || variances[static_cast<std::size_t>(j)] > 0.0)
            keep.push_back(j);
    }
    NlosEstimate out;
    out.h = CMat::Zero(y_res.rows(), g);
    out.error_covariance = CMat::Zero(g, g);
    if (keep.empty())
        return out;

    const auto n = static_cast<Eigen::Index>(keep.size());
    CMat xs(n, x_hat.cols());
    CMat rv = CMat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        xs.row(i) = x_hat.row(keep[static_cast<std::size_t>(i)]);
        const double v = variances[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])];
        rv(i, i) = v > 0.0 ? v : 1.0; // unused when noise_var == 0
    }
    const NlosEstimate sub = mmse_nlos(y_res, xs, tx_power, noise_var, rv);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.h.col(keep[static_cast<std::size_t>(i)]) = sub.h.col(i);
        for (Eigen::Index k = 0; k < n; ++k)
            out.error_covariance(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(k)]) =
                sub.error_covariance(i, k);
    }
    return out;
}

// Per-user NLOS variance from the data: least-squares fit of the residual,
// minus the noise contribution, floored at a small positive value.
inline std::vector<double> estimate_nlos_variances(const CMat &y_res, const CMat &x_hat, double tx_power,
                                                   double noise_var)
{
    const auto g = x_hat.rows();
    require(x_hat.cols() > g, "variance estimate needs tau > G");
    const CMat gram = x_hat * x_hat.adjoint();
    Eigen::LDLT<CMat> ldlt(gram);
    const CMat inv = ldlt.solve(CMat::Identity(g, g));
    const CMat ls = (y_res * x_hat.adjoint()) * inv / std::sqrt(tx_power);
    const double m = static_cast<double>(y_res.rows());
    std::vector<double> v(static_cast<std::size_t>(g));
    for (Eigen::Index j = 0; j < g; ++j)
        v[static_cast<std::size_t>(j)] =
            std::max(ls.col(j).squaredNorm() / m - noise_var * inv(j, j).real() / tx_power, 1e-12);
    return v;
}

inline double nmse(const CVec &h_hat, const CVec &h)
{
    const double energy = h.squaredNorm();
    require(energy > 0.0, "NMSE needs a nonzero true channel");
    require(h_hat.size() == h.size(), "NMSE vectors must have equal length");
    return (h_hat - h).squaredNorm() / energy;
}

// ---------------------------------------------------------------------------
// Full estimation pass for one superframe
// ---------------------------------------------------------------------------

enum class DetectMode { hard, soft };

struct SubframeEstimate {
    CMat nlos;    // M x users
    CMat updated; // M x users, LOS-only + NLOS
    bool failed = false;
};

struct ChannelEstimateSet {
    std::vector<LosEstimate> los; // one per bound user, in report order
    std::vector<SubframeEstimate> subframes;
    std::uint64_t complex_mults = 0;

    // Index of `user` in `los`, or -1.
    long slot(std::size_t user) const
    {
        for (std::size_t i = 0; i < los.size(); ++i)
            if (los[i].user == user)
                return static_cast<long>(i);
        return -1;
    }
};

struct EstimatorOptions {
    std::size_t tau = 60;
    DetectMode detect = DetectMode::hard;
    bool estimate_rv = false; // false: use supplied variances
};

// `prior_variances[i]` is the NLOS variance assumed for report.matches[i]
// (ignored when options.estimate_rv is set).
inline ChannelEstimateSet estimate_channels(std::span<const CMat> y_data, const ProjectionTable &table,
                                            const IdentificationReport &report,
                                            const HoppingCodebook &codebook,
                                            const ArrayGeometry &geometry, double tx_power,
                                            double noise_var, std::span<const double> prior_variances,
                                            const EstimatorOptions &options)
{
    ChannelEstimateSet out;
    std::vector<double> priors;
    for (std::size_t i = 0; i < report.matches.size(); ++i) {
        const auto &m = report.matches[i];
        if (m.candidate == no_candidate)
            continue;
        LosEstimate los = los_estimate(table, report, m.user, codebook, geometry);
        if (!(std::norm(los.beta_bar) > 0.0))
            continue;
        out.los.push_back(std::move(los));
        priors.push_back(i < prior_variances.size() ? prior_variances[i] : 0.0);
    }
    const auto g = static_cast<Eigen::Index>(out.los.size());
    const auto m = static_cast<Eigen::Index>(geometry.antennas());
    const auto tau = static_cast<Eigen::Index>(options.tau);
    if (g == 0)
        return out;

    CMat h_bar(m, g);
    for (Eigen::Index j = 0; j < g; ++j)
        h_bar.col(j) = out.los[static_cast<std::size_t>(j)].h_bar_hat;

    for (const auto &y : y_data) {
        require(y.cols() >= tau, "data block shorter than tau");
        SubframeEstimate sub;
        const CMat block = y.leftCols(tau);
        const DetectedData det = coherent_detect(block, out.los, tx_power);
        const CMat &x_hat = options.detect == DetectMode::hard ? det.hard : det.soft;
        out.complex_mults += static_cast<std::uint64_t>(g * m * tau);
        sub.nlos = CMat::Zero(m, g);
        if (tau > g) {
            const CMat res = residual(block, h_bar, x_hat, tx_power);
            out.complex_mults += static_cast<std::uint64_t>(m * g * tau);
            try {
                const std::vector<double> v =
                    options.estimate_rv ? estimate_nlos_variances(res, x_hat, tx_power, noise_var) : priors;
                sub.nlos = mmse_nlos_diag(res, x_hat, tx_power, noise_var, v).h;
            } catch (const ill_conditioned &) {
                sub.failed = true;
            }
            out.complex_mults += static_cast<std::uint64_t>(m * tau * g + g * g * tau + g * g * g + m * g * g);
        } else {
            sub.failed = true;
        }
        sub.updated = h_bar + sub.nlos;
        out.subframes.push_back(std::move(sub));
    }
    return out;
}

} // namespace mimo_crowd

#endif
