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

#ifndef MIMO_CROWD_AOA_HPP
#define MIMO_CROWD_AOA_HPP

#include "channel.hpp"
#include "core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace mimo_crowd {

struct CovarianceEstimate {
    CMat r;
    std::size_t snapshots = 0;
};

// R = (1/N) sum y y^H over the columns of each block, symmetrized.
inline CovarianceEstimate sample_covariance(std::span<const CMat> blocks)
{
    Eigen::Index m = -1;
    std::size_t n = 0;
    for (const auto &b : blocks) {
        if (b.cols() == 0)
            continue;
        require(m < 0 || b.rows() == m, "snapshot blocks must share the antenna dimension");
        m = b.rows();
        n += static_cast<std::size_t>(b.cols());
    }
    require(n >= 1, "sample covariance needs at least one snapshot");
    CMat r = CMat::Zero(m, m);
    for (const auto &b : blocks)
        if (b.cols() > 0)
            r.selfadjointView<Eigen::Lower>().rankUpdate(b);
    CMat full = r.selfadjointView<Eigen::Lower>();
    full /= static_cast<double>(n);
    CMat sym = 0.5 * (full + full.adjoint());
    return {std::move(sym), n};
}

inline CovarianceEstimate sample_covariance(const CMat &snapshots)
{
    return sample_covariance(std::span<const CMat>(&snapshots, 1));
}

struct EigenDecomposition {
    RVec values;  // descending
    CMat vectors; // column i pairs with values[i]
};

inline EigenDecomposition hermitian_eig(const CMat &r)
{
    require(r.rows() == r.cols(), "hermitian_eig needs a square matrix");
    const double scale = std::max(1.0, r.norm());
    require((r - r.adjoint()).norm() <= 1e-10 * scale, "hermitian_eig: input is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> solver(r);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("hermitian_eig: eigensolver did not converge");
    EigenDecomposition out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

// Largest ratio lambda_i / lambda_{i+1}, i in [1, max_sources].
inline std::size_t estimate_source_count(const RVec &descending, std::size_t max_sources)
{
    const auto n = static_cast<std::size_t>(descending.size());
    max_sources = std::min(max_sources, n - 1);
    std::size_t best = 1;
    double best_ratio = -1.0;
    for (std::size_t i = 0; i < max_sources; ++i) {
        const double lo = std::max(descending[static_cast<Eigen::Index>(i + 1)], 1e-300);
        const double ratio = descending[static_cast<Eigen::Index>(i)] / lo;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = i + 1;
        }
    }
    return best;
}

struct AoaEstimate {
    std::vector<double> angles;   // ascending, radians in [0, pi]
    std::vector<double> spectrum; // P(theta) on the grid
    std::size_t grid_resolution = 0;
    RVec eigenvalues;             // of the covariance, descending
    std::uint64_t complex_mults = 0;

    double grid_step() const { return pi / static_cast<double>(grid_resolution - 1); }
};

// MUSIC over a uniform theta grid of `resolution` points on [0, pi]. The
// steering matrix for the grid is built once and reused across searches, so
// one searcher can serve many trials (it is immutable after construction).
class MusicSearcher {
public:
    MusicSearcher(const ArrayGeometry &geometry, std::size_t resolution)
        : geometry_(geometry), resolution_(resolution)
    {
        require(geometry.kind == ArrayKind::ula, "MUSIC search is implemented for ULA geometries");
        require(resolution >= 2, "grid resolution must be >= 2");
        const auto m = static_cast<Eigen::Index>(geometry.antennas());
        grid_.resize(m, static_cast<Eigen::Index>(resolution));
        for (std::size_t i = 0; i < resolution; ++i)
            grid_.col(static_cast<Eigen::Index>(i)) = normalized_steering(geometry, angle(i));
    }

    const ArrayGeometry &geometry() const { return geometry_; }
    std::size_t resolution() const { return resolution_; }
    double angle(std::size_t i) const
    {
        return pi * static_cast<double>(i) / static_cast<double>(resolution_ - 1);
    }

    // ||E_n^H alpha(theta)||^2 at an arbitrary angle.
    static double null_distance(const EigenDecomposition &eig, std::size_t sources, const CVec &alpha)
    {
        const auto m = eig.vectors.cols();
        const auto g = static_cast<Eigen::Index>(sources);
        return (eig.vectors.rightCols(m - g).adjoint() * alpha).squaredNorm();
    }

    AoaEstimate search(const CMat &r, std::size_t sources) const
    {
        return search(hermitian_eig(r), sources);
    }

    AoaEstimate search(const EigenDecomposition &eig, std::size_t sources) const
    {
        const auto m = static_cast<Eigen::Index>(geometry_.antennas());
        require(eig.vectors.rows() == m, "covariance dimension must equal the antenna count");
        require(sources >= 1, "source count must be >= 1");
        require(static_cast<Eigen::Index>(sources) < m, "MUSIC needs source count < M");
        const auto g = static_cast<Eigen::Index>(sources);
        const auto r = static_cast<Eigen::Index>(resolution_);

        // Project on whichever subspace is thinner; alpha has unit norm so
        // ||E_n^H a||^2 = 1 - ||E_s^H a||^2.
        RVec dist(r);
        AoaEstimate est;
        est.grid_resolution = resolution_;
        est.eigenvalues = eig.values;
        if (g <= m - g) {
            const CMat proj = eig.vectors.leftCols(g).adjoint() * grid_;
            dist = (1.0 - proj.colwise().squaredNorm().array()).matrix().transpose();
            est.complex_mults = static_cast<std::uint64_t>(g * m * r);
        } else {
            const CMat proj = eig.vectors.rightCols(m - g).adjoint() * grid_;
            dist = proj.colwise().squaredNorm().transpose();
            est.complex_mults = static_cast<std::uint64_t>((m - g) * m * r);
        }
        constexpr double floor = 1e-300;
        for (Eigen::Index i = 0; i < r; ++i)
            dist[i] = std::max(dist[i], floor);

        est.spectrum.resize(resolution_);
        for (Eigen::Index i = 0; i < r; ++i)
            est.spectrum[static_cast<std::size_t>(i)] = 1.0 / dist[i];

        const auto picks = pick_peaks(dist, sources);
        est.angles.reserve(picks.size());
        for (auto i : picks)
            est.angles.push_back(refine(dist, i));
        std::sort(est.angles.begin(), est.angles.end());
        return est;
    }

private:
    // Strict local minima of the null distance, best first; ties toward the
    // smaller angle. Picks are kept at least two grid steps apart.
    std::vector<std::size_t> pick_peaks(const RVec &dist, std::size_t count) const
    {
        const std::size_t r = resolution_;
        auto d = [&](std::size_t i) { return dist[static_cast<Eigen::Index>(i)]; };
        std::vector<std::size_t> minima;
        for (std::size_t i = 0; i < r; ++i) {
            const bool left = i == 0 || d(i) < d(i - 1);
            const bool right = i + 1 == r || d(i) < d(i + 1);
            if (left && right)
                minima.push_back(i);
        }
        auto better = [&](std::size_t a, std::size_t b) { return d(a) < d(b) || (d(a) == d(b) && a < b); };
        std::stable_sort(minima.begin(), minima.end(), better);

        std::vector<std::size_t> picked;
        auto separated = [&](std::size_t i) {
            return std::all_of(picked.begin(), picked.end(), [&](std::size_t p) {
                return (i > p ? i - p : p - i) >= 2;
            });
        };
        for (auto i : minima) {
            if (picked.size() == count)
                break;
            if (separated(i))
                picked.push_back(i);
        }
        if (picked.size() < count) {
            std::vector<std::size_t> all(r);
            std::iota(all.begin(), all.end(), std::size_t{0});
            std::stable_sort(all.begin(), all.end(), better);
            for (auto i : all) {
                if (picked.size() == count)
                    break;
                if (separated(i))
                    picked.push_back(i);
            }
        }
        return picked;
    }

    // One parabolic step on the null distance around grid index i.
    double refine(const RVec &dist, std::size_t i) const
    {
        const double step = pi / static_cast<double>(resolution_ - 1);
        const double theta = angle(i);
        if (i == 0 || i + 1 == resolution_)
            return theta;
        const auto k = static_cast<Eigen::Index>(i);
        const double a = dist[k - 1], b = dist[k], c = dist[k + 1];
        const double curvature = a - 2.0 * b + c;
        if (!(curvature > 0.0))
            return theta;
        const double delta = std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
        return std::clamp(theta + delta * step, 0.0, pi);
    }

    ArrayGeometry geometry_;
    std::size_t resolution_;
    CMat grid_;
};

inline AoaEstimate music_spectrum(const CMat &r, const ArrayGeometry &geometry, std::size_t sources,
                                  std::size_t resolution)
{
    require(static_cast<std::size_t>(r.rows()) == geometry.antennas(),
            "covariance dimension must equal the antenna count");
    require(sources < geometry.antennas(), "MUSIC needs source count < M");
    return MusicSearcher(geometry, resolution).search(r, sources);
}

} // namespace mimo_crowd

#endif
