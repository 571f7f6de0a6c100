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

#ifndef MIMO_CROWD_CHANNEL_HPP
#define MIMO_CROWD_CHANNEL_HPP

#include "core.hpp"
#include "rng.hpp"

#include <cmath>
#include <limits>

namespace mimo_crowd {

enum class ArrayKind { ula, upa };

// Base-station antenna array. For a ULA only `rows` is used (rows = M,
// cols = 1). For a UPA in the yz-plane, `rows` elements lie on the y axis
// and `cols` on the z axis.
struct ArrayGeometry {
    ArrayKind kind = ArrayKind::ula;
    std::size_t rows = 1;
    std::size_t cols = 1;
    double spacing_ratio = 0.5; // d / lambda

    static ArrayGeometry ula(std::size_t m, double spacing_ratio = 0.5)
    {
        ArrayGeometry g{ArrayKind::ula, m, 1, spacing_ratio};
        g.validate();
        return g;
    }

    static ArrayGeometry upa(std::size_t m1, std::size_t n1, double spacing_ratio = 0.5)
    {
        ArrayGeometry g{ArrayKind::upa, m1, n1, spacing_ratio};
        g.validate();
        return g;
    }

    std::size_t antennas() const { return rows * cols; }

    void validate() const
    {
        require(rows >= 1 && cols >= 1, "array must have at least one antenna");
        require(kind == ArrayKind::upa || cols == 1, "ULA geometry must have cols == 1");
        require(spacing_ratio > 0.0 && std::isfinite(spacing_ratio), "spacing_ratio must be > 0");
    }

    bool operator==(const ArrayGeometry &) const = default;
};

inline constexpr double los_only = std::numeric_limits<double>::infinity();

// Static per-user ground truth. kappa may be +inf (pure LOS).
struct UserProfile {
    std::size_t user_id = 0;
    double g = 1.0;     // large-scale fading amplitude
    double kappa = 1.0; // Rician factor
    double theta = pi / 2;
    double phi = 0.0; // azimuth, UPA only

    void validate() const
    {
        require(g > 0.0 && std::isfinite(g), "large-scale gain g must be > 0");
        require(kappa >= 0.0, "Rician factor must be >= 0");
        require(theta >= 0.0 && theta <= pi, "LOS AOA must lie in [0, pi]");
    }

    double los_amplitude() const
    {
        return std::isinf(kappa) ? g : g * std::sqrt(kappa / (kappa + 1.0));
    }

    double nlos_amplitude() const { return std::isinf(kappa) ? 0.0 : g / std::sqrt(kappa + 1.0); }

    // Per-element variance of the NLOS part.
    double nlos_variance() const
    {
        const double a = nlos_amplitude();
        return a * a;
    }
};

struct ChannelRealization {
    CVec h;
    CVec h_los;
    CVec h_nlos;
};

// ULA response with unit-modulus entries: element m is exp(-j m 2 pi (d/lambda) cos(theta)).
inline CVec steering_ula(const ArrayGeometry &geometry, double theta)
{
    require(geometry.kind == ArrayKind::ula, "steering_ula requires a ULA geometry");
    const auto m = static_cast<Eigen::Index>(geometry.antennas());
    const double w = 2.0 * pi * geometry.spacing_ratio * std::cos(theta);
    CVec c(m);
    for (Eigen::Index i = 0; i < m; ++i)
        c[i] = std::polar(1.0, -w * static_cast<double>(i));
    return c;
}

// UPA response, entry (m, n) has phase +2 pi (d/lambda) (m sin(phi) sin(theta) + n cos(theta)).
// Flattened with m fastest: index = n * rows + m.
inline CVec steering_upa(const ArrayGeometry &geometry, double theta, double phi)
{
    require(geometry.kind == ArrayKind::upa, "steering_upa requires a UPA geometry");
    const double k = 2.0 * pi * geometry.spacing_ratio;
    const double wy = k * std::sin(phi) * std::sin(theta);
    const double wz = k * std::cos(theta);
    CVec c(static_cast<Eigen::Index>(geometry.antennas()));
    for (std::size_t n = 0; n < geometry.cols; ++n)
        for (std::size_t m = 0; m < geometry.rows; ++m)
            c[static_cast<Eigen::Index>(n * geometry.rows + m)] =
                std::polar(1.0, wy * static_cast<double>(m) + wz * static_cast<double>(n));
    return c;
}

inline CVec steering(const ArrayGeometry &geometry, double theta, double phi = 0.0)
{
    return geometry.kind == ArrayKind::ula ? steering_ula(geometry, theta)
                                           : steering_upa(geometry, theta, phi);
}

// alpha(theta): unit-norm steering vector.
inline CVec normalized_steering(const ArrayGeometry &geometry, double theta, double phi = 0.0)
{
    return steering(geometry, theta, phi) / std::sqrt(static_cast<double>(geometry.antennas()));
}

inline CVec los_component(const UserProfile &profile, const ArrayGeometry &geometry)
{
    return profile.los_amplitude() * steering(geometry, profile.theta, profile.phi);
}

// One subframe's channel. The LOS part is a deterministic function of the
// profile, so it is bit-identical across all subframes of a superframe; the
// NLOS part consumes `rng`.
inline ChannelRealization draw_channel(const UserProfile &profile, const ArrayGeometry &geometry,
                                       RngStream &rng)
{
    const auto m = static_cast<Eigen::Index>(geometry.antennas());
    ChannelRealization out;
    out.h_los = los_component(profile, geometry);
    out.h_nlos = CVec::Zero(m);
    const double a = profile.nlos_amplitude();
    if (a > 0.0)
        for (Eigen::Index i = 0; i < m; ++i)
            out.h_nlos[i] = a * rng.cnormal();
    out.h = out.h_los + out.h_nlos;
    return out;
}

} // namespace mimo_crowd

#endif
