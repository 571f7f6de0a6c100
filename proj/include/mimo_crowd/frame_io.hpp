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

#ifndef MIMO_CROWD_FRAME_IO_HPP
#define MIMO_CROWD_FRAME_IO_HPP

// Binary superframe dump for replay tests.
//
// Layout (all little-endian):
//   offset  0  char[8]   magic "MCFRAME1"
//   offset  8  uint64    M        antennas
//   offset 16  uint64    L        pilot length
//   offset 24  uint64    U        subframes
//   offset 32  uint64    tau_data data samples per subframe
//   offset 40  float64   noise variance sigma_w^2
//   offset 48  float64   transmit power p_t
//   offset 56  payload:
//     U pilot-phase matrices (M x L), then U data-phase matrices (M x tau_data).
//     Each matrix is row-major (antenna-major): for row m, for column n,
//     real part then imaginary part as float64.

#include "airlink.hpp"
#include "core.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

static_assert(std::endian::native == std::endian::little, "frame dump assumes a little-endian host");

namespace mimo_crowd {

inline constexpr char frame_magic[8] = {'M', 'C', 'F', 'R', 'A', 'M', 'E', '1'};

struct FrameDump {
    std::uint64_t antennas = 0;
    std::uint64_t pilot_length = 0;
    std::uint64_t subframes = 0;
    std::uint64_t data_length = 0;
    double noise_var = 0.0;
    double tx_power = 1.0;
    std::vector<CMat> y_pilot;
    std::vector<CMat> y_data;

    static FrameDump from(const SuperframeRealization &sf)
    {
        require(!sf.y_pilot.empty(), "superframe has no subframes");
        FrameDump d;
        d.antennas = static_cast<std::uint64_t>(sf.y_pilot.front().rows());
        d.pilot_length = static_cast<std::uint64_t>(sf.y_pilot.front().cols());
        d.subframes = sf.y_pilot.size();
        d.data_length = static_cast<std::uint64_t>(sf.y_data.front().cols());
        d.noise_var = sf.noise_var;
        d.tx_power = sf.tx_power;
        d.y_pilot = sf.y_pilot;
        d.y_data = sf.y_data;
        return d;
    }
};

namespace detail {

template <typename T>
void put(std::ostream &os, T v)
{
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
}

template <typename T>
T get(std::istream &is)
{
    T v{};
    if (!is.read(reinterpret_cast<char *>(&v), sizeof v))
        throw std::runtime_error("frame dump truncated");
    return v;
}

inline void put_matrix(std::ostream &os, const CMat &a)
{
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            put(os, a(r, c).real());
            put(os, a(r, c).imag());
        }
}

inline CMat get_matrix(std::istream &is, std::uint64_t rows, std::uint64_t cols)
{
    CMat a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            const double re = get<double>(is);
            const double im = get<double>(is);
            a(r, c) = {re, im};
        }
    return a;
}

} // namespace detail

inline void write_frame(std::ostream &os, const FrameDump &d)
{
    require(d.y_pilot.size() == d.subframes && d.y_data.size() == d.subframes,
            "frame dump matrix count must equal U");
    os.write(frame_magic, sizeof frame_magic);
    detail::put(os, d.antennas);
    detail::put(os, d.pilot_length);
    detail::put(os, d.subframes);
    detail::put(os, d.data_length);
    detail::put(os, d.noise_var);
    detail::put(os, d.tx_power);
    for (const auto &y : d.y_pilot) {
        require(static_cast<std::uint64_t>(y.rows()) == d.antennas &&
                    static_cast<std::uint64_t>(y.cols()) == d.pilot_length,
                "pilot matrix shape mismatch");
        detail::put_matrix(os, y);
    }
    for (const auto &y : d.y_data) {
        require(static_cast<std::uint64_t>(y.rows()) == d.antennas &&
                    static_cast<std::uint64_t>(y.cols()) == d.data_length,
                "data matrix shape mismatch");
        detail::put_matrix(os, y);
    }
    if (!os)
        throw std::runtime_error("frame dump write failed");
}

inline FrameDump read_frame(std::istream &is)
{
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, frame_magic, sizeof magic) != 0)
        throw std::runtime_error("not a frame dump (bad magic)");
    FrameDump d;
    d.antennas = detail::get<std::uint64_t>(is);
    d.pilot_length = detail::get<std::uint64_t>(is);
    d.subframes = detail::get<std::uint64_t>(is);
    d.data_length = detail::get<std::uint64_t>(is);
    d.noise_var = detail::get<double>(is);
    d.tx_power = detail::get<double>(is);
    constexpr std::uint64_t sane = std::uint64_t{1} << 20;
    if (d.antennas > sane || d.pilot_length > sane || d.subframes > sane || d.data_length > sane)
        throw std::runtime_error("frame dump header out of range");
    for (std::uint64_t t = 0; t < d.subframes; ++t)
        d.y_pilot.push_back(detail::get_matrix(is, d.antennas, d.pilot_length));
    for (std::uint64_t t = 0; t < d.subframes; ++t)
        d.y_data.push_back(detail::get_matrix(is, d.antennas, d.data_length));
    return d;
}

inline void write_frame_file(const std::string &path, const FrameDump &d)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path);
    write_frame(os, d);
}

inline FrameDump read_frame_file(const std::string &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path);
    return read_frame(is);
}

} // namespace mimo_crowd

#endif
