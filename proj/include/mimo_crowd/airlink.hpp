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

#ifndef MIMO_CROWD_AIRLINK_HPP
#define MIMO_CROWD_AIRLINK_HPP

#include "channel.hpp"
#include "core.hpp"
#include "rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace mimo_crowd {

// ---------------------------------------------------------------------------
// Pilots
// ---------------------------------------------------------------------------

// L orthogonal length-L sequences; column l is pilot l (0-based).
struct PilotBook {
    CMat pilots;

    std::size_t length() const { return static_cast<std::size_t>(pilots.rows()); }
    auto pilot(std::size_t l) const { return pilots.col(static_cast<Eigen::Index>(l)); }
};

// DFT columns: mu_k[n] = exp(-j 2 pi k n / L).
inline PilotBook build_pilot_book(std::size_t length)
{
    require(length >= 1, "pilot length must be >= 1");
    const auto n = static_cast<Eigen::Index>(length);
    PilotBook book{CMat(n, n)};
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index i = 0; i < n; ++i) {
            // Reduce k*i mod L first so the phase argument stays small.
            const auto r = static_cast<double>((k * i) % n);
            book.pilots(i, k) = std::polar(1.0, -2.0 * pi * r / static_cast<double>(n));
        }
    return book;
}

// ---------------------------------------------------------------------------
// Hopping codebook
// ---------------------------------------------------------------------------

namespace detail {

// L^U, saturated at 2^62.
inline std::uint64_t pattern_space_size(std::size_t pilots, std::size_t subframes)
{
    constexpr std::uint64_t cap = std::uint64_t{1} << 62;
    std::uint64_t n = 1;
    for (std::size_t i = 0; i < subframes; ++i) {
        if (n > cap / pilots)
            return cap;
        n *= pilots;
    }
    return n;
}

// Keyed bijection on [0, n): balanced Feistel network over the smallest even
// bit width covering n, with cycle walking.
class PatternPermutation {
public:
    PatternPermutation(std::uint64_t n, std::uint64_t key) : n_(n), key_(key)
    {
        unsigned width = 2;
        while (width < 64 && (std::uint64_t{1} << width) < n)
            width += 2;
        half_ = width / 2;
        mask_ = (std::uint64_t{1} << half_) - 1;
    }

    std::uint64_t operator()(std::uint64_t x) const
    {
        do {
            x = encrypt(x);
        } while (x >= n_);
        return x;
    }

private:
    std::uint64_t encrypt(std::uint64_t x) const
    {
        std::uint64_t left = (x >> half_) & mask_;
        std::uint64_t right = x & mask_;
        for (std::uint64_t round = 0; round < 6; ++round) {
            const std::uint64_t f = splitmix64(key_ ^ (round << 56) ^ right) & mask_;
            const std::uint64_t next = left ^ f;
            left = right;
            right = next;
        }
        return (left << half_) | right;
    }

    std::uint64_t n_;
    std::uint64_t key_;
    unsigned half_ = 1;
    std::uint64_t mask_ = 1;
};

} // namespace detail

// Injective user -> pilot-hopping pattern map. Patterns are stored 0-based;
// pilot index a_t lies in [0, L).
class HoppingCodebook {
public:
    HoppingCodebook() = default;

    // Explicit patterns, one row per user. Throws if two users share a
    // pattern or an index is out of range.
    static HoppingCodebook from_patterns(std::size_t pilots, std::size_t subframes,
                                         const std::vector<std::vector<std::size_t>> &patterns)
    {
        require(pilots >= 1 && subframes >= 1, "codebook needs L >= 1 and U >= 1");
        HoppingCodebook cb;
        cb.pilots_ = pilots;
        cb.subframes_ = subframes;
        cb.table_.reserve(patterns.size() * subframes);
        for (std::size_t u = 0; u < patterns.size(); ++u) {
            require(patterns[u].size() == subframes, "pattern length must equal U");
            for (std::size_t a : patterns[u]) {
                require(a < pilots, "pattern entry out of range [0, L)");
                cb.table_.push_back(static_cast<std::uint32_t>(a));
            }
            const auto code = cb.encode(cb.pattern(u));
            if (!cb.lookup_.emplace(code, u).second)
                throw std::invalid_argument("hopping patterns must be distinct (user " +
                                            std::to_string(u) + ")");
        }
        return cb;
    }

    std::size_t users() const { return subframes_ == 0 ? 0 : table_.size() / subframes_; }
    std::size_t pilots() const { return pilots_; }
    std::size_t subframes() const { return subframes_; }

    std::span<const std::uint32_t> pattern(std::size_t user) const
    {
        return {table_.data() + user * subframes_, subframes_};
    }

    std::size_t pilot(std::size_t user, std::size_t subframe) const
    {
        return table_[user * subframes_ + subframe];
    }

    template <typename Seq>
    std::optional<std::size_t> find(const Seq &pattern) const
    {
        if (std::size(pattern) != subframes_)
            return std::nullopt;
        for (auto a : pattern)
            if (static_cast<std::size_t>(a) >= pilots_)
                return std::nullopt;
        const auto it = lookup_.find(encode(pattern));
        if (it == lookup_.end())
            return std::nullopt;
        return it->second;
    }

private:
    template <typename Seq>
    static std::string encode(const Seq &pattern)
    {
        std::string key;
        for (auto a : pattern) {
            const auto v = static_cast<std::uint32_t>(a);
            key.append(reinterpret_cast<const char *>(&v), sizeof v);
        }
        return key;
    }

    std::size_t pilots_ = 0;
    std::size_t subframes_ = 0;
    std::vector<std::uint32_t> table_;
    std::unordered_map<std::string, std::size_t> lookup_;
};

// User u's pattern is the base-L expansion of a keyed permutation of u over
// the L^U pattern space, so distinct users always get distinct patterns.
inline HoppingCodebook build_hopping_codebook(std::size_t users, std::size_t pilots,
                                              std::size_t subframes, std::uint64_t seed)
{
    require(pilots >= 1 && subframes >= 1, "codebook needs L >= 1 and U >= 1");
    const std::uint64_t space = detail::pattern_space_size(pilots, subframes);
    if (users > space)
        throw capacity_exceeded("K = " + std::to_string(users) + " exceeds L^U = " +
                                std::to_string(space));
    const detail::PatternPermutation perm(space, stream_key(seed, Purpose::codebook, pilots, subframes));
    std::vector<std::vector<std::size_t>> patterns(users, std::vector<std::size_t>(subframes));
    for (std::size_t u = 0; u < users; ++u) {
        std::uint64_t code = perm(u);
        for (std::size_t t = 0; t < subframes; ++t) {
            patterns[u][t] = static_cast<std::size_t>(code % pilots);
            code /= pilots;
        }
    }
    return HoppingCodebook::from_patterns(pilots, subframes, patterns);
}

// ---------------------------------------------------------------------------
// Population and frame synthesis
// ---------------------------------------------------------------------------

struct UserPopulation {
    std::vector<UserProfile> profiles;
    HoppingCodebook codebook;

    std::size_t size() const { return profiles.size(); }
};

struct FrameParams {
    ArrayGeometry geometry = ArrayGeometry::ula(1);
    std::size_t pilot_length = 1;  // L
    std::size_t subframes = 1;     // U
    std::size_t data_length = 1;   // T_c - L
    double tx_power = 1.0;         // p_t
    double noise_var = 0.0;        // sigma_w^2

    void validate() const
    {
        geometry.validate();
        require(pilot_length >= 1, "L must be >= 1");
        require(subframes >= 1, "U must be >= 1");
        require(tx_power > 0.0, "p_t must be > 0");
        require(noise_var >= 0.0, "noise variance must be >= 0");
    }
};

// Identifies the random streams a superframe is drawn from.
struct TrialSeed {
    std::uint64_t seed = 0;
    std::uint64_t trial = 0;
};

struct SuperframeRealization {
    std::vector<std::size_t> active_set;
    // channels[t][g] for active user g in subframe t
    std::vector<std::vector<ChannelRealization>> channels;
    std::vector<CMat> y_pilot;  // U matrices, M x L
    std::vector<CMat> y_data;   // U matrices, M x data_length
    std::vector<CMat> x_true;   // U matrices, G x data_length
    double noise_var = 0.0;
    double tx_power = 1.0;

    std::size_t active_count() const { return active_set.size(); }

    // Subframes where two active users transmit the same pilot.
    std::vector<std::size_t> collision_subframes(const HoppingCodebook &codebook) const
    {
        std::vector<std::size_t> out;
        for (std::size_t t = 0; t < y_pilot.size(); ++t) {
            std::unordered_set<std::size_t> seen;
            for (auto u : active_set)
                if (!seen.insert(codebook.pilot(u, t)).second) {
                    out.push_back(t);
                    break;
                }
        }
        return out;
    }
};

inline cplx qam4_symbol(std::uint64_t bits)
{
    constexpr double s = 0.70710678118654752440;
    return {(bits & 1) ? s : -s, (bits & 2) ? s : -s};
}

inline SuperframeRealization synthesize_superframe(const UserPopulation &population,
                                                   std::span<const std::size_t> active_set,
                                                   const FrameParams &params, const PilotBook &pilots,
                                                   TrialSeed streams)
{
    params.validate();
    require(pilots.length() == params.pilot_length, "pilot book length must equal L");
    require(population.codebook.subframes() == params.subframes, "codebook U must match frame U");
    require(population.codebook.pilots() == params.pilot_length, "codebook L must match frame L");
    {
        std::unordered_set<std::size_t> distinct;
        for (auto u : active_set) {
            require(u < population.size(), "active user outside population");
            require(distinct.insert(u).second, "active users must be distinct");
        }
    }

    const auto m = static_cast<Eigen::Index>(params.geometry.antennas());
    const auto len = static_cast<Eigen::Index>(params.pilot_length);
    const auto data = static_cast<Eigen::Index>(params.data_length);
    const auto g = static_cast<Eigen::Index>(active_set.size());
    const double amp = std::sqrt(params.tx_power);
    const double sigma = std::sqrt(params.noise_var);

    SuperframeRealization sf;
    sf.active_set.assign(active_set.begin(), active_set.end());
    sf.noise_var = params.noise_var;
    sf.tx_power = params.tx_power;

    for (std::size_t t = 0; t < params.subframes; ++t) {
        std::vector<ChannelRealization> chans;
        chans.reserve(active_set.size());
        CMat h(m, g);
        CMat x(g, data);
        CMat yp = CMat::Zero(m, len);
        for (Eigen::Index j = 0; j < g; ++j) {
            const auto user = active_set[static_cast<std::size_t>(j)];
            RngStream nlos(streams.seed, Purpose::nlos, streams.trial, user, t);
            chans.push_back(draw_channel(population.profiles[user], params.geometry, nlos));
            h.col(j) = chans.back().h;

            RngStream sym(streams.seed, Purpose::symbols, streams.trial, user, t);
            for (Eigen::Index n = 0; n < data; ++n)
                x(j, n) = qam4_symbol(sym.next_u64());

            const auto l = static_cast<Eigen::Index>(population.codebook.pilot(user, t));
            yp.noalias() += (amp * h.col(j)) * pilots.pilots.col(l).transpose();
        }
        CMat yd = g > 0 ? CMat(amp * h * x) : CMat(CMat::Zero(m, data));

        if (sigma > 0.0) {
            RngStream wp(streams.seed, Purpose::pilot_noise, streams.trial, t);
            for (Eigen::Index c = 0; c < len; ++c)
                for (Eigen::Index r = 0; r < m; ++r)
                    yp(r, c) += sigma * wp.cnormal();
            RngStream wd(streams.seed, Purpose::data_noise, streams.trial, t);
            for (Eigen::Index c = 0; c < data; ++c)
                for (Eigen::Index r = 0; r < m; ++r)
                    yd(r, c) += sigma * wd.cnormal();
        }

        sf.channels.push_back(std::move(chans));
        sf.y_pilot.push_back(std::move(yp));
        sf.y_data.push_back(std::move(yd));
        sf.x_true.push_back(std::move(x));
    }
    return sf;
}

// ---------------------------------------------------------------------------
// Despreading
// ---------------------------------------------------------------------------

// r[t] is M x L; column l is r_{t,l} = Y_{t,p} conj(mu_l) / (L sqrt(p_t)).
struct DespreadSet {
    std::vector<CMat> r;

    std::size_t subframes() const { return r.size(); }
    std::size_t pilots() const { return r.empty() ? 0 : static_cast<std::size_t>(r.front().cols()); }
    std::size_t antennas() const { return r.empty() ? 0 : static_cast<std::size_t>(r.front().rows()); }
    auto at(std::size_t t, std::size_t l) const { return r[t].col(static_cast<Eigen::Index>(l)); }
};

inline DespreadSet despread(std::span<const CMat> y_pilot, const PilotBook &book, double tx_power)
{
    require(tx_power > 0.0, "p_t must be > 0 for despreading");
    const double scale = 1.0 / (static_cast<double>(book.length()) * std::sqrt(tx_power));
    const CMat correlator = book.pilots.conjugate() * scale;
    DespreadSet out;
    out.r.reserve(y_pilot.size());
    for (const auto &y : y_pilot) {
        require(static_cast<std::size_t>(y.cols()) == book.length(),
                "pilot-phase matrix must have L columns");
        out.r.emplace_back(y * correlator);
    }
    return out;
}

} // namespace mimo_crowd

#endif
