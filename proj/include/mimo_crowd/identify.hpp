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

#ifndef MIMO_CROWD_IDENTIFY_HPP
#define MIMO_CROWD_IDENTIFY_HPP

// Active-user identification.
//
// Proposed method: every despread vector r_{t,l} is projected on the unit
// steering vector of each candidate LOS angle. For candidate k the strongest
// pilot in each subframe forms a length-U pattern; a candidate whose pattern
// equals some user's hopping pattern identifies that user as active and binds
// the candidate's angle to it. No detection threshold is involved.
//
// Baseline: a pilot is "present" in a subframe when ||r_{t,l}|| exceeds a
// threshold, and a user is active when its whole hopping pattern is present.

#include "airlink.hpp"
#include "channel.hpp"
#include "core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

namespace mimo_crowd {

// beta[k][t][l] = alpha(phi_k)^H r_{t,l}
class ProjectionTable {
public:
    ProjectionTable() = default;
    ProjectionTable(std::size_t candidates, std::size_t subframes, std::size_t pilots)
        : candidates_(candidates), subframes_(subframes), pilots_(pilots),
          beta_(candidates * subframes * pilots)
    {
    }

    std::size_t candidates() const { return candidates_; }
    std::size_t subframes() const { return subframes_; }
    std::size_t pilots() const { return pilots_; }

    cplx &operator()(std::size_t k, std::size_t t, std::size_t l)
    {
        return beta_[(k * subframes_ + t) * pilots_ + l];
    }
    cplx operator()(std::size_t k, std::size_t t, std::size_t l) const
    {
        return beta_[(k * subframes_ + t) * pilots_ + l];
    }

    std::vector<double> angles;
    std::uint64_t complex_mults = 0;

private:
    std::size_t candidates_ = 0;
    std::size_t subframes_ = 0;
    std::size_t pilots_ = 0;
    std::vector<cplx> beta_;
};

inline ProjectionTable project(const DespreadSet &despread, std::span<const double> candidates,
                               const ArrayGeometry &geometry)
{
    require(despread.antennas() == geometry.antennas() || despread.subframes() == 0,
            "despread vectors must have M entries");
    ProjectionTable table(candidates.size(), despread.subframes(), despread.pilots());
    table.angles.assign(candidates.begin(), candidates.end());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const CVec alpha = normalized_steering(geometry, candidates[k]);
        for (std::size_t t = 0; t < despread.subframes(); ++t) {
            const Eigen::RowVectorXcd row = alpha.adjoint() * despread.r[t];
            for (std::size_t l = 0; l < despread.pilots(); ++l)
                table(k, t, l) = row[static_cast<Eigen::Index>(l)];
        }
    }
    table.complex_mults = static_cast<std::uint64_t>(candidates.size() * despread.subframes() *
                                                     despread.pilots() * geometry.antennas());
    return table;
}

struct SteeringPattern {
    std::size_t candidate = 0;
    std::vector<std::size_t> eta; // 0-based pilot index per subframe
};

// Per-subframe argmax_l |beta|; ties go to the smallest l.
inline SteeringPattern extract_pattern(const ProjectionTable &table, std::size_t k)
{
    require(k < table.candidates(), "candidate index out of range");
    SteeringPattern p{k, std::vector<std::size_t>(table.subframes(), 0)};
    for (std::size_t t = 0; t < table.subframes(); ++t) {
        double best = -1.0;
        for (std::size_t l = 0; l < table.pilots(); ++l) {
            const double v = std::norm(table(k, t, l));
            if (v > best) {
                best = v;
                p.eta[t] = l;
            }
        }
    }
    return p;
}

inline std::vector<SteeringPattern> extract_patterns(const ProjectionTable &table)
{
    std::vector<SteeringPattern> out;
    out.reserve(table.candidates());
    for (std::size_t k = 0; k < table.candidates(); ++k)
        out.push_back(extract_pattern(table, k));
    return out;
}

enum class IdMethod { proposed, threshold_baseline };

inline constexpr std::size_t no_candidate = std::numeric_limits<std::size_t>::max();

struct Match {
    std::size_t user = 0;
    std::size_t candidate = no_candidate;
    double aoa = std::numeric_limits<double>::quiet_NaN();
};

struct IdentificationReport {
    IdMethod method = IdMethod::proposed;
    std::vector<Match> matches;
    std::vector<std::size_t> unmatched_candidates;
    // Set when two candidates produced the same user's pattern.
    bool duplicate_binding = false;

    const Match *find_user(std::size_t user) const
    {
        for (const auto &m : matches)
            if (m.user == user)
                return &m;
        return nullptr;
    }
};

// Mean |beta| along the candidate's own pattern.
inline double pattern_strength(const ProjectionTable &table, const SteeringPattern &p)
{
    double s = 0.0;
    for (std::size_t t = 0; t < p.eta.size(); ++t)
        s += std::abs(table(p.candidate, t, p.eta[t]));
    return p.eta.empty() ? 0.0 : s / static_cast<double>(p.eta.size());
}

// Exact full-pattern matching against the codebook. `aoas[k]` is the angle
// of candidate k. When two candidates yield the same user, the one with the
// larger mean |beta| keeps the binding (needs `table`; otherwise the lower
// candidate index wins) and the report is flagged.
inline IdentificationReport match_patterns(std::span<const SteeringPattern> patterns,
                                           const HoppingCodebook &codebook,
                                           std::span<const double> aoas,
                                           const ProjectionTable *table = nullptr)
{
    IdentificationReport report;
    report.method = IdMethod::proposed;
    std::map<std::size_t, const SteeringPattern *> by_user;
    for (const auto &p : patterns) {
        const auto user = codebook.find(p.eta);
        if (!user) {
            report.unmatched_candidates.push_back(p.candidate);
            continue;
        }
        auto [it, fresh] = by_user.emplace(*user, &p);
        if (fresh)
            continue;
        report.duplicate_binding = true;
        const SteeringPattern *loser = &p;
        if (table && pattern_strength(*table, p) > pattern_strength(*table, *it->second)) {
            loser = it->second;
            it->second = &p;
        }
        report.unmatched_candidates.push_back(loser->candidate);
    }
    for (const auto &[user, p] : by_user) {
        const double aoa =
            p->candidate < aoas.size() ? aoas[p->candidate] : std::numeric_limits<double>::quiet_NaN();
        report.matches.push_back({user, p->candidate, aoa});
    }
    std::sort(report.matches.begin(), report.matches.end(),
              [](const Match &a, const Match &b) { return a.candidate < b.candidate; });
    std::sort(report.unmatched_candidates.begin(), report.unmatched_candidates.end());
    return report;
}

// Full proposed identification: project, extract patterns, match.
struct ProposedIdentification {
    ProjectionTable table;
    std::vector<SteeringPattern> patterns;
    IdentificationReport report;
};

inline ProposedIdentification identify_users(const DespreadSet &despread,
                                             std::span<const double> candidates,
                                             const ArrayGeometry &geometry,
                                             const HoppingCodebook &codebook)
{
    ProposedIdentification out;
    out.table = project(despread, candidates, geometry);
    out.patterns = extract_patterns(out.table);
    out.report = match_patterns(out.patterns, codebook, candidates, &out.table);
    return out;
}

// Number of subframes where `pattern` differs from `user`'s codeword.
template <typename Seq>
std::size_t pattern_hamming(const Seq &pattern, const HoppingCodebook &codebook, std::size_t user)
{
    const auto code = codebook.pattern(user);
    std::size_t d = 0;
    for (std::size_t t = 0; t < code.size(); ++t)
        d += static_cast<std::size_t>(pattern[t]) != code[t];
    return d;
}

// Closest codeword in Hamming distance (diagnostic only).
template <typename Seq>
std::pair<std::size_t, std::size_t> nearest_codeword(const Seq &pattern, const HoppingCodebook &codebook)
{
    std::pair<std::size_t, std::size_t> best{0, std::numeric_limits<std::size_t>::max()};
    for (std::size_t u = 0; u < codebook.users(); ++u) {
        const auto d = pattern_hamming(pattern, codebook, u);
        if (d < best.second)
            best = {u, d};
    }
    return best;
}

// c * sqrt(M sigma^2 / (L p_t)): c times the RMS norm of a noise-only
// despread vector.
inline double default_threshold(std::size_t antennas, std::size_t pilots, double noise_var,
                                double tx_power, double scale = 3.0)
{
    return scale * std::sqrt(static_cast<double>(antennas) * noise_var /
                             (static_cast<double>(pilots) * tx_power));
}

inline IdentificationReport threshold_identify(const DespreadSet &despread,
                                               const HoppingCodebook &codebook, double threshold)
{
    require(threshold >= 0.0, "threshold must be >= 0");
    require(despread.subframes() == codebook.subframes(), "despread U must match codebook U");
    require(despread.pilots() == codebook.pilots(), "despread L must match codebook L");
    const std::size_t u_count = despread.subframes();
    const std::size_t l_count = despread.pilots();
    std::vector<char> present(u_count * l_count);
    for (std::size_t t = 0; t < u_count; ++t)
        for (std::size_t l = 0; l < l_count; ++l)
            present[t * l_count + l] = despread.at(t, l).norm() > threshold;

    IdentificationReport report;
    report.method = IdMethod::threshold_baseline;
    for (std::size_t user = 0; user < codebook.users(); ++user) {
        bool all = true;
        for (std::size_t t = 0; t < u_count && all; ++t)
            all = present[t * l_count + codebook.pilot(user, t)] != 0;
        if (all)
            report.matches.push_back({user, no_candidate, std::numeric_limits<double>::quiet_NaN()});
    }
    return report;
}

} // namespace mimo_crowd

#endif
