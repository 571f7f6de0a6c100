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

#include <mimo_crowd/airlink.hpp>
#include <mimo_crowd/identify.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace mimo_crowd;

namespace {

// Despread set with r_{t,l} given explicitly.
DespreadSet make_despread(std::size_t m, std::size_t u, std::size_t l)
{
    DespreadSet ds;
    for (std::size_t t = 0; t < u; ++t)
        ds.r.push_back(CMat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l)));
    return ds;
}

// Adds a pure-LOS user with gain g at theta on its pattern.
void add_user(DespreadSet &ds, const ArrayGeometry &geom, const HoppingCodebook &cb, std::size_t user, double g,
              double theta)
{
    const CVec h = g * steering(geom, theta);
    for (std::size_t t = 0; t < ds.subframes(); ++t)
        ds.r[t].col(static_cast<Eigen::Index>(cb.pilot(user, t))) += h;
}

std::vector<std::size_t> zero_based(std::initializer_list<std::size_t> one_based)
{
    std::vector<std::size_t> v;
    for (auto a : one_based)
        v.push_back(a - 1);
    return v;
}

} // namespace

// --- projection ---------------------------------------------------------------

TEST(Project, ExactAoaGivesGainTimesSqrtM)
{
    const auto geom = ArrayGeometry::ula(64);
    const auto cb = HoppingCodebook::from_patterns(4, 2, {{1, 3}});
    auto ds = make_despread(64, 2, 4);
    add_user(ds, geom, cb, 0, 0.7, 1.2);
    const std::vector<double> cand{1.2};
    const auto table = project(ds, cand, geom);
    EXPECT_NEAR(std::abs(table(0, 0, 1)), 0.7 * 8.0, 1e-12);
    EXPECT_NEAR(std::abs(table(0, 1, 3)), 0.7 * 8.0, 1e-12);
    EXPECT_EQ(std::abs(table(0, 0, 0)), 0.0);
}

TEST(Project, ZeroInputGivesZero)
{
    const auto geom = ArrayGeometry::ula(8);
    const auto ds = make_despread(8, 3, 5);
    const std::vector<double> cand{0.3, 2.0};
    const auto table = project(ds, cand, geom);
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t t = 0; t < 3; ++t)
            for (std::size_t l = 0; l < 5; ++l)
                EXPECT_EQ(table(k, t, l), cplx(0.0));
}

TEST(Project, DirichletSidelobe)
{
    const std::size_t m = 64;
    const auto geom = ArrayGeometry::ula(m);
    const double theta = 1.3;
    const double phi = std::acos(std::cos(theta) - 2.0 / double(m));
    const auto cb = HoppingCodebook::from_patterns(2, 1, {{0}});
    auto ds = make_despread(m, 1, 2);
    add_user(ds, geom, cb, 0, 1.0, theta);
    const std::vector<double> cand{phi};
    const double beta = std::abs(project(ds, cand, geom)(0, 0, 0));
    const double x = 2.0 * pi * 0.5 * (std::cos(theta) - std::cos(phi));
    EXPECT_NEAR(beta, std::sqrt(double(m)) * testutil::dirichlet(m, x), 1e-10);
    EXPECT_LT(beta, 0.25 * std::sqrt(double(m)));
}

TEST(Project, MatchesDirectInnerProduct)
{
    std::mt19937_64 gen(1);
    const auto geom = ArrayGeometry::ula(12);
    DespreadSet ds;
    for (int t = 0; t < 3; ++t)
        ds.r.push_back(testutil::random_cmat(gen, 12, 5));
    const std::vector<double> cand{0.1, 1.7, 3.0};
    const auto table = project(ds, cand, geom);
    EXPECT_EQ(table.complex_mults, 3u * 3u * 5u * 12u);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t t = 0; t < 3; ++t)
            for (std::size_t l = 0; l < 5; ++l) {
                const CVec a = testutil::ula_response(12, 0.5, cand[k]) / std::sqrt(12.0);
                const cplx ref = a.dot(ds.r[t].col(static_cast<Eigen::Index>(l)));
                EXPECT_LT(std::abs(table(k, t, l) - ref), 1e-12);
            }
}

// --- pattern extraction -----------------------------------------------------------

TEST(ExtractPattern, SingleUserFollowsCodeword)
{
    const auto geom = ArrayGeometry::ula(16);
    const auto cb = HoppingCodebook::from_patterns(6, 4, {{1, 0, 5, 2}});
    auto ds = make_despread(16, 4, 6);
    add_user(ds, geom, cb, 0, 0.4, 0.8);
    const std::vector<double> cand{0.8};
    const auto p = extract_pattern(project(ds, cand, geom), 0);
    EXPECT_EQ(p.eta, (std::vector<std::size_t>{1, 0, 5, 2}));
}

TEST(ExtractPattern, AllZeroTiesToFirstPilot)
{
    const auto geom = ArrayGeometry::ula(4);
    const auto ds = make_despread(4, 3, 4);
    const std::vector<double> cand{1.0};
    EXPECT_EQ(extract_pattern(project(ds, cand, geom), 0).eta, (std::vector<std::size_t>{0, 0, 0}));
}

TEST(ExtractPattern, StrongerNearbyUserDominates)
{
    const std::size_t m = 32;
    const auto geom = ArrayGeometry::ula(m);
    const auto cb = HoppingCodebook::from_patterns(4, 3, {{0, 1, 2}, {3, 2, 1}});
    auto ds = make_despread(m, 3, 4);
    const double th_strong = 1.5;
    const double th_weak = std::acos(std::cos(th_strong) + 1.0 / double(m)); // main lobe
    add_user(ds, geom, cb, 0, 1.0, th_strong);
    add_user(ds, geom, cb, 1, 0.1, th_weak);
    const std::vector<double> cand{th_weak};
    const auto table = project(ds, cand, geom);
    // Analytic magnitudes at the weak user's own angle.
    const double x = pi * (std::cos(th_strong) - std::cos(th_weak));
    const double strong = 1.0 * std::sqrt(double(m)) * testutil::dirichlet(m, x);
    const double weak = 0.1 * std::sqrt(double(m));
    ASSERT_GT(strong, weak);
    EXPECT_NEAR(std::abs(table(0, 0, 0)), strong, 1e-10);
    EXPECT_NEAR(std::abs(table(0, 0, 3)), weak, 1e-10);
    EXPECT_EQ(extract_pattern(table, 0).eta, (std::vector<std::size_t>{0, 1, 2}));
}

// --- matching ------------------------------------------------------------------------

TEST(MatchPatterns, WorkedExampleThreeUsers)
{
    // Users 1, 4, 8 (1-based) with hopping patterns (1,2,4), (3,1,4), (5,2,1);
    // the other users get unrelated patterns.
    std::vector<std::vector<std::size_t>> pats(10);
    std::size_t next = 0;
    for (std::size_t u = 0; u < 10; ++u) {
        if (u == 0)
            pats[u] = zero_based({1, 2, 4});
        else if (u == 3)
            pats[u] = zero_based({3, 1, 4});
        else if (u == 7)
            pats[u] = zero_based({5, 2, 1});
        else {
            pats[u] = {5, next % 6, (next / 6) % 6};
            ++next;
        }
    }
    const auto cb = HoppingCodebook::from_patterns(6, 3, pats);
    const std::vector<SteeringPattern> steering{
        {0, zero_based({5, 2, 1})}, {1, zero_based({1, 2, 4})}, {2, zero_based({3, 1, 4})}};
    const std::vector<double> phis{0.4, 1.1, 2.5};
    const auto rep = match_patterns(steering, cb, phis);
    ASSERT_EQ(rep.matches.size(), 3u);
    EXPECT_EQ(rep.matches[0].user, 7u);
    EXPECT_EQ(rep.matches[1].user, 0u);
    EXPECT_EQ(rep.matches[2].user, 3u);
    EXPECT_EQ(rep.find_user(0)->aoa, 1.1);
    EXPECT_EQ(rep.find_user(3)->aoa, 2.5);
    EXPECT_EQ(rep.find_user(7)->aoa, 0.4);
    EXPECT_TRUE(rep.unmatched_candidates.empty());
    EXPECT_FALSE(rep.duplicate_binding);
}

TEST(MatchPatterns, EmptyInput)
{
    const auto cb = build_hopping_codebook(5, 4, 2, 1);
    const auto rep = match_patterns(std::span<const SteeringPattern>{}, cb, std::span<const double>{});
    EXPECT_TRUE(rep.matches.empty());
    EXPECT_TRUE(rep.unmatched_candidates.empty());
}

TEST(MatchPatterns, NonCodewordIsUnmatched)
{
    const auto cb = HoppingCodebook::from_patterns(4, 2, {{0, 1}, {2, 3}});
    const std::vector<SteeringPattern> ps{{0, {1, 1}}, {1, {2, 3}}, {2, {0, 2}}};
    const std::vector<double> phis{0.1, 0.2, 0.3};
    const auto rep = match_patterns(ps, cb, phis);
    ASSERT_EQ(rep.matches.size(), 1u);
    EXPECT_EQ(rep.matches[0].user, 1u);
    EXPECT_EQ(rep.unmatched_candidates, (std::vector<std::size_t>{0, 2}));
}

TEST(MatchPatterns, PartialMatchIsRejected)
{
    const auto cb = HoppingCodebook::from_patterns(4, 4, {{0, 1, 2, 3}});
    const std::vector<SteeringPattern> ps{{0, {0, 1, 2, 0}}};
    const std::vector<double> phis{1.0};
    const auto rep = match_patterns(ps, cb, phis);
    EXPECT_TRUE(rep.matches.empty());
    EXPECT_EQ(pattern_hamming(ps[0].eta, cb, 0), 1u);
    EXPECT_EQ(nearest_codeword(ps[0].eta, cb), (std::pair<std::size_t, std::size_t>{0, 1}));
}

TEST(MatchPatterns, DuplicateCandidatesKeepStrongerAndFlag)
{
    const std::size_t m = 16;
    const auto geom = ArrayGeometry::ula(m);
    const auto cb = HoppingCodebook::from_patterns(4, 2, {{0, 1}, {2, 3}});
    auto ds = make_despread(m, 2, 4);
    add_user(ds, geom, cb, 0, 1.0, 1.0);
    // Second candidate slightly off: same pattern, smaller |beta|.
    const std::vector<double> cand{1.0 + 0.02, 1.0};
    const auto id = identify_users(ds, cand, geom, cb);
    ASSERT_EQ(id.report.matches.size(), 1u);
    EXPECT_EQ(id.report.matches[0].candidate, 1u);
    EXPECT_EQ(id.report.unmatched_candidates, (std::vector<std::size_t>{0}));
    EXPECT_TRUE(id.report.duplicate_binding);
}

// Property: a report never binds one user twice or one candidate twice.
TEST(MatchPatterns, NoDuplicateBindings)
{
    std::mt19937_64 gen(4);
    const auto cb = build_hopping_codebook(9, 3, 2, 9);
    std::uniform_int_distribution<std::size_t> pil(0, 2);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<SteeringPattern> ps;
        std::vector<double> phis;
        for (std::size_t k = 0; k < 8; ++k) {
            ps.push_back({k, {pil(gen), pil(gen)}});
            phis.push_back(0.1 * double(k));
        }
        const auto r = match_patterns(ps, cb, phis);
        std::set<std::size_t> users, cands;
        for (const auto &mt : r.matches) {
            EXPECT_TRUE(users.insert(mt.user).second);
            EXPECT_TRUE(cands.insert(mt.candidate).second);
        }
        for (auto k : r.unmatched_candidates)
            EXPECT_TRUE(cands.insert(k).second);
        EXPECT_EQ(cands.size(), 8u);
    }
}

// Property: scaling every r_{t,l} by a positive constant leaves the report unchanged.
TEST(IdentifyUsers, ScaleInvariance)
{
    std::mt19937_64 gen(5);
    const auto geom = ArrayGeometry::ula(20);
    const auto cb = build_hopping_codebook(30, 5, 3, 2);
    for (int rep = 0; rep < 30; ++rep) {
        DespreadSet ds;
        for (int t = 0; t < 3; ++t)
            ds.r.push_back(testutil::random_cmat(gen, 20, 5));
        add_user(ds, geom, cb, static_cast<std::size_t>(rep) % 30, 3.0, 0.3 + 0.08 * rep);
        std::vector<double> cand{0.3 + 0.08 * rep, 1.0, 2.0};
        const auto a = identify_users(ds, cand, geom, cb);
        DespreadSet scaled = ds;
        for (auto &r : scaled.r)
            r *= 17.5;
        const auto b = identify_users(scaled, cand, geom, cb);
        ASSERT_EQ(a.patterns.size(), b.patterns.size());
        for (std::size_t k = 0; k < a.patterns.size(); ++k)
            EXPECT_EQ(a.patterns[k].eta, b.patterns[k].eta);
        ASSERT_EQ(a.report.matches.size(), b.report.matches.size());
        for (std::size_t i = 0; i < a.report.matches.size(); ++i) {
            EXPECT_EQ(a.report.matches[i].user, b.report.matches[i].user);
            EXPECT_EQ(a.report.matches[i].candidate, b.report.matches[i].candidate);
        }
        EXPECT_EQ(a.report.unmatched_candidates, b.report.unmatched_candidates);
    }
}

TEST(IdentifyUsers, CollidingUsersStillIdentified)
{
    const std::size_t m = 32;
    const auto geom = ArrayGeometry::ula(m);
    const auto cb = HoppingCodebook::from_patterns(4, 3, {{0, 1, 2}, {0, 3, 1}, {3, 3, 3}});
    auto ds = make_despread(m, 3, 4);
    add_user(ds, geom, cb, 0, 0.6, 0.7);
    add_user(ds, geom, cb, 1, 0.9, 2.2);
    const std::vector<double> cand{0.7, 2.2};
    const auto id = identify_users(ds, cand, geom, cb);
    ASSERT_EQ(id.report.matches.size(), 2u);
    EXPECT_EQ(id.report.find_user(0)->candidate, 0u);
    EXPECT_EQ(id.report.find_user(1)->candidate, 1u);
}

// --- threshold baseline ----------------------------------------------------------------

TEST(Threshold, NoiselessSingleUser)
{
    const auto geom = ArrayGeometry::ula(8);
    const auto cb = build_hopping_codebook(20, 4, 3, 3);
    auto ds = make_despread(8, 3, 4);
    add_user(ds, geom, cb, 11, 0.5, 1.0);
    const auto rep = threshold_identify(ds, cb, 0.5 * 0.5 * std::sqrt(8.0));
    ASSERT_EQ(rep.matches.size(), 1u);
    EXPECT_EQ(rep.matches[0].user, 11u);
    EXPECT_EQ(rep.method, IdMethod::threshold_baseline);
}

TEST(Threshold, ZeroThresholdDeclaresEveryone)
{
    std::mt19937_64 gen(6);
    const auto cb = build_hopping_codebook(20, 4, 3, 3);
    DespreadSet ds;
    for (int t = 0; t < 3; ++t)
        ds.r.push_back(testutil::random_cmat(gen, 8, 4, 0.01));
    EXPECT_EQ(threshold_identify(ds, cb, 0.0).matches.size(), 20u);
}

TEST(Threshold, InfiniteThresholdDeclaresNobody)
{
    std::mt19937_64 gen(7);
    const auto cb = build_hopping_codebook(20, 4, 3, 3);
    DespreadSet ds;
    for (int t = 0; t < 3; ++t)
        ds.r.push_back(testutil::random_cmat(gen, 8, 4, 10.0));
    EXPECT_TRUE(threshold_identify(ds, cb, std::numeric_limits<double>::infinity()).matches.empty());
    EXPECT_THROW(threshold_identify(ds, cb, -1.0), std::invalid_argument);
}

TEST(Threshold, DefaultIsScaledNoiseRms)
{
    EXPECT_NEAR(default_threshold(100, 32, 0.1, 1.0), 3.0 * std::sqrt(100 * 0.1 / 32.0), 1e-12);
    EXPECT_NEAR(default_threshold(64, 8, 1.0, 2.0, 2.0), 2.0 * std::sqrt(64.0 / 16.0), 1e-12);
    EXPECT_EQ(default_threshold(64, 8, 0.0, 2.0), 0.0);
}
