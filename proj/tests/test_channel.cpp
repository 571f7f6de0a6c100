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

#include <mimo_crowd/channel.hpp>
#include <mimo_crowd/rng.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace mimo_crowd;

namespace {

void expect_near(cplx a, cplx b, double tol = 1e-12)
{
    EXPECT_NEAR(a.real(), b.real(), tol);
    EXPECT_NEAR(a.imag(), b.imag(), tol);
}

} // namespace

// --- rng -------------------------------------------------------------------

TEST(Rng, StreamsAreReproducible)
{
    RngStream a(7, Purpose::nlos, 1, 2, 3);
    RngStream b(7, Purpose::nlos, 1, 2, 3);
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, StreamsDifferByEveryKeyField)
{
    std::set<std::uint64_t> keys;
    keys.insert(stream_key(1, Purpose::nlos, 0, 0, 0));
    keys.insert(stream_key(2, Purpose::nlos, 0, 0, 0));
    keys.insert(stream_key(1, Purpose::symbols, 0, 0, 0));
    keys.insert(stream_key(1, Purpose::nlos, 1, 0, 0));
    keys.insert(stream_key(1, Purpose::nlos, 0, 1, 0));
    keys.insert(stream_key(1, Purpose::nlos, 0, 0, 1));
    EXPECT_EQ(keys.size(), 6u);
}

TEST(Rng, UniformMomentsAndRange)
{
    RngStream r(3, Purpose::test);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        s += u;
        s2 += u * u;
    }
    const double mean = s / n;
    EXPECT_NEAR(mean, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_NEAR(s2 / n - mean * mean, 1.0 / 12.0, 2e-3);
}

TEST(Rng, BelowIsUnbiasedOverSmallRange)
{
    RngStream r(5, Purpose::test);
    std::vector<int> hist(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i)
        ++hist[r.below(7)];
    for (int h : hist)
        EXPECT_NEAR(h, n / 7.0, 4.0 * std::sqrt(n / 7.0));
}

TEST(Rng, ComplexNormalHasUnitCircularVariance)
{
    RngStream r(11, Purpose::test);
    const int n = 200000;
    double re2 = 0.0, im2 = 0.0, reim = 0.0;
    cplx mean = 0.0;
    for (int i = 0; i < n; ++i) {
        const cplx z = r.cnormal();
        mean += z;
        re2 += z.real() * z.real();
        im2 += z.imag() * z.imag();
        reim += z.real() * z.imag();
    }
    EXPECT_NEAR(std::abs(mean / double(n)), 0.0, 0.01);
    EXPECT_NEAR(re2 / n, 0.5, 0.01);
    EXPECT_NEAR(im2 / n, 0.5, 0.01);
    EXPECT_NEAR(reim / n, 0.0, 0.01);
}

// --- geometry & steering ----------------------------------------------------

TEST(Geometry, RejectsInvalidShapes)
{
    EXPECT_THROW(ArrayGeometry::ula(0), std::invalid_argument);
    EXPECT_THROW(ArrayGeometry::ula(4, 0.0), std::invalid_argument);
    EXPECT_THROW(ArrayGeometry::upa(0, 3), std::invalid_argument);
    EXPECT_EQ(ArrayGeometry::upa(3, 5).antennas(), 15u);
}

TEST(SteeringUla, SingleElementIsOne)
{
    const CVec c = steering_ula(ArrayGeometry::ula(1), 0.3);
    ASSERT_EQ(c.size(), 1);
    expect_near(c[0], 1.0);
}

TEST(SteeringUla, BroadsideIsAllOnes)
{
    const CVec c = steering_ula(ArrayGeometry::ula(4), pi / 2);
    for (Eigen::Index i = 0; i < 4; ++i)
        expect_near(c[i], 1.0);
}

TEST(SteeringUla, EndfireTwoElements)
{
    const CVec c = steering_ula(ArrayGeometry::ula(2), 0.0);
    expect_near(c[0], 1.0);
    expect_near(c[1], -1.0);
}

TEST(SteeringUla, MatchesPhaseFormula)
{
    for (double d : {0.25, 0.5, 0.8})
        for (double th : {0.0, 0.4, 1.3, 2.9, pi}) {
            const CVec got = steering_ula(ArrayGeometry::ula(17, d), th);
            EXPECT_LT((got - testutil::ula_response(17, d, th)).norm(), 1e-12);
        }
}

TEST(SteeringUla, UnitModulusAndNormProperty)
{
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> ang(0.0, pi);
    for (std::size_t m : {1u, 2u, 8u, 64u, 257u})
        for (int rep = 0; rep < 20; ++rep) {
            const CVec c = steering_ula(ArrayGeometry::ula(m), ang(gen));
            for (Eigen::Index i = 0; i < c.size(); ++i)
                EXPECT_NEAR(std::abs(c[i]), 1.0, 1e-12);
            EXPECT_NEAR(c.squaredNorm(), static_cast<double>(m), 1e-9);
            EXPECT_NEAR(normalized_steering(ArrayGeometry::ula(m), 0.7).norm(), 1.0, 1e-12);
        }
}

TEST(SteeringUla, DistinctCosinesAreNotParallel)
{
    const auto g = ArrayGeometry::ula(16);
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> ang(0.0, pi);
    for (int rep = 0; rep < 100; ++rep) {
        const double a = ang(gen), b = ang(gen);
        if (std::abs(std::cos(a) - std::cos(b)) < 1e-6)
            continue;
        const double ip = std::abs(normalized_steering(g, a).dot(normalized_steering(g, b)));
        EXPECT_LT(ip, 1.0);
        // Closed form of the normalized inner product.
        const double x = 2.0 * pi * 0.5 * (std::cos(a) - std::cos(b));
        EXPECT_NEAR(ip, testutil::dirichlet(16, x), 1e-12);
    }
}

TEST(SteeringUpa, SingleElementIsOne)
{
    const CVec c = steering_upa(ArrayGeometry::upa(1, 1), 0.4, 1.1);
    ASSERT_EQ(c.size(), 1);
    expect_near(c[0], 1.0);
}

TEST(SteeringUpa, BroadsideZeroAzimuthIsAllOnes)
{
    const CVec c = steering_upa(ArrayGeometry::upa(3, 2), pi / 2, 0.0);
    for (Eigen::Index i = 0; i < c.size(); ++i)
        expect_near(c[i], 1.0);
}

TEST(SteeringUpa, TwoByTwoAtZenithFollowsOuterIndex)
{
    const CVec c = steering_upa(ArrayGeometry::upa(2, 2), 0.0, 0.0);
    expect_near(c[0], 1.0);
    expect_near(c[1], 1.0);
    expect_near(c[2], -1.0);
    expect_near(c[3], -1.0);
}

TEST(SteeringUpa, EntryPhasesAndOrdering)
{
    const auto g = ArrayGeometry::upa(3, 4, 0.5);
    const double th = 0.9, ph = 0.6;
    const CVec c = steering_upa(g, th, ph);
    for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t m = 0; m < 3; ++m) {
            const double phase = pi * (double(m) * std::sin(ph) * std::sin(th) + double(n) * std::cos(th));
            expect_near(c[static_cast<Eigen::Index>(n * 3 + m)], std::polar(1.0, phase));
        }
    EXPECT_NEAR(c.squaredNorm(), 12.0, 1e-9);
}

TEST(SteeringUpa, KindMismatchThrows)
{
    EXPECT_THROW(steering_upa(ArrayGeometry::ula(4), 0.1, 0.2), std::invalid_argument);
    EXPECT_THROW(steering_ula(ArrayGeometry::upa(2, 2), 0.1), std::invalid_argument);
}

// --- channel draws ----------------------------------------------------------

TEST(Channel, LosOnlyLimit)
{
    UserProfile p{0, 1.0, los_only, 0.0, 0.0};
    RngStream rng(1, Purpose::test);
    const auto ch = draw_channel(p, ArrayGeometry::ula(2), rng);
    expect_near(ch.h[0], 1.0);
    expect_near(ch.h[1], -1.0);
    EXPECT_EQ(ch.h_nlos.norm(), 0.0);
}

TEST(Channel, LosEnergyPlugIn)
{
    UserProfile p{0, 0.5, 1.0, 1.2, 0.0};
    RngStream rng(1, Purpose::test);
    const auto ch = draw_channel(p, ArrayGeometry::ula(32), rng);
    EXPECT_NEAR(ch.h_los.squaredNorm() / (32 * 0.125), 1.0, 1e-12);
}

TEST(Channel, DecompositionIsExact)
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        UserProfile p{0, 0.1 + 0.9 * u(gen), 20.0 * u(gen), pi * u(gen), 0.0};
        RngStream rng(rep, Purpose::test);
        const auto ch = draw_channel(p, ArrayGeometry::ula(24), rng);
        EXPECT_EQ((ch.h - (ch.h_los + ch.h_nlos)).norm(), 0.0);
        const double expect = 24 * p.g * p.g * p.kappa / (p.kappa + 1.0);
        EXPECT_NEAR(ch.h_los.squaredNorm(), expect, 1e-12 * std::max(1.0, expect));
    }
}

TEST(Channel, RayleighEnergyMoment)
{
    UserProfile p{0, 0.7, 0.0, 1.0, 0.0};
    const auto g = ArrayGeometry::ula(4);
    RngStream rng(9, Purpose::test);
    double e = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto ch = draw_channel(p, g, rng);
        ASSERT_EQ(ch.h_los.norm(), 0.0);
        e += ch.h.squaredNorm() / 4.0;
    }
    EXPECT_NEAR(e / n / (0.49), 1.0, 0.02);
}

TEST(Channel, NlosElementVarianceWithinThreeSe)
{
    UserProfile p{0, 0.8, 3.0, 0.5, 0.0};
    const auto g = ArrayGeometry::ula(2);
    RngStream rng(10, Purpose::test);
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto ch = draw_channel(p, g, rng);
        const double v = std::norm(ch.h_nlos[0]);
        s += v;
        s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, 0.64 / 4.0, 3.0 * se);
}

TEST(Channel, LosIsIdenticalAcrossDraws)
{
    UserProfile p{3, 0.4, 10.0, 2.2, 0.0};
    const auto g = ArrayGeometry::ula(16);
    RngStream r1(1, Purpose::nlos, 0, 3, 0), r2(1, Purpose::nlos, 0, 3, 1);
    const auto a = draw_channel(p, g, r1);
    const auto b = draw_channel(p, g, r2);
    EXPECT_TRUE(a.h_los == b.h_los);
    EXPECT_FALSE(a.h_nlos == b.h_nlos);
}

TEST(Channel, ProfileValidation)
{
    EXPECT_THROW((UserProfile{0, 0.0, 1.0, 1.0, 0.0}.validate()), std::invalid_argument);
    EXPECT_THROW((UserProfile{0, 1.0, -1.0, 1.0, 0.0}.validate()), std::invalid_argument);
    EXPECT_THROW((UserProfile{0, 1.0, 1.0, 4.0, 0.0}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((UserProfile{0, 1.0, los_only, pi, 0.0}.validate()));
}
