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

#ifndef MIMO_CROWD_HARNESS_HPP
#define MIMO_CROWD_HARNESS_HPP

// Monte Carlo experiment engine.
//
// A sweep point fixes (M, L, G, kappa, SNR). Every trial at a sweep point
// draws one superframe and evaluates all configured methods on it, so
// methods and AOA modes are always compared on identical realizations.
// Random streams are keyed by (seed, trial, ...) only, which also gives
// common random numbers across sweep points. Trials run in parallel and are
// merged by index, so results do not depend on the thread count.

#include "airlink.hpp"
#include "aoa.hpp"
#include "channel.hpp"
#include "config.hpp"
#include "core.hpp"
#include "estimate.hpp"
#include "identify.hpp"
#include "rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace mimo_crowd {

struct SweepPoint {
    std::size_t antennas = 0;
    std::size_t pilots = 0;
    std::size_t active = 0;
    double kappa = 0.0;
    double snr_db = 0.0;
};

// Stable order: M, L, G, kappa, SNR (outer to inner).
inline std::vector<SweepPoint> sweep_points(const ExperimentConfig &c)
{
    std::vector<SweepPoint> out;
    for (auto m : c.antennas)
        for (auto l : c.pilots)
            for (auto g : c.active)
                for (double k : c.kappa)
                    for (double s : c.snr_db)
                        out.push_back({m, l, g, k, s});
    return out;
}

// One (method, AOA mode / threshold) evaluated per trial.
struct Evaluation {
    IdMethod method = IdMethod::proposed;
    AoaMode aoa = AoaMode::estimated;
    double threshold_scale = 3.0;
    std::string name;
    std::string aoa_name() const
    {
        if (method == IdMethod::threshold_baseline)
            return "none";
        return aoa == AoaMode::genie ? "genie" : "estimated";
    }
};

inline std::vector<Evaluation> evaluations(const ExperimentConfig &c)
{
    std::vector<Evaluation> out;
    if (c.run_proposed)
        for (auto mode : c.aoa_modes)
            out.push_back({IdMethod::proposed, mode, 0.0, "proposed"});
    if (c.run_baseline)
        for (double s : c.threshold_scale)
            out.push_back({IdMethod::threshold_baseline, AoaMode::estimated, s,
                           c.threshold_scale.size() > 1 ? "baseline_c" + format_number(s) : "baseline"});
    return out;
}

// Users get g ~ U[0.1, 1] (amplitude), theta ~ U[0, pi] and a common kappa.
inline std::vector<UserProfile> generate_profiles(std::size_t users, double kappa, std::uint64_t seed)
{
    std::vector<UserProfile> out(users);
    for (std::size_t u = 0; u < users; ++u) {
        RngStream rng(seed, Purpose::population, u);
        out[u].user_id = u;
        out[u].g = rng.uniform(0.1, 1.0);
        out[u].theta = rng.uniform(0.0, pi);
        out[u].kappa = kappa;
    }
    return out;
}

inline UserPopulation generate_population(const ExperimentConfig &c, std::size_t pilots, double kappa,
                                          std::uint64_t seed)
{
    return {generate_profiles(c.users, kappa, seed),
            build_hopping_codebook(c.users, pilots, c.subframes, seed)};
}

inline double noise_variance(double tx_power, double snr_db)
{
    if (std::isinf(snr_db) && snr_db > 0)
        return 0.0;
    return tx_power / std::pow(10.0, snr_db / 10.0);
}

// G distinct users, uniformly without replacement. With a positive
// min_cos_gap the draw is repeated (on fresh streams) until every pair of
// active users is at least that far apart in cos(theta).
// Distance between two arrivals in cos(theta), wrapped by the spatial period
// 1/(d/lambda): at half-wavelength spacing cos = 1 and cos = -1 coincide.
inline double cos_gap(double theta_a, double theta_b, double spacing_ratio = 0.5)
{
    const double period = 1.0 / spacing_ratio;
    const double d = std::fmod(std::abs(std::cos(theta_a) - std::cos(theta_b)), period);
    return std::min(d, period - d);
}

inline std::vector<std::size_t> draw_active_set(const std::vector<UserProfile> &profiles, std::size_t count,
                                                double min_cos_gap, std::uint64_t seed, std::uint64_t trial,
                                                double spacing_ratio = 0.5)
{
    require(count <= profiles.size(), "G must not exceed K");
    constexpr std::uint64_t max_attempts = 100000;
    for (std::uint64_t attempt = 0; attempt < max_attempts; ++attempt) {
        RngStream rng(seed, Purpose::active_set, trial, attempt);
        std::vector<std::size_t> idx(profiles.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < count; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(count);
        bool ok = true;
        for (std::size_t a = 0; a < count && ok; ++a)
            for (std::size_t b = a + 1; b < count && ok; ++b)
                ok = cos_gap(profiles[idx[a]].theta, profiles[idx[b]].theta, spacing_ratio) >= min_cos_gap;
        if (ok)
            return idx;
    }
    throw std::runtime_error("could not draw an active set satisfying min_cos_gap");
}

// Everything that is fixed for a sweep point and shared read-only by trials.
struct Scenario {
    SweepPoint point;
    ExperimentConfig config;
    UserPopulation population;
    PilotBook pilots;
    FrameParams frame;
    std::shared_ptr<const MusicSearcher> music;
    std::vector<Evaluation> evals;

    Scenario(const ExperimentConfig &c, const SweepPoint &p,
             std::shared_ptr<const MusicSearcher> shared_music = nullptr)
        : point(p), config(c), population(generate_population(c, p.pilots, p.kappa, c.seed)),
          pilots(build_pilot_book(p.pilots)), evals(evaluations(c))
    {
        frame.geometry = ArrayGeometry::ula(p.antennas, c.spacing_ratio);
        frame.pilot_length = p.pilots;
        frame.subframes = c.subframes;
        frame.data_length = c.coherence - p.pilots;
        frame.tx_power = c.tx_power;
        frame.noise_var = noise_variance(c.tx_power, p.snr_db);
        const bool needs_music =
            c.run_proposed && std::find(c.aoa_modes.begin(), c.aoa_modes.end(), AoaMode::estimated) !=
                                  c.aoa_modes.end();
        if (needs_music)
            music = shared_music ? std::move(shared_music)
                                 : std::make_shared<const MusicSearcher>(frame.geometry, c.grid_resolution);
    }
};

// Outcome of one evaluation in one trial.
struct EvalOutcome {
    std::size_t active = 0;
    std::size_t correct = 0;
    std::size_t declared = 0;
    bool exact = false;
    bool failed = false;
    bool duplicate_binding = false;
    // NMSE over correctly identified users and all subframes
    double nmse_los_sum = 0.0;
    double nmse_upd_sum = 0.0;
    std::size_t nmse_count = 0;
    // Missed users scored as 1
    double nmse_los_all_sum = 0.0;
    double nmse_upd_all_sum = 0.0;
    std::size_t nmse_all_count = 0;
    std::uint64_t ops_aoa = 0;
    std::uint64_t ops_match = 0;
    std::uint64_t ops_mmse = 0;

    double accuracy() const { return active == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(active); }
};

struct TrialOutcome {
    std::uint64_t trial = 0;
    std::vector<EvalOutcome> evals;
};

// Intermediate state of a trial, kept for inspection dumps.
struct TrialDetail {
    SuperframeRealization frame;
    DespreadSet despread;
    std::vector<double> true_aoas;          // per active user
    std::optional<AoaEstimate> estimated;   // MUSIC output, when run
    // Per evaluation; empty for the baseline.
    std::vector<ProposedIdentification> proposed;
    std::vector<IdentificationReport> reports;
    std::vector<ChannelEstimateSet> estimates;
};

namespace detail {

// Active user whose true cos(theta) is nearest to cos(angle).
inline std::size_t nearest_active(const std::vector<double> &true_aoas, double angle, double spacing_ratio)
{
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < true_aoas.size(); ++i) {
        const double d = cos_gap(true_aoas[i], angle, spacing_ratio);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

inline long active_index(const std::vector<std::size_t> &active, std::size_t user)
{
    const auto it = std::find(active.begin(), active.end(), user);
    return it == active.end() ? -1 : static_cast<long>(it - active.begin());
}

} // namespace detail

inline TrialOutcome run_trial(const Scenario &sc, std::uint64_t trial, TrialDetail *detail_out = nullptr)
{
    const auto &c = sc.config;
    const auto &geometry = sc.frame.geometry;
    const std::size_t m = geometry.antennas();
    const std::size_t g = sc.point.active;

    TrialOutcome out;
    out.trial = trial;
    out.evals.resize(sc.evals.size());

    const auto active = draw_active_set(sc.population.profiles, g, c.min_cos_gap, c.seed, trial, c.spacing_ratio);
    SuperframeRealization sf =
        synthesize_superframe(sc.population, active, sc.frame, sc.pilots, TrialSeed{c.seed, trial});
    DespreadSet ds = despread(sf.y_pilot, sc.pilots, sc.frame.tx_power);

    std::vector<double> true_aoas;
    for (auto u : active)
        true_aoas.push_back(sc.population.profiles[u].theta);

    std::optional<AoaEstimate> music_est;
    std::uint64_t music_ops = 0;
    auto estimated_angles = [&]() -> const std::vector<double> & {
        if (!music_est) {
            std::vector<CMat> blocks = sf.y_pilot;
            blocks.insert(blocks.end(), sf.y_data.begin(), sf.y_data.end());
            const CovarianceEstimate cov = sample_covariance(blocks);
            const EigenDecomposition eig = hermitian_eig(cov.r);
            std::size_t sources = g;
            if (c.source_count == SourceCountMode::eigengap)
                sources = estimate_source_count(eig.values, std::max<std::size_t>(1, m / 2));
            music_est = sc.music->search(eig, sources);
            music_ops = static_cast<std::uint64_t>(m * m * cov.snapshots + m * m * m) +
                        music_est->complex_mults;
        }
        return music_est->angles;
    };

    TrialDetail local;
    TrialDetail &det = detail_out ? *detail_out : local;

    for (std::size_t e = 0; e < sc.evals.size(); ++e) {
        const Evaluation &ev = sc.evals[e];
        EvalOutcome &o = out.evals[e];
        o.active = g;
        try {
            if (ev.method == IdMethod::threshold_baseline) {
                const double thr = default_threshold(m, sc.frame.pilot_length, sc.frame.noise_var,
                                                     sc.frame.tx_power, ev.threshold_scale);
                const IdentificationReport rep = threshold_identify(ds, sc.population.codebook, thr);
                o.declared = rep.matches.size();
                o.ops_match = static_cast<std::uint64_t>(c.subframes * sc.frame.pilot_length * m +
                                                         c.users * c.subframes);
                for (const auto &match : rep.matches) {
                    const long ai = detail::active_index(active, match.user);
                    if (ai < 0)
                        continue;
                    ++o.correct;
                    for (std::size_t t = 0; t < c.subframes; ++t) {
                        const CVec &h = sf.channels[t][static_cast<std::size_t>(ai)].h;
                        const CVec est = ds.at(t, sc.population.codebook.pilot(match.user, t));
                        const double v = nmse(est, h);
                        o.nmse_los_sum += v;
                        o.nmse_upd_sum += v;
                        ++o.nmse_count;
                    }
                }
                o.nmse_los_all_sum = o.nmse_los_sum + static_cast<double>((g - o.correct) * c.subframes);
                o.nmse_upd_all_sum = o.nmse_upd_sum + static_cast<double>((g - o.correct) * c.subframes);
                o.nmse_all_count = g * c.subframes;
                o.exact = o.correct == g && o.declared == g;
                if (detail_out)
                    det.reports.push_back(rep);
                continue;
            }

            const std::vector<double> &candidates = ev.aoa == AoaMode::genie ? true_aoas : estimated_angles();
            if (ev.aoa == AoaMode::estimated)
                o.ops_aoa = music_ops;
            ProposedIdentification id = identify_users(ds, candidates, geometry, sc.population.codebook);
            o.ops_match = id.table.complex_mults +
                          static_cast<std::uint64_t>(candidates.size() * c.subframes * sc.frame.pilot_length);
            o.declared = id.report.matches.size();
            o.duplicate_binding = id.report.duplicate_binding;

            std::vector<double> priors;
            for (const auto &match : id.report.matches)
                priors.push_back(sc.population.profiles[match.user].nlos_variance());
            EstimatorOptions opts;
            opts.tau = c.tau;
            opts.detect = c.soft_detection ? DetectMode::soft : DetectMode::hard;
            opts.estimate_rv = c.estimate_rv;
            ChannelEstimateSet est = estimate_channels(sf.y_data, id.table, id.report, sc.population.codebook,
                                                       geometry, sc.frame.tx_power, sc.frame.noise_var, priors,
                                                       opts);
            o.ops_mmse = est.complex_mults;

            for (const auto &match : id.report.matches) {
                const long ai = detail::active_index(active, match.user);
                if (ai < 0)
                    continue;
                if (detail::nearest_active(true_aoas, match.aoa, c.spacing_ratio) != static_cast<std::size_t>(ai))
                    continue;
                ++o.correct;
                const long slot = est.slot(match.user);
                if (slot < 0)
                    continue;
                const auto &los = est.los[static_cast<std::size_t>(slot)];
                for (std::size_t t = 0; t < c.subframes; ++t) {
                    const CVec &h = sf.channels[t][static_cast<std::size_t>(ai)].h;
                    const auto &sub = est.subframes[t];
                    o.nmse_los_sum += nmse(los.h_bar_hat, h);
                    o.nmse_upd_sum += sub.failed ? 1.0 : nmse(sub.updated.col(slot), h);
                    ++o.nmse_count;
                }
            }
            const double missed = static_cast<double>(g * c.subframes - o.nmse_count);
            o.nmse_los_all_sum = o.nmse_los_sum + missed;
            o.nmse_upd_all_sum = o.nmse_upd_sum + missed;
            o.nmse_all_count = g * c.subframes;
            o.exact = o.correct == g && o.declared == g;
            if (detail_out) {
                det.reports.push_back(id.report);
                det.proposed.push_back(std::move(id));
                det.estimates.push_back(std::move(est));
            }
        } catch (const std::exception &) {
            o = EvalOutcome{};
            o.active = g;
            o.failed = true;
            o.nmse_los_all_sum = o.nmse_upd_all_sum = static_cast<double>(g * c.subframes);
            o.nmse_all_count = g * c.subframes;
        }
    }

    if (detail_out) {
        det.true_aoas = true_aoas;
        det.estimated = music_est;
        det.despread = std::move(ds);
        det.frame = std::move(sf);
    }
    return out;
}

struct MetricRecord {
    SweepPoint point;
    std::size_t subframes = 0;
    std::size_t tau = 0;
    std::string method;
    std::string aoa_mode;
    double threshold_scale = 0.0;
    std::size_t trials = 0;
    double id_acc_mean = 0.0;
    double id_acc_se = 0.0;
    double exact_set_rate = 0.0;
    double nmse_los_mean = 0.0; // over correctly identified users
    double nmse_upd_mean = 0.0;
    double nmse_los_all_mean = 0.0; // missed users scored as 1
    double nmse_upd_all_mean = 0.0;
    std::size_t failures = 0;
    std::size_t duplicate_bindings = 0;
    std::uint64_t ops_aoa = 0;
    std::uint64_t ops_match = 0;
    std::uint64_t ops_mmse = 0;
};

inline std::vector<MetricRecord> aggregate(const Scenario &sc, const std::vector<TrialOutcome> &trials)
{
    std::vector<MetricRecord> out;
    const double n = static_cast<double>(trials.size());
    for (std::size_t e = 0; e < sc.evals.size(); ++e) {
        MetricRecord r;
        r.point = sc.point;
        r.subframes = sc.config.subframes;
        r.tau = sc.config.tau;
        r.method = sc.evals[e].name;
        r.aoa_mode = sc.evals[e].aoa_name();
        r.threshold_scale = sc.evals[e].threshold_scale;
        r.trials = trials.size();
        double acc = 0.0, acc2 = 0.0, exact = 0.0;
        double los = 0.0, upd = 0.0, los_all = 0.0, upd_all = 0.0;
        std::size_t cnt = 0, cnt_all = 0;
        for (const auto &t : trials) {
            const EvalOutcome &o = t.evals[e];
            const double a = o.accuracy();
            acc += a;
            acc2 += a * a;
            exact += o.exact ? 1.0 : 0.0;
            los += o.nmse_los_sum;
            upd += o.nmse_upd_sum;
            cnt += o.nmse_count;
            los_all += o.nmse_los_all_sum;
            upd_all += o.nmse_upd_all_sum;
            cnt_all += o.nmse_all_count;
            r.failures += o.failed ? 1 : 0;
            r.duplicate_bindings += o.duplicate_binding ? 1 : 0;
            r.ops_aoa += o.ops_aoa;
            r.ops_match += o.ops_match;
            r.ops_mmse += o.ops_mmse;
        }
        if (n > 0) {
            r.id_acc_mean = acc / n;
            r.exact_set_rate = exact / n;
            if (n > 1) {
                const double var = std::max(0.0, (acc2 - n * r.id_acc_mean * r.id_acc_mean) / (n - 1.0));
                r.id_acc_se = std::sqrt(var / n);
            }
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        r.nmse_los_mean = cnt ? los / static_cast<double>(cnt) : nan;
        r.nmse_upd_mean = cnt ? upd / static_cast<double>(cnt) : nan;
        r.nmse_los_all_mean = cnt_all ? los_all / static_cast<double>(cnt_all) : nan;
        r.nmse_upd_all_mean = cnt_all ? upd_all / static_cast<double>(cnt_all) : nan;
        out.push_back(std::move(r));
    }
    return out;
}

// Runs `body(i)` for i in [0, n) on `threads` workers.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)> &body)
{
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load())
                    return;
                try {
                    body(i);
                } catch (...) {
                    if (!failed.exchange(true))
                        error = std::current_exception();
                }
            }
        });
    for (auto &t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

inline std::vector<TrialOutcome> run_trials(const Scenario &sc, std::size_t trials, std::size_t threads)
{
    std::vector<TrialOutcome> out(trials);
    parallel_for(trials, threads, [&](std::size_t i) { out[i] = run_trial(sc, i); });
    return out;
}

using ProgressFn = std::function<void(std::size_t done, std::size_t total, const SweepPoint &)>;

// Appends one record per (sweep point, evaluation) to `records` as points
// complete, so a caller still holds partial results if a later point throws.
inline void run_sweep_into(const ExperimentConfig &c, std::size_t threads, std::vector<MetricRecord> &records,
                           const ProgressFn &progress = {})
{
    validate(c);
    const auto points = sweep_points(c);
    std::shared_ptr<const MusicSearcher> music;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto &p = points[i];
        // Reuse the grid steering matrix while M stays the same.
        if (music && music->geometry().antennas() != p.antennas)
            music.reset();
        Scenario sc(c, p, music);
        music = sc.music;
        const auto trials = run_trials(sc, c.trials, threads);
        auto recs = aggregate(sc, trials);
        records.insert(records.end(), recs.begin(), recs.end());
        if (progress)
            progress(i + 1, points.size(), p);
    }
}

inline std::vector<MetricRecord> run_sweep(const ExperimentConfig &c, std::size_t threads,
                                           const ProgressFn &progress = {})
{
    std::vector<MetricRecord> records;
    run_sweep_into(c, threads, records, progress);
    return records;
}

} // namespace mimo_crowd

#endif
