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

#ifndef MIMO_CROWD_CONFIG_HPP
#define MIMO_CROWD_CONFIG_HPP

// Experiment configuration as flat `key = value` text. List-valued keys take
// comma-separated values and span the sweep (Cartesian product). Lines
// starting with '#' are comments.
//
//   K                 total users                              250
//   G                 active users per superframe (list)       10
//   M                 antennas, ULA (list)                     100
//   L                 pilot length = pilot count (list)        32
//   U                 subframes per superframe                 4
//   T_c               samples per coherence block              200
//   tau               data symbols used by the MMSE update     60
//   kappa             Rician factor, "inf" allowed (list)      10
//   snr_db            p_t / sigma_w^2 in dB, "inf" allowed     -10,-5,0,5,10
//   trials            Monte Carlo trials per sweep point       1000
//   seed              master seed                              1
//   array             array kind (only "ula" end-to-end)       ula
//   spacing_ratio     d / lambda                               0.5
//   tx_power          p_t                                      1
//   methods           proposed, baseline                       proposed,baseline
//   aoa_modes         estimated, genie                         estimated
//   rv_mode           genie | estimated                        genie
//   detect            hard | soft                              hard
//   threshold_scale   baseline threshold multipliers (list)    3
//   grid_resolution   MUSIC grid points on [0, pi]             16384
//   source_count      known | eigengap                         known
//   min_cos_gap       min |cos a - cos b| among active users   0

#include "core.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mimo_crowd {

struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class AoaMode { estimated, genie };
enum class SourceCountMode { known, eigengap };

struct ExperimentConfig {
    std::size_t users = 250;
    std::vector<std::size_t> active{10};
    std::vector<std::size_t> antennas{100};
    std::vector<std::size_t> pilots{32};
    std::size_t subframes = 4;
    std::size_t coherence = 200;
    std::size_t tau = 60;
    std::vector<double> kappa{10.0};
    std::vector<double> snr_db{-10.0, -5.0, 0.0, 5.0, 10.0};
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    std::string array = "ula";
    double spacing_ratio = 0.5;
    double tx_power = 1.0;
    bool run_proposed = true;
    bool run_baseline = true;
    std::vector<AoaMode> aoa_modes{AoaMode::estimated};
    bool estimate_rv = false;
    bool soft_detection = false;
    std::vector<double> threshold_scale{3.0};
    std::size_t grid_resolution = 16384;
    SourceCountMode source_count = SourceCountMode::known;
    double min_cos_gap = 0.0;

    bool operator==(const ExperimentConfig &) const = default;
};

// ---------------------------------------------------------------------------
// Number formatting shared by config and CSV output
// ---------------------------------------------------------------------------

inline std::string format_number(double v, int digits = 10)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string &v)
{
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(trim(item));
    return out;
}

inline double parse_double(const std::string &key, const std::string &v)
{
    if (v == "inf" || v == "+inf" || v == "Inf")
        return std::numeric_limits<double>::infinity();
    if (v == "-inf")
        return -std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || std::isnan(d))
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception &) {
        throw config_error(key + ": expected a number, got '" + v + "'");
    }
}

inline std::uint64_t parse_uint(const std::string &key, const std::string &v)
{
    try {
        std::size_t used = 0;
        if (v.empty() || v[0] == '-')
            throw std::invalid_argument(v);
        const unsigned long long n = std::stoull(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return n;
    } catch (const std::exception &) {
        throw config_error(key + ": expected a non-negative integer, got '" + v + "'");
    }
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string &key, const std::string &v, F one)
{
    std::vector<T> out;
    for (const auto &item : split_list(v)) {
        if (item.empty())
            throw config_error(key + ": empty list element");
        out.push_back(one(key, item));
    }
    if (out.empty())
        throw config_error(key + ": list must not be empty");
    return out;
}

template <typename T, typename F>
std::string join(const std::vector<T> &v, F fmt)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ',';
        s += fmt(v[i]);
    }
    return s;
}

} // namespace detail

inline void apply_setting(ExperimentConfig &c, const std::string &raw_key, const std::string &raw_value)
{
    using namespace detail;
    const std::string key = trim(raw_key);
    const std::string v = trim(raw_value);
    auto size = [](const std::string &k, const std::string &s) {
        return static_cast<std::size_t>(parse_uint(k, s));
    };
    if (key == "K")
        c.users = size(key, v);
    else if (key == "G")
        c.active = parse_list<std::size_t>(key, v, size);
    else if (key == "M")
        c.antennas = parse_list<std::size_t>(key, v, size);
    else if (key == "L")
        c.pilots = parse_list<std::size_t>(key, v, size);
    else if (key == "U")
        c.subframes = size(key, v);
    else if (key == "T_c")
        c.coherence = size(key, v);
    else if (key == "tau")
        c.tau = size(key, v);
    else if (key == "kappa")
        c.kappa = parse_list<double>(key, v, parse_double);
    else if (key == "snr_db")
        c.snr_db = parse_list<double>(key, v, parse_double);
    else if (key == "trials")
        c.trials = size(key, v);
    else if (key == "seed")
        c.seed = parse_uint(key, v);
    else if (key == "array")
        c.array = v;
    else if (key == "spacing_ratio")
        c.spacing_ratio = parse_double(key, v);
    else if (key == "tx_power")
        c.tx_power = parse_double(key, v);
    else if (key == "methods") {
        c.run_proposed = c.run_baseline = false;
        for (const auto &m : split_list(v)) {
            if (m == "proposed")
                c.run_proposed = true;
            else if (m == "baseline")
                c.run_baseline = true;
            else
                throw config_error("methods: unknown method '" + m + "' (proposed, baseline)");
        }
    } else if (key == "aoa_modes") {
        c.aoa_modes = parse_list<AoaMode>(key, v, [](const std::string &k, const std::string &s) {
            if (s == "estimated")
                return AoaMode::estimated;
            if (s == "genie")
                return AoaMode::genie;
            throw config_error(k + ": unknown AOA mode '" + s + "' (estimated, genie)");
        });
    } else if (key == "rv_mode") {
        if (v != "genie" && v != "estimated")
            throw config_error("rv_mode: expected genie or estimated, got '" + v + "'");
        c.estimate_rv = v == "estimated";
    } else if (key == "detect") {
        if (v != "hard" && v != "soft")
            throw config_error("detect: expected hard or soft, got '" + v + "'");
        c.soft_detection = v == "soft";
    } else if (key == "threshold_scale")
        c.threshold_scale = parse_list<double>(key, v, parse_double);
    else if (key == "grid_resolution")
        c.grid_resolution = size(key, v);
    else if (key == "source_count") {
        if (v != "known" && v != "eigengap")
            throw config_error("source_count: expected known or eigengap, got '" + v + "'");
        c.source_count = v == "eigengap" ? SourceCountMode::eigengap : SourceCountMode::known;
    } else if (key == "min_cos_gap")
        c.min_cos_gap = parse_double(key, v);
    else
        throw config_error(key + ": unknown configuration key");
}

// `KEY=VALUE`
inline void apply_override(ExperimentConfig &c, const std::string &assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw config_error("override '" + assignment + "' is not of the form KEY=VALUE");
    apply_setting(c, assignment.substr(0, eq), assignment.substr(eq + 1));
}

inline ExperimentConfig parse_config(const std::string &text, ExperimentConfig base = {})
{
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + ": expected KEY = VALUE");
        apply_setting(base, t.substr(0, eq), t.substr(eq + 1));
    }
    return base;
}

// Canonical text form; parse_config(to_text(c)) == c.
inline std::string to_text(const ExperimentConfig &c)
{
    using detail::join;
    auto num = [](double d) { return format_number(d, 17); };
    auto uint = [](std::size_t n) { return std::to_string(n); };
    std::string methods;
    if (c.run_proposed)
        methods = "proposed";
    if (c.run_baseline)
        methods += methods.empty() ? "baseline" : ",baseline";
    std::ostringstream os;
    os << "K = " << c.users << '\n'
       << "G = " << join(c.active, uint) << '\n'
       << "M = " << join(c.antennas, uint) << '\n'
       << "L = " << join(c.pilots, uint) << '\n'
       << "U = " << c.subframes << '\n'
       << "T_c = " << c.coherence << '\n'
       << "tau = " << c.tau << '\n'
       << "kappa = " << join(c.kappa, num) << '\n'
       << "snr_db = " << join(c.snr_db, num) << '\n'
       << "trials = " << c.trials << '\n'
       << "seed = " << c.seed << '\n'
       << "array = " << c.array << '\n'
       << "spacing_ratio = " << num(c.spacing_ratio) << '\n'
       << "tx_power = " << num(c.tx_power) << '\n'
       << "methods = " << methods << '\n'
       << "aoa_modes = "
       << join(c.aoa_modes, [](AoaMode m) { return std::string(m == AoaMode::genie ? "genie" : "estimated"); })
       << '\n'
       << "rv_mode = " << (c.estimate_rv ? "estimated" : "genie") << '\n'
       << "detect = " << (c.soft_detection ? "soft" : "hard") << '\n'
       << "threshold_scale = " << join(c.threshold_scale, num) << '\n'
       << "grid_resolution = " << c.grid_resolution << '\n'
       << "source_count = " << (c.source_count == SourceCountMode::eigengap ? "eigengap" : "known") << '\n'
       << "min_cos_gap = " << num(c.min_cos_gap) << '\n';
    return os.str();
}

namespace detail {

inline std::uint64_t pow_saturated(std::size_t base, std::size_t exp)
{
    constexpr std::uint64_t cap = std::uint64_t{1} << 62;
    std::uint64_t n = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (base != 0 && n > cap / base)
            return cap;
        n *= base;
    }
    return n;
}

} // namespace detail

// Throws config_error naming the offending field.
inline void validate(const ExperimentConfig &c)
{
    auto fail = [](const std::string &msg) { throw config_error(msg); };
    if (c.users < 1)
        fail("K: must be >= 1");
    if (c.subframes < 1)
        fail("U: must be >= 1");
    if (c.coherence < 1)
        fail("T_c: must be >= 1");
    if (c.tau < 1)
        fail("tau: must be >= 1");
    if (c.trials < 1)
        fail("trials: must be >= 1");
    if (c.array != "ula")
        fail("array: only 'ula' is supported for end-to-end experiments");
    if (!(c.spacing_ratio > 0.0) || std::isinf(c.spacing_ratio))
        fail("spacing_ratio: must be > 0");
    if (!(c.tx_power > 0.0) || std::isinf(c.tx_power))
        fail("tx_power: must be > 0");
    if (!c.run_proposed && !c.run_baseline)
        fail("methods: at least one method is required");
    if (c.run_proposed && c.aoa_modes.empty())
        fail("aoa_modes: at least one mode is required");
    if (c.grid_resolution < 2)
        fail("grid_resolution: must be >= 2");
    if (c.min_cos_gap < 0.0 || c.min_cos_gap > 0.5 / c.spacing_ratio)
        fail("min_cos_gap: must lie in [0, 1/(2 spacing_ratio)]");
    for (double k : c.kappa)
        if (k < 0.0)
            fail("kappa: must be >= 0");
    for (double s : c.threshold_scale)
        if (!(s >= 0.0))
            fail("threshold_scale: must be >= 0");
    for (double s : c.snr_db)
        if (s == -std::numeric_limits<double>::infinity())
            fail("snr_db: -inf is not a valid SNR");
    for (auto m : c.antennas)
        if (m < 1)
            fail("M: must be >= 1");
    for (auto l : c.pilots) {
        if (l < 1)
            fail("L: must be >= 1");
        if (l > c.coherence)
            fail("L: must be <= T_c");
        if (c.users > detail::pow_saturated(l, c.subframes))
            fail("K: exceeds L^U = " + std::to_string(detail::pow_saturated(l, c.subframes)) +
                 " for L = " + std::to_string(l));
        if (c.tau > c.coherence - l)
            fail("tau: must be <= T_c - L");
    }
    for (auto g : c.active) {
        if (g < 1)
            fail("G: must be >= 1");
        if (g > c.users)
            fail("G: must be <= K");
        if (c.tau <= g)
            fail("tau: must be > G");
        for (auto m : c.antennas)
            if (c.run_proposed && g >= m)
                fail("G: must be < M for subspace AOA estimation");
    }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

// Keep these in sync with configs/*.cfg (a test checks it).
inline const std::map<std::string, std::string> &preset_texts()
{
    static const std::map<std::string, std::string> presets = {
        {"fig2",
         "# Identification accuracy vs SNR for several Rician factors, both methods.\n"
         "K = 250\nG = 10\nM = 100\nL = 32\nU = 4\nT_c = 200\ntau = 60\n"
         "kappa = 1,10,100\nsnr_db = -10,-5,0,5,10\ntrials = 1000\nseed = 1\n"
         "methods = proposed,baseline\naoa_modes = estimated\nthreshold_scale = 3\n"},
        {"fig3",
         "# Proposed method with genie vs estimated AOAs, two array sizes.\n"
         "K = 250\nG = 20\nM = 100,200\nL = 16\nU = 4\nT_c = 200\ntau = 60\n"
         "kappa = 10\nsnr_db = -10,-5,0,5,10\ntrials = 1000\nseed = 1\n"
         "methods = proposed\naoa_modes = genie,estimated\n"},
        {"fig4",
         "# Channel estimation NMSE vs SNR, LOS-only and updated estimators.\n"
         "K = 250\nG = 10\nM = 100\nL = 32\nU = 4\nT_c = 200\ntau = 60\n"
         "kappa = 1,10,100\nsnr_db = -20,-15,-10,-5,0,5,10,15,20\ntrials = 1000\nseed = 1\n"
         "methods = proposed,baseline\naoa_modes = estimated\nrv_mode = genie\ndetect = hard\n"},
    };
    return presets;
}

inline ExperimentConfig preset(const std::string &name)
{
    const auto &p = preset_texts();
    const auto it = p.find(name);
    if (it == p.end())
        throw config_error("preset: unknown preset '" + name + "' (fig2, fig3, fig4)");
    return parse_config(it->second);
}

} // namespace mimo_crowd

#endif
