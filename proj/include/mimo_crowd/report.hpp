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

#ifndef MIMO_CROWD_REPORT_HPP
#define MIMO_CROWD_REPORT_HPP

#include "config.hpp"
#include "harness.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace mimo_crowd {

inline constexpr const char *csv_columns[] = {
    "snr_db",        "kappa",         "M",           "L",           "G",           "U",       "tau",
    "method",        "aoa_mode",      "trials",      "id_acc_mean", "id_acc_se",   "exact_set_rate",
    "nmse_los_mean", "nmse_upd_mean", "nmse_los_db", "nmse_upd_db", "ops_aoa",     "ops_match",
    "ops_mmse"};

inline constexpr std::size_t csv_column_count = std::size(csv_columns);

inline std::string csv_header()
{
    std::string s;
    for (std::size_t i = 0; i < csv_column_count; ++i) {
        if (i)
            s += ',';
        s += csv_columns[i];
    }
    return s;
}

inline double to_db(double v)
{
    if (std::isnan(v))
        return v;
    return 10.0 * std::log10(v);
}

inline void write_csv(std::ostream &os, const std::vector<MetricRecord> &records)
{
    os << csv_header() << '\n';
    for (const auto &r : records) {
        os << format_number(r.point.snr_db) << ',' << format_number(r.point.kappa) << ',' << r.point.antennas
           << ',' << r.point.pilots << ',' << r.point.active << ',' << r.subframes << ',' << r.tau << ','
           << r.method << ',' << r.aoa_mode << ',' << r.trials << ',' << format_number(r.id_acc_mean) << ','
           << format_number(r.id_acc_se) << ',' << format_number(r.exact_set_rate) << ','
           << format_number(r.nmse_los_mean) << ',' << format_number(r.nmse_upd_mean) << ','
           << format_number(to_db(r.nmse_los_mean)) << ',' << format_number(to_db(r.nmse_upd_mean)) << ','
           << r.ops_aoa << ',' << r.ops_match << ',' << r.ops_mmse << '\n';
    }
}

// ---------------------------------------------------------------------------
// Reading results back (plot data)
// ---------------------------------------------------------------------------

struct csv_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using CsvRow = std::map<std::string, std::string>;

inline std::vector<CsvRow> read_csv(std::istream &is)
{
    std::string line;
    if (!std::getline(is, line))
        throw csv_error("empty CSV (missing header)");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != csv_header())
        throw csv_error("CSV header does not match the result schema");
    std::vector<CsvRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        if (cells.size() != csv_column_count)
            throw csv_error("line " + std::to_string(lineno) + ": expected " +
                            std::to_string(csv_column_count) + " fields, got " + std::to_string(cells.size()));
        CsvRow row;
        for (std::size_t i = 0; i < csv_column_count; ++i)
            row[csv_columns[i]] = cells[i];
        try {
            (void)detail::parse_double("snr_db", row["snr_db"]);
        } catch (const config_error &) {
            throw csv_error("line " + std::to_string(lineno) + ": snr_db is not numeric");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

struct Curve {
    std::string name; // file stem
    std::vector<std::pair<std::string, std::string>> points;
};

// One (x = snr_db, y) curve per (method, aoa mode, kappa, M, L, G, metric).
// NMSE curves come in linear and dB form.
inline std::vector<Curve> plot_curves(const std::vector<CsvRow> &rows)
{
    static const char *metrics[] = {"id_acc_mean", "exact_set_rate", "nmse_los_mean",
                                    "nmse_upd_mean", "nmse_los_db", "nmse_upd_db"};
    std::map<std::string, Curve> curves;
    std::vector<std::string> order;
    for (const auto &row : rows) {
        const std::string stem = row.at("method") + "_" + row.at("aoa_mode") + "_kappa" + row.at("kappa") +
                                 "_M" + row.at("M") + "_L" + row.at("L") + "_G" + row.at("G");
        for (const char *metric : metrics) {
            const std::string name = stem + "_" + metric;
            auto [it, fresh] = curves.try_emplace(name, Curve{name, {}});
            if (fresh)
                order.push_back(name);
            it->second.points.emplace_back(row.at("snr_db"), row.at(metric));
        }
    }
    std::vector<Curve> out;
    for (const auto &n : order)
        out.push_back(curves.at(n));
    return out;
}

// ---------------------------------------------------------------------------
// Single-trial inspection dump
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_fixed(double v, int prec = 4)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

template <typename Seq>
std::string pattern_text(const Seq &p)
{
    std::string s = "(";
    for (std::size_t i = 0; i < std::size(p); ++i) {
        if (i)
            s += ',';
        s += std::to_string(static_cast<std::size_t>(p[i]) + 1);
    }
    return s + ")";
}

} // namespace detail

// Human-readable dump of one trial. Pilot indices are printed 1-based.
inline std::string format_inspection(const Scenario &sc, std::uint64_t trial, const TrialOutcome &outcome,
                                     const TrialDetail &det)
{
    using detail::fmt_fixed;
    using detail::pattern_text;
    const auto &cb = sc.population.codebook;
    const auto &p = sc.point;
    std::ostringstream os;
    os << "trial " << trial << "  M=" << p.antennas << " L=" << p.pilots << " G=" << p.active
       << " U=" << sc.config.subframes << " kappa=" << format_number(p.kappa)
       << " snr_db=" << format_number(p.snr_db) << " noise_var=" << format_number(sc.frame.noise_var, 6) << "\n";

    os << "\nactive users\n";
    os << "  user        g   theta(rad)  pattern\n";
    for (std::size_t i = 0; i < det.frame.active_set.size(); ++i) {
        const auto u = det.frame.active_set[i];
        const auto &pr = sc.population.profiles[u];
        os << "  " << std::setw(4) << u << "  " << fmt_fixed(pr.g) << "  " << std::setw(10) << fmt_fixed(pr.theta, 6)
           << "  " << pattern_text(cb.pattern(u)) << "\n";
    }

    const auto collisions = det.frame.collision_subframes(cb);
    os << "\npilot collisions: ";
    if (collisions.empty())
        os << "none\n";
    else {
        for (std::size_t i = 0; i < collisions.size(); ++i)
            os << (i ? ", " : "") << "subframe " << collisions[i] + 1;
        os << "\n";
        for (auto t : collisions) {
            std::map<std::size_t, std::vector<std::size_t>> by_pilot;
            for (auto u : det.frame.active_set)
                by_pilot[cb.pilot(u, t)].push_back(u);
            for (const auto &[l, users] : by_pilot)
                if (users.size() > 1) {
                    os << "  subframe " << t + 1 << " pilot " << l + 1 << ": users";
                    for (auto u : users)
                        os << ' ' << u;
                    os << "\n";
                }
        }
    }

    if (det.estimated) {
        os << "\nestimated AOAs (MUSIC, " << det.estimated->grid_resolution << " grid points)\n  ";
        for (std::size_t i = 0; i < det.estimated->angles.size(); ++i)
            os << (i ? " " : "") << fmt_fixed(det.estimated->angles[i], 6);
        os << "\n";
    }

    std::size_t proposed_idx = 0;
    std::size_t report_idx = 0;
    for (std::size_t e = 0; e < sc.evals.size(); ++e) {
        const auto &ev = sc.evals[e];
        const auto &o = outcome.evals[e];
        os << "\n[" << ev.name << " / " << ev.aoa_name() << "]";
        if (o.failed) {
            os << " failed\n";
            continue;
        }
        os << "  correct " << o.correct << "/" << o.active << "  declared " << o.declared
           << (o.exact ? "  exact set" : "") << (o.duplicate_binding ? "  duplicate binding" : "") << "\n";
        if (report_idx >= det.reports.size())
            continue;
        const auto &rep = det.reports[report_idx++];
        if (ev.method == IdMethod::threshold_baseline) {
            os << "  threshold " << format_number(default_threshold(p.antennas, p.pilots, sc.frame.noise_var,
                                                                    sc.frame.tx_power, ev.threshold_scale),
                                                  6)
               << "\n  declared users:";
            for (const auto &m : rep.matches)
                os << ' ' << m.user;
            os << "\n";
            continue;
        }
        const auto &id = det.proposed[proposed_idx];
        const auto &est = det.estimates[proposed_idx];
        ++proposed_idx;
        os << "  candidate  angle(rad)  pattern          match\n";
        for (const auto &sp : id.patterns) {
            const Match *bound = nullptr;
            for (const auto &m : rep.matches)
                if (m.candidate == sp.candidate)
                    bound = &m;
            os << "  " << std::setw(9) << sp.candidate << "  " << std::setw(10)
               << fmt_fixed(id.table.angles[sp.candidate], 6) << "  " << std::left << std::setw(15)
               << pattern_text(sp.eta) << std::right << "  ";
            if (bound)
                os << "user " << bound->user;
            else {
                const auto [u, d] = nearest_codeword(sp.eta, cb);
                if (d == 0)
                    os << "dropped (duplicate of user " << u << ")";
                else
                    os << "none (nearest user " << u << ", hamming " << d << ")";
            }
            os << "\n";
        }
        os << "  user  nmse_los    nmse_upd   (mean over subframes)\n";
        for (const auto &los : est.los) {
            const auto it = std::find(det.frame.active_set.begin(), det.frame.active_set.end(), los.user);
            if (it == det.frame.active_set.end()) {
                os << "  " << std::setw(4) << los.user << "  (not active)\n";
                continue;
            }
            const auto ai = static_cast<std::size_t>(it - det.frame.active_set.begin());
            const long slot = est.slot(los.user);
            double a = 0.0, b = 0.0;
            for (std::size_t t = 0; t < est.subframes.size(); ++t) {
                const CVec &h = det.frame.channels[t][ai].h;
                a += nmse(los.h_bar_hat, h);
                b += est.subframes[t].failed ? 1.0 : nmse(est.subframes[t].updated.col(slot), h);
            }
            const double n = static_cast<double>(est.subframes.size());
            os << "  " << std::setw(4) << los.user << "  " << std::scientific << std::setprecision(3) << a / n
               << "  " << b / n << std::defaultfloat << "\n";
        }
    }
    return os.str();
}

} // namespace mimo_crowd

#endif
