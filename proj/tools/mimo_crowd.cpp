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

// Command-line front end.
//
//   mimo_crowd sweep    [--preset NAME | --config PATH | --manifest PATH] [--set KEY=VALUE]...
//                       [--seed N] [--trials N] [--threads N] --out DIR
//   mimo_crowd inspect  [--preset NAME | --config PATH] [--set KEY=VALUE]... --inspect TRIAL
//                       [--point IDX] [--dump-frame PATH]
//   mimo_crowd plotdata CSV --out DIR
//
// Exit codes: 0 success, 1 usage/config error, 2 completed with a warning
// (plotdata on an empty CSV), 3 sweep aborted before all points completed.

#include <mimo_crowd/mimo_crowd.hpp>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace mimo_crowd;

namespace {

constexpr const char *tool_version = MIMO_CROWD_VERSION;

std::string read_file(const std::string &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Write to a sibling temp file, then rename into place.
void write_atomically(const fs::path &path, const std::string &content)
{
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw std::runtime_error("cannot write " + tmp.string());
        os << content;
        if (!os.flush())
            throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string utc_now()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::size_t resolve_threads(std::size_t flag)
{
    if (flag > 0)
        return flag;
    if (const char *env = std::getenv("MIMO_CROWD_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n > 0)
                return static_cast<std::size_t>(n);
        } catch (const std::exception &) {
        }
        std::cerr << "warning: ignoring invalid MIMO_CROWD_THREADS='" << env << "'\n";
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct ConfigSource {
    std::string preset;
    std::string config_path;
    std::string manifest_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;

    void add_options(CLI::App *app, bool with_manifest)
    {
        auto *p = app->add_option("--preset", preset, "Built-in experiment preset")
                      ->check(CLI::IsMember({"fig2", "fig3", "fig4"}));
        auto *c = app->add_option("--config", config_path, "Configuration file (key = value)");
        p->excludes(c);
        if (with_manifest) {
            auto *m = app->add_option("--manifest", manifest_path, "Re-run the configuration stored in a manifest");
            m->excludes(p)->excludes(c);
        }
        app->add_option("--set", overrides, "Override KEY=VALUE (repeatable)");
        app->add_option("--seed", seed, "Master seed");
        app->add_option("--trials", trials, "Trials per sweep point");
    }

    ExperimentConfig load() const
    {
        ExperimentConfig c;
        if (!preset.empty())
            c = mimo_crowd::preset(preset);
        else if (!config_path.empty())
            c = parse_config(read_file(config_path));
        else if (!manifest_path.empty()) {
            const auto j = nlohmann::json::parse(read_file(manifest_path));
            c = parse_config(j.at("config").get<std::string>());
        }
        for (const auto &o : overrides)
            apply_override(c, o);
        if (seed)
            c.seed = *seed;
        if (trials)
            c.trials = *trials;
        validate(c);
        return c;
    }
};

int cmd_sweep(const ConfigSource &src, std::size_t threads_flag, const std::string &out_dir)
{
    const ExperimentConfig cfg = src.load();
    const std::size_t threads = resolve_threads(threads_flag);
    fs::create_directories(out_dir);
    const fs::path csv_path = fs::path(out_dir) / "results.csv";
    const fs::path cfg_path = fs::path(out_dir) / "config.cfg";
    const fs::path manifest_path = fs::path(out_dir) / "manifest.json";

    const std::string started = utc_now();
    std::vector<MetricRecord> records;
    std::string status = "complete";
    std::string error;
    try {
        run_sweep_into(cfg, threads, records, [](std::size_t done, std::size_t total, const SweepPoint &p) {
            std::cerr << "[" << done << "/" << total << "] M=" << p.antennas << " L=" << p.pilots
                      << " G=" << p.active << " kappa=" << format_number(p.kappa)
                      << " snr_db=" << format_number(p.snr_db) << "\n";
        });
    } catch (const std::exception &e) {
        status = "incomplete";
        error = e.what();
    }
    if (records.empty() && status != "complete") {
        std::cerr << "error: " << error << "\n";
        return 3;
    }

    std::ostringstream csv;
    write_csv(csv, records);
    write_atomically(csv_path, csv.str());
    write_atomically(cfg_path, to_text(cfg));

    nlohmann::ordered_json m;
    m["tool"] = "mimo_crowd";
    m["version"] = tool_version;
    m["preset"] = src.preset.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(src.preset);
    m["seed"] = cfg.seed;
    m["config"] = to_text(cfg);
    m["threads"] = threads;
    m["started"] = started;
    m["finished"] = utc_now();
    m["status"] = status;
    if (!error.empty())
        m["error"] = error;
    m["sweep_points"] = sweep_points(cfg).size();
    m["records"] = records.size();
    m["outputs"] = {{"csv", csv_path.string()}, {"config", cfg_path.string()}};
    write_atomically(manifest_path, m.dump(2) + "\n");

    if (status != "complete") {
        std::cerr << "error: sweep aborted: " << error << "\n";
        return 3;
    }
    std::cerr << "wrote " << csv_path.string() << "\n";
    return 0;
}

int cmd_inspect(const ConfigSource &src, std::uint64_t trial, std::size_t point_index, const std::string &dump)
{
    const ExperimentConfig cfg = src.load();
    const auto points = sweep_points(cfg);
    if (point_index >= points.size())
        throw config_error("point: index " + std::to_string(point_index) + " out of range (" +
                           std::to_string(points.size()) + " sweep points)");
    const Scenario sc(cfg, points[point_index]);
    TrialDetail det;
    const TrialOutcome outcome = run_trial(sc, trial, &det);
    std::cout << format_inspection(sc, trial, outcome, det);
    if (!dump.empty())
        write_frame_file(dump, FrameDump::from(det.frame));
    return 0;
}

int cmd_plotdata(const std::string &csv_path, const std::string &out_dir)
{
    std::ifstream is(csv_path);
    if (!is)
        throw std::runtime_error("cannot open " + csv_path);
    const auto rows = read_csv(is);
    if (rows.empty()) {
        std::cerr << "warning: " << csv_path << " has no data rows; no curves written\n";
        return 2;
    }
    fs::create_directories(out_dir);
    const auto curves = plot_curves(rows);
    for (const auto &c : curves) {
        std::ostringstream os;
        os << "# snr_db " << c.name << "\n";
        for (const auto &[x, y] : c.points)
            os << x << ' ' << y << '\n';
        write_atomically(fs::path(out_dir) / (c.name + ".dat"), os.str());
    }
    std::cerr << "wrote " << curves.size() << " curve files to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Crowded massive-MIMO user identification and channel estimation simulator"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);

    ConfigSource sweep_src;
    std::size_t threads = 0;
    std::string out_dir;
    auto *sweep = app.add_subcommand("sweep", "Run a Monte Carlo sweep and write CSV + manifest");
    sweep_src.add_options(sweep, true);
    sweep->add_option("--threads", threads, "Worker threads (default: $MIMO_CROWD_THREADS or all cores)");
    sweep->add_option("--out", out_dir, "Output directory")->required();

    ConfigSource inspect_src;
    std::uint64_t trial = 0;
    std::size_t point = 0;
    std::string dump;
    auto *inspect = app.add_subcommand("inspect", "Print a detailed dump of one trial");
    inspect_src.add_options(inspect, false);
    inspect->add_option("--inspect,--trial", trial, "Trial index")->required();
    inspect->add_option("--point", point, "Sweep point index (default 0)");
    inspect->add_option("--dump-frame", dump, "Write the superframe's received matrices to a binary file");

    std::string csv_path;
    std::string plot_out;
    auto *plot = app.add_subcommand("plotdata", "Split a results CSV into per-curve (x, y) files");
    plot->add_option("csv", csv_path, "Results CSV")->required();
    plot->add_option("--out", plot_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*sweep)
            return cmd_sweep(sweep_src, threads, out_dir);
        if (*inspect)
            return cmd_inspect(inspect_src, trial, point, dump);
        if (*plot)
            return cmd_plotdata(csv_path, plot_out);
    } catch (const config_error &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
