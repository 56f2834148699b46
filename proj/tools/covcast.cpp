// SPDX-License-Identifier: Apache-2.0
//
// covcast: downlink covariance estimation from uplink covariance dictionaries
// Copyright (C) 2026 The covcast Authors
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

#include "covcast/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <thread>

namespace {

covcast::ScenarioConfig load(const std::string &path, const std::optional<std::uint64_t> &seed)
{
    auto config = covcast::load_config(path);
    if (seed)
        config.master_seed = *seed;
    return config;
}

void print_summary(const std::vector<covcast::SummaryRow> &rows)
{
    std::printf("%-22s %-18s %6s %6s %6s %14s\n", "estimator", "metric", "K", "count", "failed", "mean_mse");
    for (const auto &r : rows)
    {
        if (r.mean_mse)
            std::printf("%-22s %-18s %6zu %6zu %6zu %14.6g\n", r.estimator.c_str(), r.metric.c_str(), r.K, r.count, r.failed,
                        *r.mean_mse);
        else
            std::printf("%-22s %-18s %6zu %6zu %6zu %14s\n", r.estimator.c_str(), r.metric.c_str(), r.K, r.count, r.failed,
                        "-");
    }
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"covcast: downlink covariance estimation benchmark"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    bool record_runtime = false;
    bool quiet = false;
    std::size_t calls = 50;

    auto *run = app.add_subcommand("run", "Run the Monte-Carlo benchmark and write per-trial CSV records");
    run->add_option("--config", config_path, "Scenario config (JSON)")->required();
    run->add_option("--out", out_path, "Output CSV path")->required();
    run->add_option("--seed", seed, "Override master_seed");
    run->add_option("--threads", threads, "Worker threads (output does not depend on it)")->check(CLI::PositiveNumber);
    run->add_flag("--record-runtime", record_runtime, "Fill runtime_ns with measured wall time");
    run->add_flag("--quiet", quiet, "Do not print the summary table");

    auto *bench = app.add_subcommand("bench", "Time each estimator at the first dictionary size");
    bench->add_option("--config", config_path, "Scenario config (JSON)")->required();
    bench->add_option("--seed", seed, "Override master_seed");
    bench->add_option("--calls", calls, "Calls per estimator (at least 50)");

    auto *validate = app.add_subcommand("validate", "Parse a config and print the effective configuration");
    validate->add_option("--config", config_path, "Scenario config (JSON)")->required();
    validate->add_option("--seed", seed, "Override master_seed");

    CLI11_PARSE(app, argc, argv);

    try
    {
        const auto config = load(config_path, seed);
        if (*validate)
        {
            std::cout << covcast::config_to_json(config).dump(2) << "\n";
        }
        else if (*run)
        {
            const auto records = covcast::run_benchmark(config, {threads, record_runtime});
            covcast::emit_csv(records, out_path);
            if (!quiet)
                print_summary(covcast::summarize(records));
        }
        else if (*bench)
        {
            std::printf("%-22s %-18s %6s %14s %14s\n", "estimator", "metric", "calls", "median_ms", "mean_ms");
            for (const auto &r : covcast::timing_bench(config, calls))
                std::printf("%-22s %-18s %6zu %14.4f %14.4f\n", r.estimator.c_str(), r.metric.c_str(), r.calls,
                            r.median_ns * 1e-6, r.mean_ns * 1e-6);
        }
    }
    catch (const std::exception &e)
    {
        std::cerr << "covcast: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
