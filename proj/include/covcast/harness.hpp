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

#pragma once

#include "covcast/baselines.hpp"
#include "covcast/channel_model.hpp"
#include "covcast/interp.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace covcast {

/// A dictionary scheme paired with the metric it interpolates in.
struct SchemeSpec
{
    Scheme scheme;
    Metric metric = Metric::LogEuclidean;
};

/// Either a dictionary scheme or a reference baseline.
struct EstimatorSpec
{
    std::variant<SchemeSpec, BaselineKind> kind;

    [[nodiscard]] std::string estimator_label() const;
    [[nodiscard]] std::string metric_label() const;
};

/// Parses "<scheme>/<metric>", e.g. "kernel/log_euclidean" or "kernel(0.5)/euclidean".
SchemeSpec scheme_spec_from_string(const std::string &text);
std::string to_string(const SchemeSpec &spec);

struct ScenarioConfig
{
    std::size_t n_antennas = 10;
    ArrayKind array_kind = ArrayKind::ULA;
    std::optional<double> ula_spacing;  // default: half the downlink wavelength
    std::optional<double> square_side;  // default: ULA aperture (N - 1) * spacing
    double f_dl = 1.8e9;
    double f_ul = 2.8e9;
    double D_min = 100.0;
    double D_max = 900.0;
    double r_min = 1.0;
    double r_max = 100.0;
    std::size_t n_scatterers = 1000;
    std::size_t n_realizations = 1000;
    std::vector<std::size_t> dict_sizes{50, 100, 150, 300, 500};
    std::size_t n_queries = 200;
    double P = 1e4;  // P / D_min^2 sits 30 dB above P_N at the default D_min
    double P_N = 1e-3;
    std::vector<SchemeSpec> schemes;
    std::vector<BaselineKind> baselines;
    std::uint64_t master_seed = 1;
    std::size_t n_dictionary_redraws = 1;

    /// Default scheme and baseline lists: every scheme with every metric, and
    /// all three baselines.
    static ScenarioConfig with_defaults();

    [[nodiscard]] double effective_ula_spacing() const;
    [[nodiscard]] double effective_square_side() const;
    [[nodiscard]] std::vector<EstimatorSpec> estimators() const;

    /// Throws std::invalid_argument on violated invariants.
    void validate() const;
};

/// Strict parse: unknown keys are errors, missing keys keep their defaults.
ScenarioConfig config_from_json(const nlohmann::json &j);
ScenarioConfig load_config(const std::filesystem::path &path);
nlohmann::json config_to_json(const ScenarioConfig &config);

/// Antenna array for a scenario. Random geometries are drawn from the master
/// seed so every dictionary and query of a run shares one array.
ArrayGeometry scenario_geometry(const ScenarioConfig &config);

struct PairDraw
{
    SpdMatrix uplink;        // sample covariance
    SpdMatrix downlink;      // sample covariance
    SpdMatrix true_uplink;   // model covariance
    SpdMatrix true_downlink; // model covariance
    double ue_distance = 0.0;
};

PairDraw build_pair(const ScenarioConfig &config, const ArrayGeometry &geometry, Rng &rng);

Dictionary build_dictionary(const ScenarioConfig &config, const ArrayGeometry &geometry, std::size_t k, Rng &rng);

struct ResultRecord
{
    std::string estimator;
    std::string metric;
    std::size_t K = 0;
    std::size_t trial = 0;
    std::optional<double> mse; // absent when the estimator failed
    std::int64_t runtime_ns = 0;
    std::vector<std::string> flags;

    bool operator==(const ResultRecord &) const = default;
};

struct RunOptions
{
    unsigned threads = 1;
    /// Wall-clock runtimes make the CSV run-dependent; off by default.
    bool record_runtime = false;
};

/// Stream identifiers for derive_seed.
enum class Stream : std::uint64_t
{
    Geometry = 1,
    Dictionary = 2,
    Query = 3,
    Feedback = 4,
};

std::vector<ResultRecord> run_benchmark(const ScenarioConfig &config, const RunOptions &options = {});

/// Orders records by (estimator, metric, K, trial).
void sort_records(std::vector<ResultRecord> &records);

std::string records_to_csv(std::vector<ResultRecord> records);
void emit_csv(const std::vector<ResultRecord> &records, const std::filesystem::path &path);
std::vector<ResultRecord> read_csv(const std::filesystem::path &path);

struct SummaryRow
{
    std::string estimator;
    std::string metric;
    std::size_t K = 0;
    std::size_t count = 0;  // successful records
    std::size_t failed = 0;
    std::optional<double> mean_mse;
    std::optional<double> mean_runtime_ns;
};

std::vector<SummaryRow> summarize(const std::vector<ResultRecord> &records);

struct TimingRow
{
    std::string estimator;
    std::string metric;
    std::size_t calls = 0;
    double median_ns = 0.0;
    double mean_ns = 0.0;
};

/// Per-call wall-clock statistics at K = dict_sizes.front().
std::vector<TimingRow> timing_bench(const ScenarioConfig &config, std::size_t calls = 50);

} // namespace covcast
