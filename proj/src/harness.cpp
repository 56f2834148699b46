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

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

namespace covcast {

// ---- Labels ------------------------------------------------------------

std::string EstimatorSpec::estimator_label() const
{
    if (const auto *s = std::get_if<SchemeSpec>(&kind))
        return s->scheme.label();
    return to_string(std::get<BaselineKind>(kind));
}

std::string EstimatorSpec::metric_label() const
{
    if (const auto *s = std::get_if<SchemeSpec>(&kind))
        return to_string(s->metric);
    return "none";
}

SchemeSpec scheme_spec_from_string(const std::string &text)
{
    const auto slash = text.rfind('/');
    if (slash == std::string::npos)
        throw std::invalid_argument("scheme '" + text + "' must be written as <scheme>/<metric>");
    return {scheme_from_string(text.substr(0, slash)), metric_from_string(text.substr(slash + 1))};
}

std::string to_string(const SchemeSpec &spec)
{
    return spec.scheme.label() + "/" + to_string(spec.metric);
}

// ---- Configuration -----------------------------------------------------

ScenarioConfig ScenarioConfig::with_defaults()
{
    ScenarioConfig c;
    for (auto kind : {SchemeKind::NearestNeighbor, SchemeKind::Mirror, SchemeKind::Kernel})
        for (Metric m : all_metrics)
            c.schemes.push_back({Scheme{kind, std::nullopt}, m});
    c.baselines = {BaselineKind::NoConversion, BaselineKind::Spline, BaselineKind::PerfectFeedback};
    return c;
}

double ScenarioConfig::effective_ula_spacing() const
{
    return ula_spacing.value_or(speed_of_light / f_dl / 2.0);
}

double ScenarioConfig::effective_square_side() const
{
    if (square_side)
        return *square_side;
    return double(std::max<std::size_t>(n_antennas, 2) - 1) * effective_ula_spacing();
}

std::vector<EstimatorSpec> ScenarioConfig::estimators() const
{
    std::vector<EstimatorSpec> out;
    for (const auto &s : schemes)
        out.push_back({s});
    for (auto b : baselines)
        out.push_back({b});
    return out;
}

void ScenarioConfig::validate() const
{
    auto require = [](bool ok, const std::string &what) {
        if (!ok)
            throw std::invalid_argument("invalid config: " + what);
    };
    require(n_antennas >= 1, "n_antennas must be >= 1");
    require(effective_ula_spacing() > 0.0, "ula_spacing must be positive");
    require(effective_square_side() > 0.0, "square_side must be positive");
    require(f_dl > 0.0 && f_ul > 0.0, "frequencies must be positive");
    require(D_min > 0.0 && D_min < D_max, "require 0 < D_min < D_max");
    require(r_min > 0.0 && r_min <= r_max, "require 0 < r_min <= r_max");
    require(n_scatterers >= 1, "n_scatterers must be >= 1");
    require(n_realizations >= n_antennas, "n_realizations must be >= n_antennas");
    require(!dict_sizes.empty(), "dict_sizes must not be empty");
    for (auto k : dict_sizes)
        require(k >= 1, "every dictionary size must be >= 1");
    require(n_queries >= 1, "n_queries must be >= 1");
    require(P > 0.0, "P must be positive");
    require(P_N > 0.0, "P_N must be positive");
    require(n_dictionary_redraws >= 1, "n_dictionary_redraws must be >= 1");
    require(!schemes.empty() || !baselines.empty(), "no estimators configured");
    if (std::find(baselines.begin(), baselines.end(), BaselineKind::Spline) != baselines.end())
        require(f_dl <= f_ul, "the spline baseline requires f_dl <= f_ul");
}

ScenarioConfig config_from_json(const nlohmann::json &j)
{
    if (!j.is_object())
        throw std::invalid_argument("config must be a JSON object");
    ScenarioConfig c = ScenarioConfig::with_defaults();
    for (const auto &[key, value] : j.items())
    {
        try
        {
            if (key == "n_antennas")
                c.n_antennas = value.get<std::size_t>();
            else if (key == "array_kind")
                c.array_kind = array_kind_from_string(value.get<std::string>());
            else if (key == "ula_spacing")
                c.ula_spacing = value.get<double>();
            else if (key == "square_side")
                c.square_side = value.get<double>();
            else if (key == "f_dl")
                c.f_dl = value.get<double>();
            else if (key == "f_ul")
                c.f_ul = value.get<double>();
            else if (key == "D_min")
                c.D_min = value.get<double>();
            else if (key == "D_max")
                c.D_max = value.get<double>();
            else if (key == "r_min")
                c.r_min = value.get<double>();
            else if (key == "r_max")
                c.r_max = value.get<double>();
            else if (key == "n_scatterers")
                c.n_scatterers = value.get<std::size_t>();
            else if (key == "n_realizations")
                c.n_realizations = value.get<std::size_t>();
            else if (key == "dict_sizes")
                c.dict_sizes = value.get<std::vector<std::size_t>>();
            else if (key == "n_queries")
                c.n_queries = value.get<std::size_t>();
            else if (key == "P")
                c.P = value.get<double>();
            else if (key == "P_N")
                c.P_N = value.get<double>();
            else if (key == "schemes")
            {
                c.schemes.clear();
                for (const auto &s : value)
                    c.schemes.push_back(scheme_spec_from_string(s.get<std::string>()));
            }
            else if (key == "baselines")
            {
                c.baselines.clear();
                for (const auto &b : value)
                    c.baselines.push_back(baseline_from_string(b.get<std::string>()));
            }
            else if (key == "master_seed")
                c.master_seed = value.get<std::uint64_t>();
            else if (key == "n_dictionary_redraws")
                c.n_dictionary_redraws = value.get<std::size_t>();
            else
                throw std::invalid_argument("unknown key");
        }
        catch (const nlohmann::json::exception &e)
        {
            throw std::invalid_argument("config key '" + key + "': " + e.what());
        }
        catch (const std::invalid_argument &e)
        {
            throw std::invalid_argument("config key '" + key + "': " + e.what());
        }
    }
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file '" + path.string() + "'");
    nlohmann::json j;
    try
    {
        in >> j;
    }
    catch (const nlohmann::json::parse_error &e)
    {
        throw std::invalid_argument("config file '" + path.string() + "': " + e.what());
    }
    return config_from_json(j);
}

nlohmann::json config_to_json(const ScenarioConfig &c)
{
    nlohmann::json j;
    j["n_antennas"] = c.n_antennas;
    j["array_kind"] = to_string(c.array_kind);
    j["ula_spacing"] = c.effective_ula_spacing();
    j["square_side"] = c.effective_square_side();
    j["f_dl"] = c.f_dl;
    j["f_ul"] = c.f_ul;
    j["D_min"] = c.D_min;
    j["D_max"] = c.D_max;
    j["r_min"] = c.r_min;
    j["r_max"] = c.r_max;
    j["n_scatterers"] = c.n_scatterers;
    j["n_realizations"] = c.n_realizations;
    j["dict_sizes"] = c.dict_sizes;
    j["n_queries"] = c.n_queries;
    j["P"] = c.P;
    j["P_N"] = c.P_N;
    auto &schemes = j["schemes"] = nlohmann::json::array();
    for (const auto &s : c.schemes)
        schemes.push_back(to_string(s));
    auto &baselines = j["baselines"] = nlohmann::json::array();
    for (auto b : c.baselines)
        baselines.push_back(to_string(b));
    j["master_seed"] = c.master_seed;
    j["n_dictionary_redraws"] = c.n_dictionary_redraws;
    return j;
}

// ---- Data generation ---------------------------------------------------

ArrayGeometry scenario_geometry(const ScenarioConfig &config)
{
    if (config.array_kind == ArrayKind::ULA)
        return make_ula(config.n_antennas, config.effective_ula_spacing());
    Rng rng(derive_seed(config.master_seed, Stream::Geometry));
    return make_random_square(config.n_antennas, config.effective_square_side(), rng);
}

PairDraw build_pair(const ScenarioConfig &config, const ArrayGeometry &geometry, Rng &rng)
{
    const Point2 ref = geometry.reference_point();
    const Point2 ue = place_ue(rng, config.D_min, config.D_max, ref);
    const double radius = rng.uniform(config.r_min, config.r_max);
    const auto field = draw_scatterers(rng, ue, radius, config.n_scatterers, ref);

    const auto ul = PropagationParams::at_frequency(config.f_ul, config.P, config.P_N);
    const auto dl = PropagationParams::at_frequency(config.f_dl, config.P, config.P_N);
    SpdMatrix true_ul = model_covariance(geometry, field, ul);
    SpdMatrix true_dl = model_covariance(geometry, field, dl);

    SpdMatrix sample_ul = sample_covariance(channel_realizations(true_ul, config.n_realizations, rng));
    SpdMatrix sample_dl = sample_covariance(channel_realizations(true_dl, config.n_realizations, rng));
    return {std::move(sample_ul), std::move(sample_dl), std::move(true_ul), std::move(true_dl), field.distance};
}

Dictionary build_dictionary(const ScenarioConfig &config, const ArrayGeometry &geometry, std::size_t k, Rng &rng)
{
    if (k == 0)
        throw std::invalid_argument("build_dictionary: K must be >= 1");
    std::vector<CovariancePair> pairs;
    pairs.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
    {
        auto draw = build_pair(config, geometry, rng);
        pairs.push_back({std::move(draw.uplink), std::move(draw.downlink)});
    }
    return Dictionary(std::move(pairs));
}

// ---- Benchmark ---------------------------------------------------------

namespace {

std::string sanitize(std::string text)
{
    for (char &ch : text)
        if (ch == ',' || ch == ';' || ch == '\n' || ch == '\r' || ch == '"')
            ch = ' ';
    return text;
}

struct EstimatorOutput
{
    SpdMatrix value;
    std::vector<std::string> flags;
};

EstimatorOutput run_estimator(const EstimatorSpec &spec, const Dictionary &dict, const PairDraw &query,
                              const ScenarioConfig &config, const ArrayGeometry &geometry, Rng &feedback_rng)
{
    if (const auto *s = std::get_if<SchemeSpec>(&spec.kind))
    {
        auto est = estimate_downlink(dict, query.uplink, s->scheme, s->metric);
        return {std::move(est.value), std::move(est.flags)};
    }
    switch (std::get<BaselineKind>(spec.kind))
    {
    case BaselineKind::NoConversion:
        return {no_conversion(query.uplink, query.true_downlink.dim()), {}};
    case BaselineKind::Spline:
    {
        auto conv = spline_convert(query.uplink, geometry, config.f_ul, config.f_dl);
        std::vector<std::string> flags;
        if (conv.clipped)
            flags.emplace_back("psd-clipped");
        return {std::move(conv.value), std::move(flags)};
    }
    case BaselineKind::PerfectFeedback:
        return {perfect_feedback(query.true_downlink, config.n_realizations, feedback_rng), {}};
    }
    throw std::invalid_argument("unknown baseline");
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn &&fn)
{
    threads = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(count, 1))));
    if (threads == 1)
    {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++)
                fn(i);
        });
}

} // namespace

std::vector<ResultRecord> run_benchmark(const ScenarioConfig &config, const RunOptions &options)
{
    config.validate();
    const auto geometry = scenario_geometry(config);
    const auto estimators = config.estimators();

    std::vector<ResultRecord> records;
    for (const std::size_t k : config.dict_sizes)
    {
        for (std::size_t redraw = 0; redraw < config.n_dictionary_redraws; ++redraw)
        {
            Rng dict_rng(derive_seed(config.master_seed, Stream::Dictionary, k, redraw));
            const Dictionary dict = build_dictionary(config, geometry, k, dict_rng);

            std::vector<std::vector<ResultRecord>> per_trial(config.n_queries);
            parallel_for(config.n_queries, options.threads, [&](std::size_t q) {
                const std::size_t trial = redraw * config.n_queries + q;
                Rng query_rng(derive_seed(config.master_seed, Stream::Query, k, trial));
                const PairDraw query = build_pair(config, geometry, query_rng);

                auto &out = per_trial[q];
                for (const auto &spec : estimators)
                {
                    ResultRecord rec{spec.estimator_label(), spec.metric_label(), k, trial, std::nullopt, 0, {}};
                    Rng feedback_rng(derive_seed(config.master_seed, Stream::Feedback, k, trial));
                    const auto start = std::chrono::steady_clock::now();
                    try
                    {
                        auto result = run_estimator(spec, dict, query, config, geometry, feedback_rng);
                        const auto stop = std::chrono::steady_clock::now();
                        const double d = distance(Metric::AffineInvariant, query.true_downlink, result.value);
                        rec.mse = d * d;
                        rec.flags = std::move(result.flags);
                        if (options.record_runtime)
                            rec.runtime_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count();
                    }
                    catch (const std::exception &e)
                    {
                        rec.mse.reset();
                        rec.flags = {"failed", "error:" + sanitize(e.what())};
                    }
                    out.push_back(std::move(rec));
                }
            });
            for (auto &trial_records : per_trial)
                std::move(trial_records.begin(), trial_records.end(), std::back_inserter(records));
        }
    }
    sort_records(records);
    return records;
}

// ---- CSV ---------------------------------------------------------------

void sort_records(std::vector<ResultRecord> &records)
{
    std::stable_sort(records.begin(), records.end(), [](const ResultRecord &a, const ResultRecord &b) {
        return std::tie(a.estimator, a.metric, a.K, a.trial) < std::tie(b.estimator, b.metric, b.K, b.trial);
    });
}

namespace {

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string &s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        out.push_back(cur);
    if (!s.empty() && s.back() == sep)
        out.emplace_back();
    return out;
}

template <typename T>
T parse_number(const std::string &text, const std::string &what)
{
    T value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw std::runtime_error("CSV: malformed " + what + " '" + text + "'");
    return value;
}

} // namespace

std::string records_to_csv(std::vector<ResultRecord> records)
{
    sort_records(records);
    std::string out = "estimator,metric,K,trial,mse,runtime_ns,flags\n";
    for (const auto &r : records)
    {
        out += r.estimator;
        out += ',';
        out += r.metric;
        out += ',';
        out += std::to_string(r.K);
        out += ',';
        out += std::to_string(r.trial);
        out += ',';
        if (r.mse)
            out += format_double(*r.mse);
        out += ',';
        out += std::to_string(r.runtime_ns);
        out += ',';
        for (std::size_t i = 0; i < r.flags.size(); ++i)
        {
            if (i)
                out += ';';
            out += r.flags[i];
        }
        out += '\n';
    }
    return out;
}

void emit_csv(const std::vector<ResultRecord> &records, const std::filesystem::path &path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << records_to_csv(records);
    out.flush();
    if (!out)
        throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<ResultRecord> read_csv(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "estimator,metric,K,trial,mse,runtime_ns,flags")
        throw std::runtime_error("CSV '" + path.string() + "': unexpected header");
    std::vector<ResultRecord> records;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        const auto fields = split(line, ',');
        if (fields.size() != 7)
            throw std::runtime_error("CSV '" + path.string() + "': expected 7 fields in '" + line + "'");
        ResultRecord r;
        r.estimator = fields[0];
        r.metric = fields[1];
        r.K = parse_number<std::size_t>(fields[2], "K");
        r.trial = parse_number<std::size_t>(fields[3], "trial");
        if (!fields[4].empty())
            r.mse = parse_number<double>(fields[4], "mse");
        r.runtime_ns = parse_number<std::int64_t>(fields[5], "runtime_ns");
        if (!fields[6].empty())
            r.flags = split(fields[6], ';');
        records.push_back(std::move(r));
    }
    return records;
}

// ---- Aggregation -------------------------------------------------------

std::vector<SummaryRow> summarize(const std::vector<ResultRecord> &records)
{
    if (records.empty())
        throw std::invalid_argument("summarize: no records");
    struct Acc
    {
        double mse = 0.0, runtime = 0.0;
        std::size_t ok = 0, failed = 0;
    };
    std::map<std::tuple<std::string, std::string, std::size_t>, Acc> cells;
    for (const auto &r : records)
    {
        auto &acc = cells[{r.estimator, r.metric, r.K}];
        if (!r.mse)
        {
            ++acc.failed;
            continue;
        }
        acc.mse += *r.mse;
        acc.runtime += double(r.runtime_ns);
        ++acc.ok;
    }
    std::vector<SummaryRow> rows;
    for (const auto &[key, acc] : cells)
    {
        SummaryRow row{std::get<0>(key), std::get<1>(key), std::get<2>(key), acc.ok, acc.failed, std::nullopt, std::nullopt};
        if (acc.ok > 0)
        {
            row.mean_mse = acc.mse / double(acc.ok);
            row.mean_runtime_ns = acc.runtime / double(acc.ok);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---- Timing ------------------------------------------------------------

std::vector<TimingRow> timing_bench(const ScenarioConfig &config, std::size_t calls)
{
    config.validate();
    calls = std::max<std::size_t>(calls, 50);
    const auto geometry = scenario_geometry(config);
    const std::size_t k = config.dict_sizes.front();

    Rng dict_rng(derive_seed(config.master_seed, Stream::Dictionary, k, 0));
    const Dictionary dict = build_dictionary(config, geometry, k, dict_rng);

    constexpr std::size_t n_queries = 10;
    std::vector<PairDraw> queries;
    for (std::size_t q = 0; q < n_queries; ++q)
    {
        Rng rng(derive_seed(config.master_seed, Stream::Query, k, q));
        queries.push_back(build_pair(config, geometry, rng));
    }

    std::vector<TimingRow> rows;
    for (const auto &spec : config.estimators())
    {
        std::vector<double> times;
        times.reserve(calls);
        for (std::size_t c = 0; c < calls; ++c)
        {
            Rng feedback_rng(derive_seed(config.master_seed, Stream::Feedback, k, c));
            const auto &query = queries[c % n_queries];
            const auto start = std::chrono::steady_clock::now();
            try
            {
                (void)run_estimator(spec, dict, query, config, geometry, feedback_rng);
            }
            catch (const std::exception &)
            {
                break; // estimator not applicable to this scenario
            }
            const auto stop = std::chrono::steady_clock::now();
            times.push_back(double(std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count()));
        }
        if (times.empty())
            continue;
        TimingRow row{spec.estimator_label(), spec.metric_label(), times.size(), 0.0, 0.0};
        for (double t : times)
            row.mean_ns += t / double(times.size());
        std::sort(times.begin(), times.end());
        const std::size_t n = times.size();
        row.median_ns = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
        rows.push_back(row);
    }
    return rows;
}

} // namespace covcast
