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

// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Usage: acceptance [path-to-covcast-cli]

#include "covcast/baselines.hpp"
#include "covcast/harness.hpp"
#include "test_support.hpp"

#include <gsl/gsl_spline.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

using namespace covcast;
using namespace covcast::testing;
namespace fs = std::filesystem;

namespace {

// Collects sub-check results for one criterion.
class Check
{
public:
    void expect(bool ok, const std::string &what)
    {
        if (!ok)
        {
            ++failures_;
            if (failures_ <= 8)
                std::cout << "    failed: " << what << "\n";
        }
        ++count_;
    }
    void note(const std::string &text) { std::cout << "    " << text << "\n"; }
    [[nodiscard]] bool passed() const { return failures_ == 0; }
    [[nodiscard]] std::size_t count() const { return count_; }
    [[nodiscard]] std::size_t failures() const { return failures_; }

private:
    std::size_t count_ = 0, failures_ = 0;
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

int failed_criteria = 0;

void criterion(const std::string &name, double budget_s, const std::function<void(Check &)> &body)
{
    std::cout << "[" << name << "]\n";
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try
    {
        body(c);
    }
    catch (const std::exception &e)
    {
        c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget_s > 0.0)
        c.expect(secs < budget_s, "runtime " + fmt(secs) + " s exceeds " + fmt(budget_s) + " s");
    const bool ok = c.passed();
    failed_criteria += ok ? 0 : 1;
    std::cout << (ok ? "PASS " : "FAIL ") << name << " (" << c.count() - c.failures() << "/" << c.count() << " checks, "
              << fmt(secs) << " s)\n"
              << std::flush;
}

double rel(const CMatrix &a, const CMatrix &b)
{
    return frob(a, b) / std::max(1.0, b.norm());
}

// ---- geometry ----------------------------------------------------------

void geometry_suite(Check &c)
{
    std::size_t instances = 0;
    double worst_inverse = 0, worst_congruence = 0, worst_inversion = 0, worst_karcher = 0, worst_midpoint = 0;
    for (const Eigen::Index n : {2, 4, 10})
    {
        for (std::uint64_t seed = 0; seed < 40; ++seed, ++instances)
        {
            Rng rng(derive_seed(0xACCE55, std::uint64_t(n), seed));
            const auto x = random_spd(n, rng), y = random_spd(n, rng), z = random_spd(n, rng);
            for (const Metric m : all_metrics)
            {
                const double dxy = distance(m, x, y), dyx = distance(m, y, x), dxz = distance(m, x, z),
                             dyz = distance(m, y, z);
                c.expect(distance(m, x, x) < 1e-10, "identity " + to_string(m));
                c.expect(dxy > 0.0, "positivity " + to_string(m));
                c.expect(std::abs(dxy - dyx) < 1e-10 * (1.0 + dxy), "symmetry " + to_string(m));
                c.expect(dxz <= dxy + dyz + 1e-10, "triangle " + to_string(m));

                const double r1 = rel(exp_map(m, x, log_map(m, x, y)).matrix(), y.matrix());
                // keep x + v positive definite for the Euclidean chart (eigenvalues of x exceed 0.5)
                const CMatrix raw = random_hermitian(n, rng).matrix();
                const HermitianTangent v(0.4 * raw / raw.norm());
                const double r2 = frob(log_map(m, x, exp_map(m, x, v)).matrix(), v.matrix()) / std::max(1.0, v.matrix().norm());
                worst_inverse = std::max({worst_inverse, r1, r2});
                c.expect(r1 < 1e-9 && r2 < 1e-9, "exp/log inverse " + to_string(m) + " N=" + std::to_string(n));
            }

            const CMatrix a = random_invertible(n, rng);
            const SpdMatrix ax(a * x.matrix() * a.adjoint()), ay(a * y.matrix() * a.adjoint());
            const double dai = distance(Metric::AffineInvariant, x, y);
            const double cong = std::abs(distance(Metric::AffineInvariant, ax, ay) - dai);
            worst_congruence = std::max(worst_congruence, cong);
            c.expect(cong < 1e-8, "congruence invariance N=" + std::to_string(n));

            const double inv = std::abs(distance(Metric::LogEuclidean, SpdMatrix(inverse(x)), SpdMatrix(inverse(y)))
                                        - distance(Metric::LogEuclidean, x, y));
            worst_inversion = std::max(worst_inversion, inv);
            c.expect(inv < 1e-8, "log-Euclidean inversion invariance N=" + std::to_string(n));

            std::vector<SpdMatrix> pts;
            for (int i = 0; i < 5; ++i)
                pts.push_back(random_spd(n, rng));
            const auto w = random_simplex(pts.size(), rng);
            const auto b = barycenter(Metric::AffineInvariant, pts, w);
            const double res = karcher_residual(b.value, pts, w);
            worst_karcher = std::max(worst_karcher, res);
            c.expect(b.converged && res < 1e-8, "Karcher fixed point N=" + std::to_string(n));

            // two-point mean against the geodesic midpoint x^1/2 (x^-1/2 y x^-1/2)^1/2 x^1/2
            const std::vector<SpdMatrix> two{x, y};
            const std::vector<double> half{0.5, 0.5};
            const CMatrix xs = matrix_sqrt(x).matrix(), xis = matrix_inv_sqrt(x).matrix();
            const CMatrix mid = xs * matrix_sqrt(SpdMatrix(hermitian_part(xis * y.matrix() * xis))).matrix() * xs;
            const double mp = rel(barycenter(Metric::AffineInvariant, two, half).value.matrix(), mid);
            worst_midpoint = std::max(worst_midpoint, mp);
            c.expect(mp < 1e-8, "geodesic midpoint N=" + std::to_string(n));
        }
    }
    c.expect(instances >= 100, "at least 100 instances");
    c.note(std::to_string(instances) + " instances; worst exp/log " + fmt(worst_inverse) + ", congruence " + fmt(worst_congruence)
           + ", inversion " + fmt(worst_inversion) + ", Karcher " + fmt(worst_karcher) + ", midpoint " + fmt(worst_midpoint));
}

// ---- oracles -----------------------------------------------------------

double gsl_eval(const std::vector<double> &x, const std::vector<double> &y, double t)
{
    gsl_spline *s = gsl_spline_alloc(gsl_interp_cspline, x.size());
    gsl_interp_accel *acc = gsl_interp_accel_alloc();
    gsl_spline_init(s, x.data(), y.data(), x.size());
    const double v = gsl_spline_eval(s, t, acc);
    gsl_spline_free(s);
    gsl_interp_accel_free(acc);
    return v;
}

CMatrix scalar_ring(const ArrayGeometry &g, const ScattererField &f, const PropagationParams &p)
{
    const auto n = static_cast<Eigen::Index>(g.size());
    CMatrix r = CMatrix::Zero(n, n);
    const double scale = p.power / (f.distance * f.distance * double(f.scatterers.size()));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
        {
            for (const auto &s : f.scatterers)
            {
                const double di = dist(s, g.positions()[std::size_t(i)]), dj = dist(s, g.positions()[std::size_t(j)]);
                r(i, j) += scale * std::exp(cplx(0.0, 2.0 * M_PI * (di - dj) / p.wavelength));
            }
            if (i == j)
                r(i, j) += p.noise_power;
        }
    return r;
}

void oracle_suite(Check &c)
{
    // simplex QP against exhaustive grids
    double worst_qp = -1e300;
    for (std::size_t k : {2, 3, 4})
        for (std::uint64_t seed = 0; seed < 5; ++seed)
        {
            Rng rng(derive_seed(0x0AC1E, k, seed));
            std::vector<HermitianTangent> tangents;
            for (std::size_t i = 0; i < k; ++i)
                tangents.push_back(random_hermitian(3, rng));
            const Eigen::MatrixXd g = tangent_gram(tangents);
            const double qp = quad_form(g, solve_simplex_qp(g).values());
            const double grid = simplex_grid_min(k, k == 4 ? 0.005 : 0.001, [&](const std::vector<double> &w) { return quad_form(g, w); });
            worst_qp = std::max(worst_qp, qp - grid);
            c.expect(qp - grid < 1e-6, "QP gap K=" + std::to_string(k));
        }

    // bandwidth search against a dense log grid, on simulated dictionaries
    ScenarioConfig cfg;
    cfg.n_scatterers = 200;
    cfg.baselines = {BaselineKind::NoConversion};
    const auto ula = scenario_geometry(cfg);
    double worst_bw = -1e300;
    for (std::uint64_t seed = 0; seed < 6; ++seed)
    {
        Rng rng(derive_seed(0xBA4D, seed));
        const auto dict = build_dictionary(cfg, ula, 20, rng);
        const auto q = build_pair(cfg, ula, rng).uplink;
        for (const Metric m : all_metrics)
        {
            const auto d = uplink_distances(dict, q, m);
            const auto logs = log_maps_from(m, q, dict.uplinks());
            const Eigen::MatrixXd g = tangent_gram(logs);
            const auto sel = select_bandwidth(d, g);
            const auto [lo, hi] = bandwidth_bracket(d);
            double grid = 1e300;
            for (int i = 0; i < 1000; ++i)
                grid = std::min(grid, bandwidth_objective(d, g, std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / 999.0)));
            worst_bw = std::max(worst_bw, sel.objective - grid);
            c.expect(sel.objective - grid < 1e-9, "bandwidth gap " + to_string(m));
            c.expect(std::abs(bandwidth_objective(d, g, sel.sigma) - sel.objective) < 1e-12 * (1.0 + sel.objective),
                     "reported objective matches sigma");
        }
    }

    // ring model against the scalar loop
    double worst_ring = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        Rng rng(derive_seed(0x21A6, seed));
        const auto g = seed % 2 ? make_random_square(10, 0.75, rng) : make_ula(10, 0.083);
        const Point2 ue = place_ue(rng, 100.0, 900.0, g.reference_point());
        const auto f = draw_scatterers(rng, ue, rng.uniform(1.0, 100.0), 200, g.reference_point());
        const auto p = PropagationParams::at_frequency(seed % 3 ? 1.8e9 : 2.8e9, 1e4, 1e-3);
        const double e = (model_covariance(g, f, p).matrix() - scalar_ring(g, f, p)).cwiseAbs().maxCoeff();
        worst_ring = std::max(worst_ring, e);
        c.expect(e < 1e-12, "ring model entrywise");
    }

    // spline dilation against GSL
    double worst_spline = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        Rng rng(derive_seed(0x5F1, seed));
        const auto pair = build_pair(cfg, ula, rng);
        const auto out = spline_convert(pair.uplink, ula, cfg.f_ul, cfg.f_dl);
        const auto lags = toeplitz_lags(pair.uplink.matrix());
        std::vector<double> x, re, im;
        for (std::size_t m = 0; m < lags.size(); ++m)
            x.push_back(double(m)), re.push_back(lags[m].real()), im.push_back(lags[m].imag());
        const double scale = std::abs(lags[0]);
        for (std::size_t m = 1; m < lags.size(); ++m)
        {
            const double t = double(m) * cfg.f_dl / cfg.f_ul;
            const cplx expect(gsl_eval(x, re, t), gsl_eval(x, im, t));
            const double e = std::abs(out.unrepaired(0, Eigen::Index(m)) - expect) / scale;
            worst_spline = std::max(worst_spline, e);
            c.expect(e < 1e-8, "spline dilation lag " + std::to_string(m));
        }
    }
    c.note("worst QP gap " + fmt(worst_qp) + ", bandwidth gap " + fmt(worst_bw) + ", ring " + fmt(worst_ring) + ", spline "
           + fmt(worst_spline));
}

// ---- statistics --------------------------------------------------------

double ks_uniform(std::vector<double> x, double lo, double hi)
{
    std::sort(x.begin(), x.end());
    const double n = double(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const double f = std::clamp((x[i] - lo) / (hi - lo), 0.0, 1.0);
        d = std::max({d, double(i + 1) / n - f, f - double(i) / n});
    }
    return d;
}

void statistical_suite(Check &c)
{
    Rng rng(derive_seed(0x57A7, 0));
    const auto g = make_ula(10, 0.083);
    const auto field = draw_scatterers(rng, place_ue(rng, 100.0, 900.0, g.reference_point()), 30.0, 200, g.reference_point());
    const auto r = model_covariance(g, field, PropagationParams::at_frequency(1.8e9, 1e4, 1e-3));

    std::vector<double> err;
    for (std::size_t l : {100, 1000, 10000})
    {
        double e = 0.0;
        for (int rep = 0; rep < 20; ++rep)
            e += frob(sample_covariance(channel_realizations(r, l, rng)).matrix(), r.matrix()) / r.matrix().norm();
        err.push_back(e / 20.0);
    }
    for (std::size_t i = 0; i + 1 < err.size(); ++i)
    {
        const double ratio = err[i] / err[i + 1];
        c.note("relative error decade ratio " + fmt(ratio) + " (sqrt(10) = 3.162)");
        c.expect(ratio > std::sqrt(10.0) / 2.0 && ratio < 2.0 * std::sqrt(10.0), "decade ratio within factor 2 of sqrt(10)");
    }

    const std::size_t n = 100000;
    const double crit = 1.6276 / std::sqrt(double(n));

    // disk sampler
    const Point2 centre{250.0, -40.0};
    const double radius = 40.0;
    const auto disk = draw_scatterers(rng, centre, radius, n);
    std::vector<double> u;
    double m2 = 0.0, mx = 0.0, my = 0.0;
    for (const auto &p : disk.scatterers)
    {
        const double q = std::pow(dist(p, centre) / radius, 2);
        c.expect(q <= 1.0 + 1e-12, "scatterer inside disk");
        u.push_back(q);
        m2 += q / double(n);
        mx += (p.x - centre.x) / double(n);
        my += (p.y - centre.y) / double(n);
    }
    const double se_q = 1.0 / std::sqrt(12.0 * double(n)), se_xy = radius / 2.0 / std::sqrt(double(n));
    c.expect(std::abs(m2 - 0.5) < 3.0 * se_q, "disk mean squared radius");
    c.expect(std::abs(mx) < 3.0 * se_xy && std::abs(my) < 3.0 * se_xy, "disk centroid");
    const double ks_disk = ks_uniform(u, 0.0, 1.0);
    c.expect(ks_disk < crit, "disk KS");

    // annulus sampler for the UE: distance uniform on [D_min, D_max]
    std::vector<double> d;
    double md = 0.0;
    const Point2 ref{0.3, 0.0};
    for (std::size_t i = 0; i < n; ++i)
    {
        d.push_back(dist(place_ue(rng, 100.0, 900.0, ref), ref));
        md += d.back() / double(n);
    }
    c.expect(std::abs(md - 500.0) < 3.0 * 800.0 / std::sqrt(12.0 * double(n)), "annulus mean distance");
    const double ks_ann = ks_uniform(d, 100.0, 900.0);
    c.expect(ks_ann < crit, "annulus KS");
    c.note("KS disk " + fmt(ks_disk) + ", annulus " + fmt(ks_ann) + ", 1% critical " + fmt(crit));
}

// ---- desk-scale ordering -----------------------------------------------

using MeanTable = std::map<std::string, double>; // "estimator/metric" -> mean mse

MeanTable desk_run(ArrayKind kind, Check &c)
{
    auto cfg = ScenarioConfig::with_defaults();
    cfg.array_kind = kind;
    cfg.n_scatterers = 200;
    cfg.n_realizations = 1000;
    cfg.dict_sizes = {50};
    cfg.n_queries = 200;
    cfg.master_seed = 1;
    const auto records = run_benchmark(cfg, {std::max(1u, std::thread::hardware_concurrency()), false});
    MeanTable t;
    std::size_t flagged = 0;
    for (const auto &row : summarize(records))
        if (row.mean_mse)
            t[row.estimator + "/" + row.metric] = *row.mean_mse;
    for (const auto &r : records)
        flagged += r.flags.empty() ? 0 : 1;
    std::string line = to_string(kind) + ":";
    for (const auto &[k, v] : t)
        line += " " + k + "=" + fmt(v);
    c.note(line);
    c.note(to_string(kind) + ": " + std::to_string(flagged) + " of " + std::to_string(records.size()) + " records carry flags");
    return t;
}

void ordering_checks(const MeanTable &t, ArrayKind kind, Check &c)
{
    const std::string tag = " [" + to_string(kind) + "]";
    auto at = [&](const std::string &k) {
        const auto it = t.find(k);
        if (it == t.end())
            throw std::runtime_error("missing estimator " + k + tag);
        return it->second;
    };
    const double naive = at("no_conversion/none");
    for (const char *s : {"nearest", "mirror", "kernel"})
        for (const Metric m : all_metrics)
        {
            const std::string k = std::string(s) + "/" + to_string(m);
            c.expect(at(k) < naive, "(a) " + k + " beats no_conversion" + tag);
        }
    if (kind == ArrayKind::ULA)
        for (const Metric m : all_metrics)
            c.expect(at("nearest/" + to_string(m)) < at("spline/none"), "(b) nearest/" + to_string(m) + " beats spline" + tag);
    c.expect(at("kernel/log_euclidean") <= at("nearest/log_euclidean"), "(c) kernel/log_euclidean <= nearest/log_euclidean" + tag);
    c.expect(at("mirror/log_euclidean") <= at("nearest/log_euclidean"), "(c) mirror/log_euclidean <= nearest/log_euclidean" + tag);
    c.expect(at("kernel/log_euclidean") < at("kernel/euclidean"), "(d) kernel log_euclidean beats euclidean" + tag);
    c.expect(at("kernel/affine_invariant") < at("kernel/euclidean"), "(d) kernel affine_invariant beats euclidean" + tag);
    const double pf = at("perfect_feedback/none");
    for (const auto &[k, v] : t)
        if (k != "perfect_feedback/none")
            c.expect(pf < v, "(e) perfect_feedback beats " + k + tag);
}

void desk_suite(Check &c)
{
    for (const ArrayKind kind : {ArrayKind::ULA, ArrayKind::RandomSquare})
        ordering_checks(desk_run(kind, c), kind, c);
}

// ---- identical frequency -----------------------------------------------

void identical_frequency(Check &c)
{
    ScenarioConfig cfg;
    cfg.f_ul = cfg.f_dl = 1.8e9;
    cfg.n_realizations = 100000;
    cfg.n_scatterers = 200;
    cfg.dict_sizes = {1};
    cfg.n_queries = 50;
    cfg.baselines = {BaselineKind::NoConversion};
    const auto rows = summarize(run_benchmark(cfg, {std::max(1u, std::thread::hardware_concurrency()), false}));
    c.expect(rows.size() == 1 && rows[0].mean_mse.has_value(), "one summary row");
    const double mse = *rows[0].mean_mse;
    c.note("no_conversion mean mse " + fmt(mse) + " over " + std::to_string(rows[0].count) + " queries");
    c.expect(mse < 1e-2, "mean mse below 1e-2");
}

// ---- determinism -------------------------------------------------------

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism(Check &c, const char *cli)
{
    auto cfg = ScenarioConfig::with_defaults();
    cfg.array_kind = ArrayKind::RandomSquare;
    cfg.n_scatterers = 100;
    cfg.n_realizations = 200;
    cfg.dict_sizes = {10, 20};
    cfg.n_queries = 12;
    cfg.master_seed = 7;

    const auto dir = fs::temp_directory_path() / "covcast_acceptance";
    fs::create_directories(dir);
    const auto cfg_path = dir / "config.json";
    std::ofstream(cfg_path) << config_to_json(cfg).dump(2);

    if (cli)
    {
        std::vector<std::string> outputs;
        for (const unsigned threads : {1u, 4u, 1u})
        {
            const auto out = dir / ("run_" + std::to_string(outputs.size()) + ".csv");
            const std::string cmd = std::string("\"") + cli + "\" run --quiet --config \"" + cfg_path.string() + "\" --out \""
                                    + out.string() + "\" --threads " + std::to_string(threads);
            c.expect(std::system(cmd.c_str()) == 0, "cli exit status");
            outputs.push_back(slurp(out));
        }
        c.expect(!outputs[0].empty(), "non-empty CSV");
        c.expect(outputs[0] == outputs[1], "1 vs 4 threads byte-identical");
        c.expect(outputs[0] == outputs[2], "repeat run byte-identical");
        c.note("CLI CSV " + std::to_string(outputs[0].size()) + " bytes");
    }
    else
        c.note("no CLI path given; checking the library only");

    const auto a = records_to_csv(run_benchmark(load_config(cfg_path), {1, false}));
    const auto b = records_to_csv(run_benchmark(load_config(cfg_path), {3, false}));
    c.expect(a == b, "library CSV identical across thread counts");
}

// ---- timing ------------------------------------------------------------

void timing(Check &c)
{
    ScenarioConfig cfg;
    cfg.n_scatterers = 200;
    cfg.dict_sizes = {50};
    cfg.schemes = {scheme_spec_from_string("nearest/euclidean"), scheme_spec_from_string("nearest/log_euclidean"),
                   scheme_spec_from_string("kernel/affine_invariant")};
    std::map<std::string, double> median;
    for (const auto &row : timing_bench(cfg, 50))
        median[row.estimator + "/" + row.metric] = row.median_ns;
    const double e = median.at("nearest/euclidean"), le = median.at("nearest/log_euclidean"),
                 ai = median.at("kernel/affine_invariant");
    c.note("median ms: nearest/euclidean " + fmt(e * 1e-6) + ", nearest/log_euclidean " + fmt(le * 1e-6)
           + ", kernel/affine_invariant " + fmt(ai * 1e-6));
    c.expect(e < le, "euclidean NN faster than log-Euclidean NN");
    c.expect(le < ai, "log-Euclidean NN faster than affine-invariant kernel");
}

} // namespace

int main(int argc, char **argv)
{
    const char *cli = argc > 1 ? argv[1] : nullptr;
    std::cout << "covcast acceptance\n";
    criterion("geometry suite", 30.0, geometry_suite);
    criterion("oracle suite", 60.0, oracle_suite);
    criterion("statistical suite", 60.0, statistical_suite);
    criterion("desk-scale ordering", 900.0, desk_suite);
    criterion("identical-frequency sanity", 0.0, identical_frequency);
    criterion("determinism", 0.0, [cli](Check &c) { determinism(c, cli); });
    criterion("timing ordering", 0.0, timing);
    std::cout << (failed_criteria == 0 ? "ALL PASS" : std::to_string(failed_criteria) + " criteria FAILED") << "\n";
    return failed_criteria == 0 ? 0 : 1;
}
